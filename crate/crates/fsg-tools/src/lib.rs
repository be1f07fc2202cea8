//! IO companion to `fsg-core`: genome file format, debugfs-dump ingest,
//! enrolled-set persistence, simulator config files, CSV reports, and the
//! `fsg` command-line tool.

pub mod cli;
pub mod enroll;
pub mod fsgfile;
pub mod report;
pub mod simconfig;
