//! Core library for file-system genome analysis.
//!
//! A *genome* is the per-file list of physical block locations an ext4
//! installation ended up using. This crate extracts genomes from raw ext4
//! images, measures how diverse a corpus of genomes is (Shannon entropy,
//! min-entropy, per-file location CDFs, Hamming distance), decides whether
//! two genomes come from the same device, and generates synthetic corpora
//! with a seeded allocator simulator.
//!
//! The crate is `no_std` + `alloc`; all IO, file formats, and the CLI live
//! in the companion `fsg-tools` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod allocsim;
pub mod ext4;
pub mod genome;
pub mod matcher;
pub mod metrics;
pub mod rng;

pub use genome::{BlockList, Corpus, FileUniverse, Fsg, UniverseMode};
