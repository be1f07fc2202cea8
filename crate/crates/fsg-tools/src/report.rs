//! CSV report emission.
//!
//! All reports use comma separators, a header row, and LF line endings.
//! Floats print in Rust's shortest round-trip form, so identical inputs
//! yield byte-identical reports.

use std::fmt::Write as _;

use fsg_core::genome::FileUniverse;
use fsg_core::metrics::{
    self, CorpusSummary, EntropyReport, HistogramRow, MetricsError, OccurrenceMatrix,
};
use fsg_core::{Corpus, Fsg};

/// Top-level directory class of a scatter row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopDir {
    Boot,
    Etc,
    Lib,
    Root,
    Usr,
    Var,
    Other,
}

impl TopDir {
    pub fn classify(top: &str) -> Self {
        match top {
            "boot" => TopDir::Boot,
            "etc" => TopDir::Etc,
            "lib" => TopDir::Lib,
            "root" => TopDir::Root,
            "usr" => TopDir::Usr,
            "var" => TopDir::Var,
            _ => TopDir::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TopDir::Boot => "boot",
            TopDir::Etc => "etc",
            TopDir::Lib => "lib",
            TopDir::Root => "root",
            TopDir::Usr => "usr",
            TopDir::Var => "var",
            TopDir::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScatterRow {
    /// Position of the file in path order over the whole genome; rows for
    /// files without blocks are omitted but keep their index gap.
    pub file_index: usize,
    pub first_block: u64,
    pub top_dir: TopDir,
}

/// Scatter data: one `(file_index, first block, top dir)` row per file
/// with at least one block, in path order.
pub fn render_genome_scatter(fsg: &Fsg) -> Vec<ScatterRow> {
    fsg.entries()
        .enumerate()
        .filter_map(|(i, (path, blocks))| {
            blocks.first().map(|first_block| ScatterRow {
                file_index: i,
                first_block,
                top_dir: TopDir::classify(
                    path.trim_start_matches('/').split('/').next().unwrap_or(""),
                ),
            })
        })
        .collect()
}

pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("file_index,first_block_location,top_dir\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.file_index,
            r.first_block,
            r.top_dir.as_str()
        );
    }
    out
}

pub fn entropy_csv(report: &EntropyReport) -> String {
    let mut out = String::from("path,shannon_bits,min_entropy_bits\n");
    for (path, e) in &report.per_file {
        let _ = writeln!(out, "{},{},{}", path, e.shannon_bits, e.min_entropy_bits);
    }
    out
}

pub fn histogram_csv(rows: &[HistogramRow]) -> String {
    let mut out = String::from("bucket,count,percent\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.bucket, r.count, r.percent);
    }
    out
}

pub fn summary_csv(per_install: &[(String, CorpusSummary)]) -> String {
    let mut out = String::from("device_label,total_files,total_blocks,required_space_bytes\n");
    for (label, s) in per_install {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            label, s.total_files, s.total_blocks, s.required_space
        );
    }
    out
}

/// Per-file CDFs of every universe file, flattened to
/// `path,location,cumulative_probability` rows.
pub fn cdf_csv(matrix: &OccurrenceMatrix, universe: &FileUniverse) -> Result<String, MetricsError> {
    let mut out = String::from("path,location,cumulative_probability\n");
    for path in universe.paths() {
        if matrix.slots(path) == 0 {
            continue;
        }
        for (loc, cum) in metrics::location_cdf(matrix, path)? {
            let _ = writeln!(out, "{path},{loc},{cum}");
        }
    }
    Ok(out)
}

/// All pairwise Hamming distances of a corpus, upper triangle.
pub fn hamming_csv(corpus: &Corpus, universe: &FileUniverse) -> Result<String, MetricsError> {
    let mut out = String::from("label_a,label_b,distance\n");
    let installs = corpus.installations();
    for i in 0..installs.len() {
        for j in (i + 1)..installs.len() {
            let d = metrics::hamming_distance(&installs[i], &installs[j], universe)?;
            let _ = writeln!(
                out,
                "{},{},{}",
                installs[i].device_label, installs[j].device_label, d
            );
        }
    }
    Ok(out)
}
