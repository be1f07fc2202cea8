//! Quantitative apparatus over genome corpora.
//!
//! The central object is the [`OccurrenceMatrix`]: for every file it counts
//! how often each block location was used across the installations of a
//! corpus. Shannon entropy, min-entropy, and per-file location CDFs are all
//! read off that matrix. Genome-to-genome comparison is a positionwise
//! Hamming distance.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::genome::{Corpus, FileUniverse, Fsg};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty file universe")]
    EmptyUniverse,
    #[error("file not in matrix: {0}")]
    FileNotInMatrix(String),
    #[error("file has no recorded locations: {0}")]
    NoObservations(String),
    #[error("degenerate support")]
    DegenerateSupport,
    #[error("location {location} outside support")]
    LocationOutsideSupport { location: u64 },
    #[error("file absent from genome: {0}")]
    FileAbsent(String),
}

/// Per-file histogram of block-location usage across a corpus.
///
/// A *slot* is one counted (file, position) pair: in full mode every block
/// position of every installation contributes a slot, in first-block mode at
/// most one slot per installation. Only observed locations are stored; an
/// absent location has count zero.
#[derive(Debug, Clone)]
pub struct OccurrenceMatrix {
    per_file: BTreeMap<String, BTreeMap<u64, u64>>,
    slots_per_file: BTreeMap<String, u64>,
    num_installations: usize,
}

impl OccurrenceMatrix {
    pub fn num_installations(&self) -> usize {
        self.num_installations
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.per_file.keys().map(String::as_str)
    }

    pub fn counts(&self, path: &str) -> Option<&BTreeMap<u64, u64>> {
        self.per_file.get(path)
    }

    pub fn slots(&self, path: &str) -> u64 {
        self.slots_per_file.get(path).copied().unwrap_or(0)
    }
}

/// Counts location usage per file over the universe.
///
/// Files a universe names but an installation lacks are counted only where
/// present; `slots_per_file` records how many (file, position) observations
/// were actually made, so union-mode universes are handled transparently.
pub fn build_occurrence_matrix(
    corpus: &Corpus,
    universe: &FileUniverse,
    first_block_only: bool,
) -> Result<OccurrenceMatrix, MetricsError> {
    if universe.is_empty() {
        return Err(MetricsError::EmptyUniverse);
    }
    let mut per_file: BTreeMap<String, BTreeMap<u64, u64>> = BTreeMap::new();
    let mut slots_per_file: BTreeMap<String, u64> = BTreeMap::new();
    for path in universe.paths() {
        per_file.insert(String::from(path), BTreeMap::new());
        slots_per_file.insert(String::from(path), 0);
    }
    for fsg in corpus.installations() {
        for path in universe.paths() {
            let Some(blocks) = fsg.get(path) else {
                continue;
            };
            let taken = if first_block_only { 1 } else { blocks.len() };
            let counts = per_file.get_mut(path).expect("pre-seeded");
            let mut observed = 0u64;
            for &loc in blocks.iter().take(taken) {
                *counts.entry(loc).or_insert(0) += 1;
                observed += 1;
            }
            *slots_per_file.get_mut(path).expect("pre-seeded") += observed;
        }
    }
    Ok(OccurrenceMatrix {
        per_file,
        slots_per_file,
        num_installations: corpus.len(),
    })
}

/// One per-file score set plus how many zero-slot files were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyScores {
    pub per_file: BTreeMap<String, f64>,
    pub corpus_size: usize,
    pub skipped_files: usize,
}

/// Per-file Shannon and min-entropy, in bits.
///
/// For every file observed once per installation,
/// `0 <= min_entropy_bits <= shannon_bits`; in first-block mode over fully
/// present files both are bounded by `log2(corpus_size)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub per_file: BTreeMap<String, FileEntropy>,
    pub corpus_size: usize,
    pub skipped_files: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FileEntropy {
    pub shannon_bits: f64,
    pub min_entropy_bits: f64,
}

/// Min-entropy estimator: `-log2(v / |I|)` where `v` is the count of the
/// most frequent location and `|I|` the number of installations.
///
/// Dividing by the installation count rather than the location-domain size
/// makes this a lower bound on the generating process's min-entropy. Files
/// with zero recorded slots are excluded and tallied in `skipped_files`.
pub fn min_entropy_per_file(m: &OccurrenceMatrix) -> EntropyScores {
    let mut per_file = BTreeMap::new();
    let mut skipped = 0;
    for (path, counts) in &m.per_file {
        let Some(v) = counts.values().max() else {
            skipped += 1;
            continue;
        };
        let p = *v as f64 / m.num_installations as f64;
        per_file.insert(path.clone(), -libm::log2(p));
    }
    EntropyScores {
        per_file,
        corpus_size: m.num_installations,
        skipped_files: skipped,
    }
}

/// Shannon entropy `-Σ p log2 p` with `p = count / slots` per file.
pub fn shannon_entropy_per_file(m: &OccurrenceMatrix) -> EntropyScores {
    let mut per_file = BTreeMap::new();
    let mut skipped = 0;
    for (path, counts) in &m.per_file {
        let slots = m.slots(path);
        if slots == 0 {
            skipped += 1;
            continue;
        }
        let mut bits = 0.0;
        for &c in counts.values() {
            let p = c as f64 / slots as f64;
            bits -= p * libm::log2(p);
        }
        per_file.insert(path.clone(), bits);
    }
    EntropyScores {
        per_file,
        corpus_size: m.num_installations,
        skipped_files: skipped,
    }
}

/// Both entropies in one report.
pub fn entropy_report(m: &OccurrenceMatrix) -> EntropyReport {
    let min = min_entropy_per_file(m);
    let shannon = shannon_entropy_per_file(m);
    let mut per_file = BTreeMap::new();
    for (path, min_bits) in &min.per_file {
        let shannon_bits = shannon.per_file[path];
        per_file.insert(
            path.clone(),
            FileEntropy {
                shannon_bits,
                min_entropy_bits: *min_bits,
            },
        );
    }
    EntropyReport {
        per_file,
        corpus_size: m.num_installations,
        skipped_files: min.skipped_files,
    }
}

/// Empirical CDF of one file's locations: `(location, cumulative)` pairs in
/// ascending location order; the final cumulative probability is 1.
pub fn location_cdf(m: &OccurrenceMatrix, path: &str) -> Result<Vec<(u64, f64)>, MetricsError> {
    let counts = m
        .counts(path)
        .ok_or_else(|| MetricsError::FileNotInMatrix(String::from(path)))?;
    let slots = m.slots(path);
    if slots == 0 {
        return Err(MetricsError::NoObservations(String::from(path)));
    }
    let mut cdf = Vec::with_capacity(counts.len());
    let mut cum = 0u64;
    for (&loc, &c) in counts {
        cum += c;
        cdf.push((loc, cum as f64 / slots as f64));
    }
    Ok(cdf)
}

/// Sup-norm distance between an empirical CDF and the uniform CDF over
/// `support` (a half-open block interval).
pub fn ks_distance_to_uniform(
    cdf: &[(u64, f64)],
    support: Range<u64>,
) -> Result<f64, MetricsError> {
    if support.end <= support.start {
        return Err(MetricsError::DegenerateSupport);
    }
    let a = support.start as f64;
    let width = (support.end - support.start) as f64;
    let mut dist = 0.0f64;
    let mut prev = 0.0f64;
    for &(loc, cum) in cdf {
        if !support.contains(&loc) {
            return Err(MetricsError::LocationOutsideSupport { location: loc });
        }
        let u = (loc as f64 - a) / width;
        dist = dist.max(u - prev).max(cum - u);
        prev = cum;
    }
    // gap on the tail interval up to the support's right edge
    Ok(dist.max(1.0 - prev))
}

/// Block-count interval of one histogram row; `hi` is inclusive, `None`
/// means unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCountBucket {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl BlockCountBucket {
    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && self.hi.is_none_or(|hi| n <= hi)
    }
}

impl core::fmt::Display for BlockCountBucket {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "{}-{}", self.lo, hi),
            None => write!(f, "{}+", self.lo),
        }
    }
}

/// The fixed bucket layout of the block-count histogram. The final bucket
/// is closed below at 4000 and unbounded above so the buckets partition
/// every possible count.
pub const BLOCK_COUNT_BUCKETS: [BlockCountBucket; 7] = [
    BlockCountBucket { lo: 0, hi: Some(9) },
    BlockCountBucket {
        lo: 10,
        hi: Some(99),
    },
    BlockCountBucket {
        lo: 100,
        hi: Some(499),
    },
    BlockCountBucket {
        lo: 500,
        hi: Some(999),
    },
    BlockCountBucket {
        lo: 1000,
        hi: Some(1999),
    },
    BlockCountBucket {
        lo: 2000,
        hi: Some(3999),
    },
    BlockCountBucket { lo: 4000, hi: None },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRow {
    pub bucket: BlockCountBucket,
    pub count: usize,
    pub percent: f64,
}

/// How many files consist of how many blocks, per bucket, with percentages
/// over the total file count. Expects full block lists, not a first-block
/// projection.
pub fn block_count_histogram(fsg: &Fsg) -> Vec<HistogramRow> {
    let mut counts = [0usize; BLOCK_COUNT_BUCKETS.len()];
    for (_, blocks) in fsg.entries() {
        let n = blocks.len() as u64;
        let idx = BLOCK_COUNT_BUCKETS
            .iter()
            .position(|b| b.contains(n))
            .expect("buckets partition all counts");
        counts[idx] += 1;
    }
    let total = fsg.len();
    BLOCK_COUNT_BUCKETS
        .iter()
        .zip(counts)
        .map(|(&bucket, count)| HistogramRow {
            bucket,
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSummary {
    pub total_files: u64,
    pub total_blocks: u64,
    /// `total_blocks * block_size`, in bytes.
    pub required_space: u64,
}

/// Aggregate size of one installation's genome.
pub fn corpus_summary(fsg: &Fsg) -> CorpusSummary {
    let total_blocks: u64 = fsg.entries().map(|(_, b)| b.len() as u64).sum();
    CorpusSummary {
        total_files: fsg.len() as u64,
        total_blocks,
        required_space: total_blocks * fsg.block_size as u64,
    }
}

/// Positionwise Hamming distance between two genomes over a universe.
///
/// Per file, positions `0..min(|a|,|b|)` compare unequal locations and the
/// length difference counts one mismatch per missing position; file totals
/// are summed over the universe. Equivalent to padding both lists to equal
/// length with a reserved symbol, so it satisfies the triangle inequality.
pub fn hamming_distance(a: &Fsg, b: &Fsg, universe: &FileUniverse) -> Result<u64, MetricsError> {
    Ok(pairwise_stats(a, b, universe)?.0)
}

/// `(hamming distance, compared slots)` where slots is
/// `Σ_f max(|a_f|, |b_f|)`. Shared by [`hamming_distance`] and the matcher.
pub fn pairwise_stats(
    a: &Fsg,
    b: &Fsg,
    universe: &FileUniverse,
) -> Result<(u64, u64), MetricsError> {
    let mut distance = 0u64;
    let mut slots = 0u64;
    for path in universe.paths() {
        let la = a
            .get(path)
            .ok_or_else(|| MetricsError::FileAbsent(String::from(path)))?;
        let lb = b
            .get(path)
            .ok_or_else(|| MetricsError::FileAbsent(String::from(path)))?;
        let common = la.len().min(lb.len());
        distance += la.iter().zip(lb.iter()).filter(|(x, y)| x != y).count() as u64;
        distance += (la.len().max(lb.len()) - common) as u64;
        slots += la.len().max(lb.len()) as u64;
    }
    Ok((distance, slots))
}
