//! Enrolled-set persistence: a directory of FSG files plus a JSON
//! manifest naming the labels, the reference universe, and the decision
//! threshold.
//!
//! ```text
//! enrolled/
//!   manifest.json       {"format":"fsg-enroll/1","labels":[...],
//!                        "reference_universe":[...],"threshold":0.9}
//!   <label>.fsg         one fingerprint per label
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fsg_core::genome::UniverseMode;
use fsg_core::matcher::{EnrolledSet, MatcherError};
use fsg_core::FileUniverse;

use crate::fsgfile::{self, FsgFileError};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const ENROLL_FORMAT: &str = "fsg-enroll/1";

#[derive(Debug, Error)]
pub enum EnrollError {
    #[error("io error")]
    Io(#[from] std::io::Error),
    #[error("bad manifest")]
    Manifest(#[from] serde_json::Error),
    #[error("not an enrolled-set manifest (format {0:?})")]
    WrongFormat(String),
    #[error("label {0:?} is not usable as a file name")]
    BadLabel(String),
    #[error(transparent)]
    FsgFile(#[from] FsgFileError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    labels: Vec<String>,
    reference_universe: Vec<String>,
    threshold: f64,
}

fn label_is_safe(label: &str) -> bool {
    !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Writes the set and its manifest into `dir` (created if missing).
pub fn save_enrolled_set(dir: &Path, set: &EnrolledSet, threshold: f64) -> Result<(), EnrollError> {
    std::fs::create_dir_all(dir)?;
    for label in set.labels() {
        if !label_is_safe(label) {
            return Err(EnrollError::BadLabel(label.to_string()));
        }
    }
    for label in set.labels() {
        let fingerprint = set.fingerprint(label).expect("label from set");
        fsgfile::write_fsg_file(fingerprint, &dir.join(format!("{label}.fsg")))?;
    }
    let manifest = Manifest {
        format: ENROLL_FORMAT.to_string(),
        labels: set.labels().map(String::from).collect(),
        reference_universe: set.reference_universe().paths().map(String::from).collect(),
        threshold,
    };
    std::fs::write(
        dir.join(MANIFEST_NAME),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}

/// Loads a directory written by [`save_enrolled_set`]; returns the set and
/// the manifest's threshold.
pub fn load_enrolled_set(dir: &Path) -> Result<(EnrolledSet, f64), EnrollError> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_NAME))?)?;
    if manifest.format != ENROLL_FORMAT {
        return Err(EnrollError::WrongFormat(manifest.format));
    }
    let universe =
        FileUniverse::from_paths(manifest.reference_universe, UniverseMode::Intersection);
    let mut fingerprints = Vec::with_capacity(manifest.labels.len());
    for label in manifest.labels {
        if !label_is_safe(&label) {
            return Err(EnrollError::BadLabel(label));
        }
        let fsg = fsgfile::read_fsg_file(&dir.join(format!("{label}.fsg")))?;
        fingerprints.push((label, fsg));
    }
    let set = EnrolledSet::new(fingerprints, universe)?;
    Ok((set, manifest.threshold))
}
