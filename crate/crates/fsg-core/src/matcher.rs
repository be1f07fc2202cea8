//! Forensic decisions over genome comparison: pairwise similarity,
//! identification against an enrolled set, and ownership verification over
//! a declared read-only file universe.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::genome::{FileUniverse, Fsg};
use crate::metrics::{self, MetricsError};

/// Default decision threshold. Simulated corpora show self-scores of 1.0
/// and cross-scores near 0, so the margin around this value is wide; it is
/// a documented default, not a claimed optimum.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error, PartialEq)]
pub enum MatcherError {
    #[error("empty file universe")]
    EmptyUniverse,
    #[error("empty reference universe")]
    EmptyReferenceUniverse,
    #[error("enrolled set is empty")]
    EmptyEnrolledSet,
    #[error("candidate incomplete: missing {}", .missing.join(", "))]
    CandidateIncomplete { missing: Vec<String> },
    #[error("fingerprint {label} does not cover the reference universe (missing {path})")]
    FingerprintIncomplete { label: String, path: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Similarity of two genomes over a universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchScore {
    /// `1 - raw_distance / slots`; 1.0 when there are no slots to compare.
    pub similarity: f64,
    pub raw_distance: u64,
    /// Compared (file, position) slots: `Σ_f max(|a_f|, |b_f|)`.
    pub slots: u64,
}

/// Normalized Hamming similarity over the universe.
pub fn similarity(a: &Fsg, b: &Fsg, universe: &FileUniverse) -> Result<MatchScore, MatcherError> {
    if universe.is_empty() {
        return Err(MatcherError::EmptyUniverse);
    }
    let (raw_distance, slots) = metrics::pairwise_stats(a, b, universe)?;
    let similarity = if slots == 0 {
        1.0
    } else {
        1.0 - raw_distance as f64 / slots as f64
    };
    Ok(MatchScore {
        similarity,
        raw_distance,
        slots,
    })
}

/// Reference fingerprints for identification, each restricted to a shared
/// reference universe at construction.
#[derive(Debug, Clone)]
pub struct EnrolledSet {
    fingerprints: BTreeMap<String, Fsg>,
    reference_universe: FileUniverse,
}

impl EnrolledSet {
    /// Builds the set, checking every fingerprint covers the universe.
    pub fn new(
        fingerprints: impl IntoIterator<Item = (String, Fsg)>,
        reference_universe: FileUniverse,
    ) -> Result<Self, MatcherError> {
        if reference_universe.is_empty() {
            return Err(MatcherError::EmptyReferenceUniverse);
        }
        let mut map = BTreeMap::new();
        for (label, fsg) in fingerprints {
            for path in reference_universe.paths() {
                if !fsg.contains(path) {
                    return Err(MatcherError::FingerprintIncomplete {
                        label,
                        path: String::from(path),
                    });
                }
            }
            map.insert(label, fsg.restrict(&reference_universe));
        }
        if map.is_empty() {
            return Err(MatcherError::EmptyEnrolledSet);
        }
        Ok(Self {
            fingerprints: map,
            reference_universe,
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.fingerprints.keys().map(String::as_str)
    }

    pub fn fingerprint(&self, label: &str) -> Option<&Fsg> {
        self.fingerprints.get(label)
    }

    pub fn reference_universe(&self) -> &FileUniverse {
        &self.reference_universe
    }

    pub fn len(&self) -> usize {
        self.fingerprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdentifyDecision {
    /// Best score reached the threshold. `tied` is set when another label
    /// scored the same; the lexicographically smallest label is reported.
    Matched {
        label: String,
        score: MatchScore,
        tied: bool,
    },
    Unmatched {
        best_score: MatchScore,
    },
}

/// Scores the candidate against every enrolled fingerprint over the
/// reference universe and applies the threshold to the best score.
pub fn identify(
    candidate: &Fsg,
    enrolled: &EnrolledSet,
    threshold: f64,
) -> Result<IdentifyDecision, MatcherError> {
    let universe = &enrolled.reference_universe;
    let missing: Vec<String> = universe
        .paths()
        .filter(|p| !candidate.contains(p))
        .map(String::from)
        .collect();
    if !missing.is_empty() {
        return Err(MatcherError::CandidateIncomplete { missing });
    }

    let mut best: Option<(&str, MatchScore)> = None;
    let mut tied = false;
    for (label, fingerprint) in &enrolled.fingerprints {
        let score = similarity(candidate, fingerprint, universe)?;
        match &best {
            Some((_, top)) if score.similarity == top.similarity => tied = true,
            Some((_, top)) if score.similarity > top.similarity => {
                best = Some((label, score));
                tied = false;
            }
            None => best = Some((label, score)),
            _ => {}
        }
    }
    let (label, score) = best.expect("enrolled set is never empty");
    if score.similarity >= threshold {
        Ok(IdentifyDecision::Matched {
            label: String::from(label),
            score,
            tied,
        })
    } else {
        Ok(IdentifyDecision::Unmatched { best_score: score })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyDecision {
    Accept(MatchScore),
    Reject(MatchScore),
}

impl VerifyDecision {
    pub fn score(&self) -> MatchScore {
        match *self {
            VerifyDecision::Accept(s) | VerifyDecision::Reject(s) => s,
        }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, VerifyDecision::Accept(_))
    }
}

/// Ownership check restricted to the declared read-only universe.
///
/// Candidate files outside the universe are ignored, so modifications made
/// after the reference genome was recorded do not affect the decision.
pub fn verify_ownership(
    candidate: &Fsg,
    reference: &Fsg,
    readonly_universe: &FileUniverse,
    threshold: f64,
) -> Result<VerifyDecision, MatcherError> {
    if readonly_universe.is_empty() {
        return Err(MatcherError::EmptyReferenceUniverse);
    }
    let score = similarity(candidate, reference, readonly_universe)?;
    if score.similarity >= threshold {
        Ok(VerifyDecision::Accept(score))
    } else {
        Ok(VerifyDecision::Reject(score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{BlockList, UniverseMode};
    use alloc::string::ToString;
    use alloc::vec;

    fn fsg_from(label: &str, entries: &[(&str, &[u64])]) -> Fsg {
        let mut fsg = Fsg::new(label.to_string(), None, 4096).unwrap();
        for (p, blocks) in entries {
            fsg.insert(p.to_string(), BlockList::new(blocks.to_vec()).unwrap())
                .unwrap();
        }
        fsg
    }

    fn universe(paths: &[&str]) -> FileUniverse {
        FileUniverse::from_paths(
            paths.iter().map(|p| p.to_string()).collect(),
            UniverseMode::Intersection,
        )
    }

    #[test]
    fn self_similarity_is_one() {
        let x = fsg_from("x", &[("/a", &[1, 2]), ("/b", &[3])]);
        let u = universe(&["/a", "/b"]);
        let s = similarity(&x, &x, &u).unwrap();
        assert_eq!(s.similarity, 1.0);
        assert_eq!(s.raw_distance, 0);
        assert_eq!(s.slots, 3);
    }

    #[test]
    fn disjoint_locations_score_zero() {
        let x = fsg_from("x", &[("/a", &[1, 2])]);
        let y = fsg_from("y", &[("/a", &[8, 9])]);
        let u = universe(&["/a"]);
        assert_eq!(similarity(&x, &y, &u).unwrap().similarity, 0.0);
    }

    #[test]
    fn half_matching_slots_score_half() {
        // 4 slots, 2 equal
        let x = fsg_from("x", &[("/a", &[1, 2, 3, 4])]);
        let y = fsg_from("y", &[("/a", &[1, 2, 8, 9])]);
        let u = universe(&["/a"]);
        let s = similarity(&x, &y, &u).unwrap();
        assert_eq!(s.slots, 4);
        assert_eq!(s.raw_distance, 2);
        assert_eq!(s.similarity, 0.5);
    }

    #[test]
    fn similarity_is_symmetric() {
        let x = fsg_from("x", &[("/a", &[1, 2, 3]), ("/b", &[7])]);
        let y = fsg_from("y", &[("/a", &[1, 9]), ("/b", &[8])]);
        let u = universe(&["/a", "/b"]);
        assert_eq!(
            similarity(&x, &y, &u).unwrap(),
            similarity(&y, &x, &u).unwrap()
        );
    }

    #[test]
    fn empty_universe_rejected() {
        let x = fsg_from("x", &[]);
        let u = universe(&[]);
        assert_eq!(
            similarity(&x, &x, &u).unwrap_err(),
            MatcherError::EmptyUniverse
        );
    }

    fn enrolled_pair() -> (EnrolledSet, Fsg, Fsg) {
        let a = fsg_from("a", &[("/a", &[1]), ("/b", &[2])]);
        let b = fsg_from("b", &[("/a", &[5]), ("/b", &[6])]);
        let u = universe(&["/a", "/b"]);
        let set = EnrolledSet::new(
            [
                ("dev-a".to_string(), a.clone()),
                ("dev-b".to_string(), b.clone()),
            ],
            u,
        )
        .unwrap();
        (set, a, b)
    }

    #[test]
    fn identify_own_genome_matches_with_score_one() {
        let (set, a, _) = enrolled_pair();
        match identify(&a, &set, 0.9).unwrap() {
            IdentifyDecision::Matched { label, score, tied } => {
                assert_eq!(label, "dev-a");
                assert_eq!(score.similarity, 1.0);
                assert!(!tied);
            }
            other => panic!("expected match, got {other:?}"),
        }
        // any threshold <= 1 still matches the member itself
        assert!(matches!(
            identify(&a, &set, 1.0).unwrap(),
            IdentifyDecision::Matched { .. }
        ));
    }

    #[test]
    fn identify_below_threshold_is_unmatched() {
        let (set, _, _) = enrolled_pair();
        let stranger = fsg_from("s", &[("/a", &[100]), ("/b", &[200])]);
        match identify(&stranger, &set, 0.9).unwrap() {
            IdentifyDecision::Unmatched { best_score } => {
                assert!(best_score.similarity < 0.9);
            }
            other => panic!("expected unmatched, got {other:?}"),
        }
    }

    #[test]
    fn identify_reports_ties_on_smallest_label() {
        let a = fsg_from("a", &[("/a", &[1])]);
        let u = universe(&["/a"]);
        let set = EnrolledSet::new(
            [
                ("dev-b".to_string(), a.clone()),
                ("dev-a".to_string(), a.clone()),
            ],
            u,
        )
        .unwrap();
        match identify(&a, &set, 0.5).unwrap() {
            IdentifyDecision::Matched { label, tied, .. } => {
                assert_eq!(label, "dev-a");
                assert!(tied);
            }
            other => panic!("expected tied match, got {other:?}"),
        }
    }

    #[test]
    fn identify_incomplete_candidate_lists_missing_paths() {
        let (set, _, _) = enrolled_pair();
        let partial = fsg_from("p", &[("/a", &[1])]);
        assert_eq!(
            identify(&partial, &set, 0.9).unwrap_err(),
            MatcherError::CandidateIncomplete {
                missing: vec!["/b".to_string()]
            }
        );
    }

    #[test]
    fn verify_ignores_files_outside_universe() {
        let reference = fsg_from("r", &[("/ro/a", &[1]), ("/ro/b", &[2]), ("/var/x", &[3])]);
        // modified outside the read-only universe
        let mut candidate = fsg_from("c", &[("/ro/a", &[1]), ("/ro/b", &[2])]);
        candidate
            .insert("/var/x".to_string(), BlockList::new(vec![99]).unwrap())
            .unwrap();
        candidate
            .insert("/var/new".to_string(), BlockList::new(vec![123]).unwrap())
            .unwrap();
        let ro = universe(&["/ro/a", "/ro/b"]);
        let decision = verify_ownership(&candidate, &reference, &ro, 0.9).unwrap();
        assert!(decision.is_accept());
        assert_eq!(decision.score().similarity, 1.0);
    }

    #[test]
    fn verify_threshold_zero_always_accepts() {
        let reference = fsg_from("r", &[("/a", &[1])]);
        let forged = fsg_from("f", &[("/a", &[999])]);
        let ro = universe(&["/a"]);
        assert!(verify_ownership(&forged, &reference, &ro, 0.0)
            .unwrap()
            .is_accept());
    }

    #[test]
    fn verify_empty_universe_rejected() {
        let reference = fsg_from("r", &[]);
        let ro = universe(&[]);
        assert_eq!(
            verify_ownership(&reference, &reference, &ro, 0.5).unwrap_err(),
            MatcherError::EmptyReferenceUniverse
        );
    }

    #[test]
    fn restricting_universe_never_raises_distance() {
        let x = fsg_from("x", &[("/a", &[1, 2]), ("/b", &[3, 4])]);
        let y = fsg_from("y", &[("/a", &[1, 9]), ("/b", &[8, 4])]);
        let full = universe(&["/a", "/b"]);
        let narrow = universe(&["/a"]);
        let d_full = similarity(&x, &y, &full).unwrap().raw_distance;
        let d_narrow = similarity(&x, &y, &narrow).unwrap().raw_distance;
        assert!(d_narrow <= d_full);
    }

    #[test]
    fn enrolled_set_requires_coverage() {
        let a = fsg_from("a", &[("/a", &[1])]);
        let u = universe(&["/a", "/b"]);
        let err = EnrolledSet::new([("dev-a".to_string(), a)], u).unwrap_err();
        assert_eq!(
            err,
            MatcherError::FingerprintIncomplete {
                label: "dev-a".to_string(),
                path: "/b".to_string()
            }
        );
    }
}
