//! Genome and corpus data model.
//!
//! An [`Fsg`] maps every file path of one installation to the ordered list
//! of physical block numbers that stored its data. A [`Corpus`] is a set of
//! such genomes over a shared block size, and a [`FileUniverse`] is the set
//! of paths over which genomes are aligned for comparison.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenomeError {
    #[error("duplicate entry: {0}")]
    DuplicatePath(String),
    #[error("duplicate block {block} in one entry")]
    DuplicateBlock { block: u64 },
    #[error("block size must be positive")]
    ZeroBlockSize,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus members disagree on block size ({0} vs {1})")]
    MixedBlockSize(u32, u32),
}

/// Ordered list of physical block numbers used by one file.
///
/// Order is the file's logical block order; a block number appears at most
/// once per list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockList(Vec<u64>);

impl BlockList {
    /// Builds a list, rejecting duplicate block numbers.
    pub fn new(locations: Vec<u64>) -> Result<Self, GenomeError> {
        let mut seen = BTreeSet::new();
        for &b in &locations {
            if !seen.insert(b) {
                return Err(GenomeError::DuplicateBlock { block: b });
            }
        }
        Ok(Self(locations))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<u64> {
        self.0.first().copied()
    }

    /// Copy truncated to at most the first location.
    pub fn first_block_only(&self) -> Self {
        Self(self.0.iter().take(1).copied().collect())
    }
}

impl core::ops::Deref for BlockList {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

/// One installation's genome: path → block locations, ordered by path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fsg {
    pub device_label: String,
    pub volume_uuid: Option<[u8; 16]>,
    pub block_size: u32,
    entries: BTreeMap<String, BlockList>,
}

impl Fsg {
    pub fn new(
        device_label: String,
        volume_uuid: Option<[u8; 16]>,
        block_size: u32,
    ) -> Result<Self, GenomeError> {
        if block_size == 0 {
            return Err(GenomeError::ZeroBlockSize);
        }
        Ok(Self {
            device_label,
            volume_uuid,
            block_size,
            entries: BTreeMap::new(),
        })
    }

    /// Adds one entry; the path must not already be present.
    pub fn insert(&mut self, path: String, blocks: BlockList) -> Result<(), GenomeError> {
        if self.entries.contains_key(&path) {
            return Err(GenomeError::DuplicatePath(path));
        }
        self.entries.insert(path, blocks);
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&BlockList> {
        self.entries.get(path)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.entries.contains_key(path)
    }

    /// Entries in lexicographic path order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &BlockList)> {
        self.entries.iter().map(|(p, b)| (p.as_str(), b))
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy with every block list truncated to its first location.
    ///
    /// Idempotent; paths and device metadata are unchanged.
    pub fn project_first_block(&self) -> Fsg {
        Fsg {
            device_label: self.device_label.clone(),
            volume_uuid: self.volume_uuid,
            block_size: self.block_size,
            entries: self
                .entries
                .iter()
                .map(|(p, b)| (p.clone(), b.first_block_only()))
                .collect(),
        }
    }

    /// Copy keeping only the entries named by `universe`.
    ///
    /// Paths in the universe that the genome does not contain are skipped.
    pub fn restrict(&self, universe: &FileUniverse) -> Fsg {
        Fsg {
            device_label: self.device_label.clone(),
            volume_uuid: self.volume_uuid,
            block_size: self.block_size,
            entries: universe
                .paths()
                .filter_map(|p| self.entries.get_key_value(p))
                .map(|(p, b)| (p.clone(), b.clone()))
                .collect(),
        }
    }
}

/// An ordered set of genomes sharing one block size.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub label: String,
    installations: Vec<Fsg>,
}

impl Corpus {
    pub fn new(label: String, installations: Vec<Fsg>) -> Result<Self, GenomeError> {
        let Some(first) = installations.first() else {
            return Err(GenomeError::EmptyCorpus);
        };
        let block_size = first.block_size;
        for fsg in &installations {
            if fsg.block_size != block_size {
                return Err(GenomeError::MixedBlockSize(block_size, fsg.block_size));
            }
        }
        Ok(Self {
            label,
            installations,
        })
    }

    pub fn installations(&self) -> &[Fsg] {
        &self.installations
    }

    pub fn len(&self) -> usize {
        self.installations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.installations.is_empty()
    }

    pub fn block_size(&self) -> u32 {
        self.installations[0].block_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniverseMode {
    Intersection,
    Union,
}

/// Sorted, deduplicated path set over which genomes are compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileUniverse {
    paths: Vec<String>,
    pub mode: UniverseMode,
}

impl FileUniverse {
    /// Universe from an explicit path list (sorted and deduplicated here).
    pub fn from_paths(paths: Vec<String>, mode: UniverseMode) -> Self {
        let set: BTreeSet<String> = paths.into_iter().collect();
        Self {
            paths: set.into_iter().collect(),
            mode,
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.paths.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn contains(&self, path: &str) -> bool {
        self.paths
            .binary_search_by(|p| p.as_str().cmp(path))
            .is_ok()
    }
}

/// Paths present in every corpus member (intersection) or in any (union).
pub fn file_universe(corpus: &Corpus, mode: UniverseMode) -> FileUniverse {
    let mut iter = corpus.installations().iter();
    let first = iter.next().expect("corpus is never empty");
    let mut set: BTreeSet<String> = first.paths().map(String::from).collect();
    for fsg in iter {
        match mode {
            UniverseMode::Intersection => {
                set.retain(|p| fsg.contains(p));
            }
            UniverseMode::Union => {
                set.extend(fsg.paths().map(String::from));
            }
        }
    }
    FileUniverse {
        paths: set.into_iter().collect(),
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn fsg_with(paths: &[(&str, &[u64])]) -> Fsg {
        let mut fsg = Fsg::new("test".to_string(), None, 4096).unwrap();
        for (p, blocks) in paths {
            fsg.insert(p.to_string(), BlockList::new(blocks.to_vec()).unwrap())
                .unwrap();
        }
        fsg
    }

    #[test]
    fn duplicate_path_rejected() {
        let mut fsg = fsg_with(&[("/a", &[1])]);
        let err = fsg
            .insert("/a".to_string(), BlockList::empty())
            .unwrap_err();
        assert_eq!(err, GenomeError::DuplicatePath("/a".to_string()));
    }

    #[test]
    fn duplicate_block_rejected() {
        assert_eq!(
            BlockList::new(vec![5, 6, 5]).unwrap_err(),
            GenomeError::DuplicateBlock { block: 5 }
        );
    }

    #[test]
    fn entries_iterate_in_path_order() {
        let fsg = fsg_with(&[("/b", &[2]), ("/a", &[1]), ("/c", &[3])]);
        let paths: Vec<&str> = fsg.paths().collect();
        assert_eq!(paths, ["/a", "/b", "/c"]);
    }

    #[test]
    fn project_first_block_truncates_and_preserves_empties() {
        let fsg = fsg_with(&[("/a", &[5, 6, 7]), ("/b", &[])]);
        let p = fsg.project_first_block();
        assert_eq!(p.get("/a").unwrap().as_slice(), &[5]);
        assert!(p.get("/b").unwrap().is_empty());
        // idempotent
        assert_eq!(p.project_first_block(), p);
        // path set and metadata unchanged
        assert_eq!(p.len(), fsg.len());
        assert_eq!(p.device_label, fsg.device_label);
        assert_eq!(p.block_size, fsg.block_size);
    }

    #[test]
    fn project_first_block_idempotent_on_random_genomes() {
        let mut rng = crate::rng::SplitMix64::new(0x9E03);
        for _ in 0..500 {
            let mut fsg = Fsg::new("r".to_string(), None, 4096).unwrap();
            for f in 0..rng.next_below(10) {
                let len = rng.next_below(5) as usize;
                let mut blocks = Vec::with_capacity(len);
                let mut next = rng.next_below(1 << 20);
                for _ in 0..len {
                    blocks.push(next);
                    next += 1 + rng.next_below(16);
                }
                fsg.insert(alloc::format!("/p/{f}"), BlockList::new(blocks).unwrap())
                    .unwrap();
            }
            let once = fsg.project_first_block();
            assert_eq!(once.project_first_block(), once);
            assert_eq!(once.paths().count(), fsg.paths().count());
            for (path, blocks) in once.entries() {
                assert!(blocks.len() <= 1);
                assert_eq!(blocks.first(), fsg.get(path).unwrap().first());
            }
        }
    }

    #[test]
    fn universe_intersection_and_union() {
        let a = fsg_with(&[("/a", &[1]), ("/b", &[2])]);
        let b = fsg_with(&[("/b", &[3]), ("/c", &[4])]);
        let corpus = Corpus::new("c".to_string(), vec![a, b]).unwrap();

        let inter = file_universe(&corpus, UniverseMode::Intersection);
        assert_eq!(inter.paths().collect::<Vec<_>>(), ["/b"]);

        let union = file_universe(&corpus, UniverseMode::Union);
        assert_eq!(union.paths().collect::<Vec<_>>(), ["/a", "/b", "/c"]);

        // intersection ⊆ union
        for p in inter.paths() {
            assert!(union.contains(p));
        }
    }

    #[test]
    fn universe_of_identical_genomes_is_their_path_set() {
        let a = fsg_with(&[("/x", &[1]), ("/y", &[2])]);
        let corpus = Corpus::new("c".to_string(), vec![a.clone(), a]).unwrap();
        let u = file_universe(&corpus, UniverseMode::Intersection);
        assert_eq!(u.paths().collect::<Vec<_>>(), ["/x", "/y"]);
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let a = fsg_with(&[("/a", &[1])]);
        let b = fsg_with(&[("/b", &[2])]);
        let corpus = Corpus::new("c".to_string(), vec![a, b]).unwrap();
        assert!(file_universe(&corpus, UniverseMode::Intersection).is_empty());
    }

    #[test]
    fn corpus_rejects_mixed_block_sizes() {
        let a = Fsg::new("a".to_string(), None, 4096).unwrap();
        let b = Fsg::new("b".to_string(), None, 1024).unwrap();
        assert_eq!(
            Corpus::new("c".to_string(), vec![a, b]).unwrap_err(),
            GenomeError::MixedBlockSize(4096, 1024)
        );
    }

    #[test]
    fn corpus_rejects_empty() {
        assert_eq!(
            Corpus::new("c".to_string(), vec![]).unwrap_err(),
            GenomeError::EmptyCorpus
        );
    }
}
