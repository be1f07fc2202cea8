//! Synthetic installation generator.
//!
//! Reproduces, at desk scale, the mechanisms that make real installations
//! lay files out differently each time: writes land in a cache and physical
//! locations are only chosen when a sync fires, sync timing is random,
//! pending blocks are clustered by size class with per-CPU goals for small
//! files and per-file goals for large ones, goal misses fall back to a
//! randomly drawn group, and bad blocks are excluded from allocation.
//!
//! A run is a pure function of `(config, seed)`. The exact rules, which any
//! reimplementation must follow to reproduce genomes bit for bit:
//!
//! 1. Files of the plan are written in order; every write is split into
//!    single-block requests. Each request either increments the pending
//!    count of the file's open cache entry or opens a new entry whose
//!    `arrival` is the global write counter at that moment. The counter
//!    advances on every request.
//! 2. After each request, a sync fires iff `u * sync_mean_writes < 1` with
//!    `u` the next [`rng::SplitMix64`] float of the run (seeded with the
//!    run seed). One final sync runs after the plan is exhausted.
//! 3. A sync partitions the cache, in entry-creation order, into
//!    allocation units: an entry with `pending >= small_file_threshold`
//!    forms its own unit targeting the file's goal; smaller entries join
//!    the unit of cpu slot `arrival % cpu_slots`, targeting that slot's
//!    shared goal.
//! 4. Each unit, in order, takes the first contiguous free run of its total
//!    size found at or after its goal, scanning upward and wrapping to
//!    block 0 at the disk end (runs never straddle the end). Members of the
//!    unit receive consecutive blocks in entry order. The unit's goal is
//!    then set one past the allocated run.
//! 5. When no run fits anywhere, the goal is re-drawn as the start of a
//!    uniformly random group (`next_u64 % group_count`, one draw per miss)
//!    and the unit falls back to block-by-block first-fit from there,
//!    wrapping once; exhausting the disk is an error naming the file being
//!    placed. The goal is then set to the cursor after the last block.
//!
//! Initial goals: cpu slot `s` starts at group `s % group_count`; a file's
//! goal starts at the group assigned round-robin to its top-level
//! directory in order of first appearance in the plan, which approximates
//! how top-level directories are spread across block groups.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::genome::{BlockList, Corpus, Fsg, GenomeError};
use crate::rng::{mix_seed, SplitMix64};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("disk full at path {0}")]
    DiskFull(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

/// One file of the installation plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedFile {
    pub path: String,
    /// Size in blocks; zero-block files produce empty genome entries.
    pub blocks: u64,
}

/// Parameters of the synthetic installation generator.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub disk_blocks: u64,
    pub block_size: u32,
    pub file_plan: Vec<PlannedFile>,
    /// Mean number of write operations between sync events.
    pub sync_mean_writes: f64,
    /// Per-CPU locality groups for small-file clustering.
    pub cpu_slots: u32,
    /// Blocks per allocation group; must divide `disk_blocks`.
    pub group_size: u64,
    /// Pending-block count from which an entry gets a per-file goal.
    pub small_file_threshold: u64,
    pub bad_blocks: BTreeSet<u64>,
    /// Default base seed; runs may override it with an explicit seed.
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.disk_blocks == 0 {
            return Err(SimError::InvalidConfig("disk_blocks must be positive"));
        }
        if self.block_size == 0 {
            return Err(SimError::InvalidConfig("block_size must be positive"));
        }
        if self.group_size == 0 || !self.disk_blocks.is_multiple_of(self.group_size) {
            return Err(SimError::InvalidConfig(
                "group_size must divide disk_blocks",
            ));
        }
        if self.cpu_slots == 0 {
            return Err(SimError::InvalidConfig("cpu_slots must be at least 1"));
        }
        if self.sync_mean_writes <= 0.0 || !self.sync_mean_writes.is_finite() {
            return Err(SimError::InvalidConfig(
                "sync_mean_writes must be positive and finite",
            ));
        }
        if self.bad_blocks.iter().any(|&b| b >= self.disk_blocks) {
            return Err(SimError::InvalidConfig("bad block beyond disk end"));
        }
        let mut seen = BTreeSet::new();
        for f in &self.file_plan {
            if f.path.is_empty() {
                return Err(SimError::InvalidConfig("empty path in file plan"));
            }
            if !seen.insert(f.path.as_str()) {
                return Err(SimError::InvalidConfig("duplicate path in file plan"));
            }
        }
        Ok(())
    }

    pub fn group_count(&self) -> u64 {
        self.disk_blocks / self.group_size
    }
}

#[derive(Debug, Clone, Copy)]
struct CacheEntry {
    file: usize,
    pending: u64,
    arrival: u64,
}

enum UnitGoal {
    File(usize),
    Slot(usize),
}

struct Unit {
    goal: UnitGoal,
    members: Vec<(usize, u64)>,
}

struct SimState<'a> {
    cfg: &'a SimConfig,
    free: Vec<bool>,
    genome: Vec<Vec<u64>>,
    cache: Vec<CacheEntry>,
    open_entry: Vec<Option<usize>>,
    slot_goal: Vec<u64>,
    file_goal: Vec<u64>,
    rng: SplitMix64,
}

impl<'a> SimState<'a> {
    fn new(cfg: &'a SimConfig, seed: u64) -> Self {
        let mut free = vec![true; cfg.disk_blocks as usize];
        for &b in &cfg.bad_blocks {
            free[b as usize] = false;
        }
        let groups = cfg.group_count();
        let slot_goal = (0..cfg.cpu_slots as u64)
            .map(|s| (s % groups) * cfg.group_size)
            .collect();
        // top-level directories get goal groups round-robin in order of
        // first appearance
        let mut dir_group: BTreeMap<&str, u64> = BTreeMap::new();
        let mut file_goal = Vec::with_capacity(cfg.file_plan.len());
        for f in &cfg.file_plan {
            let top = top_component(&f.path);
            let next = dir_group.len() as u64;
            let g = *dir_group.entry(top).or_insert(next);
            file_goal.push((g % groups) * cfg.group_size);
        }
        Self {
            cfg,
            free,
            genome: vec![Vec::new(); cfg.file_plan.len()],
            cache: Vec::new(),
            open_entry: vec![None; cfg.file_plan.len()],
            slot_goal,
            file_goal,
            rng: SplitMix64::new(seed),
        }
    }

    fn record_write(&mut self, file: usize, write_counter: u64) {
        match self.open_entry[file] {
            Some(idx) => self.cache[idx].pending += 1,
            None => {
                self.open_entry[file] = Some(self.cache.len());
                self.cache.push(CacheEntry {
                    file,
                    pending: 1,
                    arrival: write_counter,
                });
            }
        }
    }

    fn flush(&mut self) -> Result<(), SimError> {
        let mut units: Vec<Unit> = Vec::new();
        let mut slot_unit: BTreeMap<usize, usize> = BTreeMap::new();
        for entry in &self.cache {
            if entry.pending >= self.cfg.small_file_threshold {
                units.push(Unit {
                    goal: UnitGoal::File(entry.file),
                    members: vec![(entry.file, entry.pending)],
                });
            } else {
                let slot = (entry.arrival % self.cfg.cpu_slots as u64) as usize;
                match slot_unit.get(&slot) {
                    Some(&i) => units[i].members.push((entry.file, entry.pending)),
                    None => {
                        slot_unit.insert(slot, units.len());
                        units.push(Unit {
                            goal: UnitGoal::Slot(slot),
                            members: vec![(entry.file, entry.pending)],
                        });
                    }
                }
            }
        }
        self.cache.clear();
        self.open_entry.fill(None);

        for unit in units {
            let total: u64 = unit.members.iter().map(|&(_, p)| p).sum();
            let goal = match unit.goal {
                UnitGoal::File(f) => self.file_goal[f],
                UnitGoal::Slot(s) => self.slot_goal[s],
            };
            let new_goal = match find_free_run(&self.free, total, goal) {
                Some(start) => {
                    let mut at = start;
                    for &(file, pending) in &unit.members {
                        for _ in 0..pending {
                            self.free[at as usize] = false;
                            self.genome[file].push(at);
                            at += 1;
                        }
                    }
                    at % self.cfg.disk_blocks
                }
                None => {
                    let group = self.rng.next_below(self.cfg.group_count());
                    let mut cursor = group * self.cfg.group_size;
                    for &(file, pending) in &unit.members {
                        for _ in 0..pending {
                            cursor = self.take_first_free(cursor, file)?;
                        }
                    }
                    cursor
                }
            };
            match unit.goal {
                UnitGoal::File(f) => self.file_goal[f] = new_goal,
                UnitGoal::Slot(s) => self.slot_goal[s] = new_goal,
            }
        }
        Ok(())
    }

    /// First-fit a single block at or after `cursor`, wrapping once.
    /// Returns the cursor position after the allocated block.
    fn take_first_free(&mut self, cursor: u64, file: usize) -> Result<u64, SimError> {
        let d = self.cfg.disk_blocks;
        let mut at = cursor;
        let start = cursor;
        loop {
            if self.free[at as usize] {
                self.free[at as usize] = false;
                self.genome[file].push(at);
                return Ok((at + 1) % d);
            }
            at = (at + 1) % d;
            if at == start {
                return Err(SimError::DiskFull(self.cfg.file_plan[file].path.clone()));
            }
        }
    }
}

fn top_component(path: &str) -> &str {
    path.trim_start_matches('/').split('/').next().unwrap_or("")
}

/// First start position of `n` consecutive free blocks at or after `goal`,
/// wrapping the search (not the run) at the disk end.
fn find_free_run(free: &[bool], n: u64, goal: u64) -> Option<u64> {
    let d = free.len() as u64;
    if n == 0 || n > d {
        return None;
    }
    let scan = |from: u64, until: u64| -> Option<u64> {
        let mut p = from;
        'candidates: while p + n <= d && p < until {
            for i in 0..n {
                if !free[(p + i) as usize] {
                    p = p + i + 1;
                    continue 'candidates;
                }
            }
            return Some(p);
        }
        None
    };
    scan(goal, d).or_else(|| scan(0, goal))
}

/// Runs one installation; the genome is a pure function of `(cfg, seed)`.
pub fn simulate_installation(cfg: &SimConfig, seed: u64) -> Result<Fsg, SimError> {
    cfg.validate()?;
    let mut state = SimState::new(cfg, seed);
    let mut write_counter = 0u64;
    for (file, planned) in cfg.file_plan.iter().enumerate() {
        for _ in 0..planned.blocks {
            state.record_write(file, write_counter);
            write_counter += 1;
            if state.rng.next_f64() * cfg.sync_mean_writes < 1.0 {
                state.flush()?;
            }
        }
    }
    state.flush()?;

    let mut fsg = Fsg::new(format!("sim-{seed:016x}"), None, cfg.block_size)?;
    for (planned, blocks) in cfg.file_plan.iter().zip(state.genome) {
        fsg.insert(planned.path.clone(), BlockList::new(blocks)?)?;
    }
    Ok(fsg)
}

/// Runs `n` installations with seeds derived by [`mix_seed`], labeled
/// `install-0` .. `install-(n-1)`.
pub fn simulate_corpus(cfg: &SimConfig, n: usize, base_seed: u64) -> Result<Corpus, SimError> {
    let mut installs = Vec::with_capacity(n);
    for i in 0..n {
        let mut fsg = simulate_installation(cfg, mix_seed(base_seed, i as u64))?;
        fsg.device_label = format!("install-{i}");
        installs.push(fsg);
    }
    Ok(Corpus::new(format!("sim-{base_seed:016x}"), installs)?)
}

/// Percent targets of the bundled file plan's block-count mix, by
/// histogram bucket.
pub const STANDARD_MIX_PERCENTS: [f64; 7] = [91.35, 7.94, 0.58, 0.09, 0.01, 0.015, 0.0];

/// A file plan of `files` entries whose block-count mix matches
/// [`STANDARD_MIX_PERCENTS`] to within one percentage point per bucket.
///
/// Sizes and positions are deterministic. Paths cycle through the usual
/// top-level system directories so directory-based goal spreading and
/// scatter reports have something to chew on.
pub fn standard_mix_plan(files: usize) -> Vec<PlannedFile> {
    const DIRS: [&str; 6] = ["usr", "lib", "etc", "var", "boot", "root"];
    // (bucket base size, size stride, size span)
    const BUCKETS: [(u64, u64, u64); 7] = [
        (1, 1, 9),
        (10, 7, 90),
        (100, 37, 400),
        (500, 61, 500),
        (1000, 97, 1000),
        (2000, 131, 2000),
        (4000, 173, 2000),
    ];
    let n = files;
    let mut counts = [0usize; 7];
    for b in 1..7 {
        counts[b] = libm::round(STANDARD_MIX_PERCENTS[b] / 100.0 * n as f64) as usize;
    }
    let big: usize = counts[1..].iter().sum();
    counts[0] = n.saturating_sub(big);

    // spread the larger buckets across the plan deterministically
    let mut bucket_of = vec![0usize; n];
    let mut claimed = vec![false; n];
    for b in (1..7).rev() {
        if counts[b] == 0 {
            continue;
        }
        let step = (n / counts[b]).max(1);
        for j in 0..counts[b] {
            let mut idx = (b * 17 + j * step) % n;
            while claimed[idx] {
                idx = (idx + 1) % n;
            }
            claimed[idx] = true;
            bucket_of[idx] = b;
        }
    }

    let mut per_bucket_seen = [0u64; 7];
    (0..n)
        .map(|i| {
            let b = bucket_of[i];
            let (base, stride, span) = BUCKETS[b];
            let k = per_bucket_seen[b];
            per_bucket_seen[b] += 1;
            PlannedFile {
                path: format!("/{}/file-{i:05}", DIRS[i % DIRS.len()]),
                blocks: base + (k * stride) % span,
            }
        })
        .collect()
}

/// The bundled default configuration around [`standard_mix_plan`]: disk
/// sized to roughly two-thirds fill, 1024-block groups, four cpu slots,
/// a sync on average every third write.
pub fn standard_mix_config(files: usize) -> SimConfig {
    let file_plan = standard_mix_plan(files);
    let total: u64 = file_plan.iter().map(|f| f.blocks).sum();
    let group_size = 1024;
    let disk_blocks = (total * 3 / 2).div_ceil(group_size).max(2) * group_size;
    SimConfig {
        disk_blocks,
        block_size: 4096,
        file_plan,
        sync_mean_writes: 3.0,
        cpu_slots: 4,
        group_size,
        small_file_threshold: 16,
        bad_blocks: BTreeSet::new(),
        seed: 1,
    }
}
