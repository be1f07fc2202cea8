//! Simulator configuration files (JSON).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fsg_core::allocsim::{PlannedFile, SimConfig};

/// JSON shape of a [`SimConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfigFile {
    pub disk_blocks: u64,
    pub block_size: u32,
    pub file_plan: Vec<PlanEntry>,
    pub sync_mean_writes: f64,
    pub cpu_slots: u32,
    pub group_size: u64,
    pub small_file_threshold: u64,
    #[serde(default)]
    pub bad_blocks: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanEntry {
    pub path: String,
    pub blocks: u64,
}

impl SimConfigFile {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            disk_blocks: cfg.disk_blocks,
            block_size: cfg.block_size,
            file_plan: cfg
                .file_plan
                .iter()
                .map(|f| PlanEntry {
                    path: f.path.clone(),
                    blocks: f.blocks,
                })
                .collect(),
            sync_mean_writes: cfg.sync_mean_writes,
            cpu_slots: cfg.cpu_slots,
            group_size: cfg.group_size,
            small_file_threshold: cfg.small_file_threshold,
            bad_blocks: cfg.bad_blocks.iter().copied().collect(),
            seed: cfg.seed,
        }
    }

    pub fn into_config(self) -> SimConfig {
        SimConfig {
            disk_blocks: self.disk_blocks,
            block_size: self.block_size,
            file_plan: self
                .file_plan
                .into_iter()
                .map(|f| PlannedFile {
                    path: f.path,
                    blocks: f.blocks,
                })
                .collect(),
            sync_mean_writes: self.sync_mean_writes,
            cpu_slots: self.cpu_slots,
            group_size: self.group_size,
            small_file_threshold: self.small_file_threshold,
            bad_blocks: BTreeSet::from_iter(self.bad_blocks),
            seed: self.seed,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<SimConfig> {
        let text = std::fs::read_to_string(path)?;
        let file: SimConfigFile = serde_json::from_str(&text)?;
        Ok(file.into_config())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsg_core::allocsim::standard_mix_config;

    #[test]
    fn config_json_round_trip() {
        let cfg = standard_mix_config(50);
        let json = SimConfigFile::from_config(&cfg).to_json_pretty();
        let back: SimConfigFile = serde_json::from_str(&json).unwrap();
        let back = back.into_config();
        assert_eq!(back.disk_blocks, cfg.disk_blocks);
        assert_eq!(back.file_plan, cfg.file_plan);
        assert_eq!(back.sync_mean_writes, cfg.sync_mean_writes);
        assert_eq!(back.bad_blocks, cfg.bad_blocks);
    }

    #[test]
    fn bad_blocks_and_seed_are_optional() {
        let json = r#"{
            "disk_blocks": 64, "block_size": 4096,
            "file_plan": [{"path": "/a", "blocks": 2}],
            "sync_mean_writes": 2.0, "cpu_slots": 1,
            "group_size": 16, "small_file_threshold": 4
        }"#;
        let file: SimConfigFile = serde_json::from_str(json).unwrap();
        let cfg = file.into_config();
        assert!(cfg.bad_blocks.is_empty());
        assert_eq!(cfg.seed, 0);
        cfg.validate().unwrap();
    }
}
