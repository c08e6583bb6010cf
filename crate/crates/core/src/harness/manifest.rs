use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::evolve::{ep_csv_name, CHECKPOINT_DIR, METRICS_FILE, TELEMETRY_FILE};
use crate::seed::DERIVATION_TABLE;

use super::{ExperimentConfig, HarnessError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveInfo {
    pub name: String,
    pub label: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRule {
    pub tag: String,
    pub description: String,
}

/// Written to the output directory before any training starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created: String,
    pub algorithm: String,
    pub threads: usize,
    pub config: ExperimentConfig,
    pub objectives: Vec<ObjectiveInfo>,
    /// Keyed substreams: SHA-256 over (seed, tag, indices) seeds a ChaCha8 generator.
    pub seed_derivation: Vec<SeedRule>,
    /// Every file the run writes, relative to the output directory.
    /// Directories end in `/`.
    pub outputs: Vec<String>,
}

pub fn default_objectives() -> Vec<ObjectiveInfo> {
    vec![
        ObjectiveInfo {
            name: "f1".into(),
            label: "sum rate".into(),
            unit: "bit/s/Hz".into(),
        },
        ObjectiveInfo {
            name: "f2".into(),
            label: "negative propulsion energy".into(),
            unit: "J".into(),
        },
    ]
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, threads: usize) -> Self {
        let mut outputs = vec![MANIFEST_FILE.to_string(), TELEMETRY_FILE.to_string(), METRICS_FILE.to_string()];
        outputs.extend((0..=config.evolution.generations as u64).map(ep_csv_name));
        outputs.push(format!("{CHECKPOINT_DIR}/"));
        Self {
            tool: "uvaa".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created: chrono::Utc::now().to_rfc3339(),
            algorithm: config.ablation.algorithm_tag().into(),
            threads,
            config: config.clone(),
            objectives: default_objectives(),
            seed_derivation: DERIVATION_TABLE
                .iter()
                .map(|(tag, d)| SeedRule {
                    tag: (*tag).into(),
                    description: (*d).into(),
                })
                .collect(),
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(HarnessError::runtime)?;
        std::fs::write(&path, text).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))
    }

    /// Whether a top-level entry of the output directory is declared.
    pub fn declares(&self, entry: &str, is_dir: bool) -> bool {
        let key = if is_dir { format!("{entry}/") } else { entry.to_string() };
        self.outputs.contains(&key)
    }
}
