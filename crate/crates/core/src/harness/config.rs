use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::evolve::EvolutionConfig;
use crate::moppo::{NetworkConfig, PpoConfig};

use super::HarnessError;

/// Swarm size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Eight UAVs.
    Small,
    /// Sixteen UAVs.
    Large,
    /// `env.n_uav` as given.
    Custom,
}

impl Scenario {
    pub fn n_uav(self) -> Option<usize> {
        match self {
            Scenario::Small => Some(8),
            Scenario::Large => Some(16),
            Scenario::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationFlags {
    /// Dense tanh trunk instead of the recurrent layer.
    pub disable_lstm: bool,
    /// Greedy best-per-weight selection instead of sector roulette.
    pub disable_hypersphere: bool,
}

impl AblationFlags {
    pub fn algorithm_tag(&self) -> &'static str {
        match (self.disable_lstm, self.disable_hypersphere) {
            (false, false) => "emoppo-vlh",
            (true, false) => "no-lstm",
            (false, true) => "no-hypersphere",
            (true, true) => "no-lstm-no-hypersphere",
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub ablation: AblationFlags,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parse JSON, naming the offending key on failure.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::InvalidConfig(format!("at '{path}': {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Environment with the scenario's swarm size applied.
    pub fn resolved_env(&self) -> EnvConfig {
        let mut env = self.env.clone();
        if let Some(n) = self.scenario.n_uav() {
            env.n_uav = n;
        }
        env
    }

    pub fn resolved_network(&self) -> NetworkConfig {
        NetworkConfig {
            disable_lstm: self.ablation.disable_lstm,
            ..self.network.clone()
        }
    }

    pub fn resolved_evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            disable_hypersphere: self.ablation.disable_hypersphere,
            ..self.evolution.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |e: String| HarnessError::InvalidConfig(e);
        self.resolved_env().validate().map_err(|e| invalid(e.to_string()))?;
        self.ppo.validate().map_err(|e| invalid(e.to_string()))?;
        self.evolution.validate().map_err(|e| invalid(e.to_string()))?;
        if self.network.first_hidden == 0 || self.network.hidden.contains(&0) {
            return Err(invalid("network widths must be >= 1".into()));
        }
        Ok(())
    }
}
