//! Config pieces shared by several commands.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use por_core::consensus::{ChainConfig, TransitionSchedule};
use por_core::{ReputationParams, U256};

use crate::CliError;

/// Reputation parameters, either designed from a halving period or given in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReputationSpec {
    Halving { halving_blocks: u64, total_bonus: f64 },
    Explicit(ReputationParams),
}

impl ReputationSpec {
    pub fn resolve(&self) -> Result<ReputationParams, CliError> {
        match *self {
            ReputationSpec::Halving { halving_blocks, total_bonus } => {
                Ok(ReputationParams::from_halving(halving_blocks, total_bonus)?)
            }
            ReputationSpec::Explicit(params) => Ok(params),
        }
    }
}

/// Consensus rules as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Base target `D` as hex.
    pub base_target: U256,
    pub reputation: ReputationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<TransitionSchedule>,
}

impl ChainSpec {
    pub fn resolve(&self) -> Result<ChainConfig, CliError> {
        let config = ChainConfig {
            base_target: self.base_target,
            reputation: self.reputation.resolve()?,
            schedule: self.schedule,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Reads a JSON config file.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
