//! Drivers behind the `por` binary.
//!
//! Every command takes a plain serde config, returns a self-describing report
//! that echoes the seed and the resolved parameters, and never reads the clock,
//! so identical inputs produce byte-identical outputs.

pub mod attack;
pub mod config;
pub mod mine;
pub mod params;
pub mod simulate;
pub mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use por_core::attacksim::AttackError;
use por_core::certmine::CertError;
use por_core::consensus::ConsensusError;
use por_core::reputation::ReputationError;

pub use attack::{cmd_attack, AttackConfig, AttackReport};
pub use config::{ChainSpec, ReputationSpec};
pub use mine::{cmd_mine, MineConfig, MineReport};
pub use params::{cmd_params, ParamsReport};
pub use simulate::{cmd_simulate, MinerSpec, SimulateConfig, SimulationReport};
pub use validate::{cmd_validate, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Reputation(#[from] ReputationError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("output format {format} is not supported by {command}")]
    Format { command: &'static str, format: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// Stable tag for the machine-readable error document.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Reputation(_) => "reputation",
            CliError::Consensus(_) => "consensus",
            CliError::Cert(_) => "certmine",
            CliError::Attack(_) => "attack",
            CliError::Config(_) => "config",
            CliError::Format { .. } => "format",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Io(_) => "io",
        }
    }
}

/// Output encodings selectable with `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV with a header row.
pub fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            out.write_all(bytes)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}
