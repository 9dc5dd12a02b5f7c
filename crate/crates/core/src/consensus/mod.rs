//! Block headers, targets and chain validation.

mod chain;
pub mod header;
pub mod schedule;
pub mod target;

use thiserror::Error;

use crate::fixed::FixedFrac;

pub use chain::{read_chain_ndjson, write_chain_ndjson, ChainConfig, ChainState, HeaderRecord, RejectReason};
pub use header::{sha256d, BlockHeader, Hash32, HeaderTemplate, HEADER_LEN, PREIMAGE_LEN, SIGNATURE_LEN};
pub use schedule::{effective_total_bonus, TransitionSchedule};
pub use target::{tailored_difficulty, tailored_target, Difficulty};

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("target must be at least 1")]
    ZeroTarget,
    #[error("miner bonus {0} must be below 1")]
    BonusTooLarge(FixedFrac),
    #[error("invalid transition schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("block at height {height} rejected: {reason}")]
    Rejected { height: u64, reason: RejectReason },
    #[error("malformed chain record: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
