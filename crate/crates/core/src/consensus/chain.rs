//! Chain state and block validation under the reputation rules.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::header::{BlockHeader, Hash32, SIGNATURE_LEN};
use super::schedule::{effective_total_bonus, scale_bonus, TransitionSchedule};
use super::target::tailored_target;
use super::ConsensusError;
use crate::certmine::verify_header;
use crate::fixed::FixedFrac;
use crate::reputation::{ExponentialBonus, MinerId, ReputationLedger, ReputationParams};
use crate::u256::U256;

/// Why a block was refused. The `Display` form is the stable machine-readable tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    BadLink,
    BadHeight,
    BadSignature,
    InsufficientWork,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::BadLink => "bad-link",
            RejectReason::BadHeight => "bad-height",
            RejectReason::BadSignature => "bad-signature",
            RejectReason::InsufficientWork => "insufficient-work",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::error::Error for RejectReason {}

/// Consensus configuration: constant base target plus the reputation rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub base_target: U256,
    pub reputation: ReputationParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<TransitionSchedule>,
}

impl ChainConfig {
    pub fn new(base_target: U256, reputation: ReputationParams) -> Self {
        ChainConfig { base_target, reputation, schedule: None }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.base_target.is_zero() {
            return Err(ConsensusError::ZeroTarget);
        }
        if let Some(schedule) = &self.schedule {
            schedule.validate()?;
            if schedule.final_total_bonus > self.reputation.total_bonus_fixed() {
                return Err(ConsensusError::InvalidSchedule(format!(
                    "final_total_bonus {} exceeds the reputation total {}",
                    schedule.final_total_bonus,
                    self.reputation.total_bonus_fixed()
                )));
            }
        }
        Ok(())
    }

    /// The configured schedule, or the full bonus from genesis on.
    pub fn effective_schedule(&self) -> TransitionSchedule {
        self.schedule.unwrap_or_else(|| TransitionSchedule::immediate(self.reputation.total_bonus_fixed()))
    }
}

/// An accepted chain, starting from the fixed genesis header.
#[derive(Debug, Clone)]
pub struct ChainState {
    config: ChainConfig,
    schedule: TransitionSchedule,
    headers: Vec<BlockHeader>,
    ledger: ReputationLedger,
}

impl ChainState {
    pub fn new(config: ChainConfig) -> Result<ChainState, ConsensusError> {
        let sequence = Arc::new(ExponentialBonus::new(config.reputation));
        Self::with_sequence(config, sequence)
    }

    /// Like [`new`](Self::new) but reuses an already built bonus table.
    pub fn with_sequence(config: ChainConfig, sequence: Arc<ExponentialBonus>) -> Result<ChainState, ConsensusError> {
        config.validate()?;
        if *sequence.params() != config.reputation {
            return Err(ConsensusError::InvalidConfig("bonus table built for different parameters".into()));
        }
        let mut ledger = ReputationLedger::new(sequence);
        ledger.advance_unattributed();
        Ok(ChainState { schedule: config.effective_schedule(), config, headers: vec![BlockHeader::genesis()], ledger })
    }

    /// Replays `headers` (genesis excluded) on top of a fresh state.
    pub fn from_headers<I>(config: ChainConfig, headers: I) -> Result<ChainState, ConsensusError>
    where
        I: IntoIterator<Item = BlockHeader>,
    {
        let mut state = ChainState::new(config)?;
        for header in headers {
            let height = header.height;
            state.append(header).map_err(|reason| ConsensusError::Rejected { height, reason })?;
        }
        Ok(state)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn tip_height(&self) -> u64 {
        self.headers.len() as u64 - 1
    }

    pub fn tip(&self) -> &BlockHeader {
        self.headers.last().expect("genesis is always present")
    }

    pub fn tip_hash(&self) -> Hash32 {
        self.tip().hash()
    }

    /// All headers including genesis.
    pub fn headers(&self) -> &[BlockHeader] {
        &self.headers
    }

    pub fn ledger(&self) -> &ReputationLedger {
        &self.ledger
    }

    /// Bonus `miner` may use for the next block: its ledger bonus at the
    /// current tip, scaled by the transition schedule at the next height.
    pub fn effective_bonus(&self, miner: &MinerId) -> FixedFrac {
        let height = self.tip_height() + 1;
        scale_bonus(
            self.ledger.miner_bonus(miner),
            effective_total_bonus(&self.schedule, height),
            self.config.reputation.total_bonus_fixed(),
        )
    }

    /// Target `miner` must beat for the next block.
    pub fn target_for(&self, miner: &MinerId) -> U256 {
        tailored_target(self.config.base_target, self.effective_bonus(miner))
            .expect("ledger bonuses stay below the network total, which is below 1")
    }

    /// Checks `header` as the next block. Reputation is read at the parent tip,
    /// so a block never counts towards its own target.
    pub fn validate_block(&self, header: &BlockHeader) -> Result<(), RejectReason> {
        if header.parent_hash != self.tip_hash() {
            return Err(RejectReason::BadLink);
        }
        if header.height != self.tip_height() + 1 {
            return Err(RejectReason::BadHeight);
        }
        if !verify_header(&header.coinbase_address, &header.preimage(), &header.header_signature) {
            return Err(RejectReason::BadSignature);
        }
        if header.pow_value() >= self.target_for(&header.coinbase_address) {
            return Err(RejectReason::InsufficientWork);
        }
        Ok(())
    }

    /// Validates and appends. On rejection the state is untouched.
    pub fn append(&mut self, header: BlockHeader) -> Result<(), RejectReason> {
        self.validate_block(&header)?;
        self.ledger.advance(&header.coinbase_address);
        self.headers.push(header);
        Ok(())
    }
}

/// One line of a chain export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderRecord {
    pub height: u64,
    pub parent_hash: Hash32,
    pub payload_commitment: Hash32,
    pub timestamp: u64,
    pub nonce: u64,
    pub coinbase_address: MinerId,
    pub header_signature: String,
}

impl From<&BlockHeader> for HeaderRecord {
    fn from(h: &BlockHeader) -> Self {
        HeaderRecord {
            height: h.height,
            parent_hash: h.parent_hash,
            payload_commitment: h.payload_commitment,
            timestamp: h.timestamp,
            nonce: h.nonce,
            coinbase_address: h.coinbase_address,
            header_signature: hex::encode(h.header_signature),
        }
    }
}

impl TryFrom<HeaderRecord> for BlockHeader {
    type Error = ConsensusError;

    fn try_from(r: HeaderRecord) -> Result<Self, Self::Error> {
        let mut header_signature = [0u8; SIGNATURE_LEN];
        hex::decode_to_slice(&r.header_signature, &mut header_signature)
            .map_err(|e| ConsensusError::Format(format!("header_signature: {e}")))?;
        Ok(BlockHeader {
            height: r.height,
            parent_hash: r.parent_hash,
            payload_commitment: r.payload_commitment,
            timestamp: r.timestamp,
            nonce: r.nonce,
            coinbase_address: r.coinbase_address,
            header_signature,
        })
    }
}

/// Writes headers as newline-delimited JSON, one header per line.
pub fn write_chain_ndjson<'a, W, I>(mut out: W, headers: I) -> Result<(), ConsensusError>
where
    W: Write,
    I: IntoIterator<Item = &'a BlockHeader>,
{
    for header in headers {
        serde_json::to_writer(&mut out, &HeaderRecord::from(header))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a chain export. Blank lines are skipped.
pub fn read_chain_ndjson<R: BufRead>(input: R) -> Result<Vec<BlockHeader>, ConsensusError> {
    let mut headers = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: HeaderRecord =
            serde_json::from_str(&line).map_err(|e| ConsensusError::Format(format!("line {}: {e}", idx + 1)))?;
        headers.push(BlockHeader::try_from(record)?);
    }
    Ok(headers)
}
