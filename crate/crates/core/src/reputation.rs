//! Reputation bonus sequence and the per-miner reputation ledger.
//!
//! A miner that mined the block `n` levels below the current tip earns the
//! bonus `λₙ = λ₀·e^(−χn)`. The bonuses of all blocks a miner produced add up
//! to its total bonus `Λ(x)`, and summed over every miner they give the
//! network bonus `Λ = λ₀/(1 − e^(−χ))`.
//!
//! Everything the consensus rules read is fixed-point ([`FixedFrac`]); the
//! `f64` helpers in this module are for parameter design and reporting.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fixed::{FixedFrac, HighPrec};

/// Default truncation depth, in half-lives of the bonus sequence.
pub const WINDOW_HALF_LIVES: u64 = 20;

/// Bound on the mass of the sequence beyond the window, relative to `Λ`.
pub const MAX_TAIL_FRACTION: f64 = 1e-6;

const TOTAL_BONUS_REL_TOL: f64 = 1e-12;

// Re-anchor the table on a direct exponential this often.
const ANCHOR_STRIDE: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReputationError {
    #[error("lambda0 must lie in (0, 1), got {0}")]
    Lambda0OutOfRange(f64),
    #[error("decay rate chi must be positive and finite, got {0}")]
    InvalidChi(f64),
    #[error("total bonus must lie in (0, 1), got {0}")]
    TotalBonusOutOfRange(f64),
    #[error("total bonus {given} disagrees with lambda0/(1-e^-chi) = {expected}")]
    InconsistentTotal { given: f64, expected: f64 },
    #[error("window of {window} blocks leaves tail mass {tail_fraction:e} of the total bonus")]
    WindowTooShort { window: u64, tail_fraction: f64 },
    #[error("halving period must be at least one block")]
    ZeroHalving,
    #[error("invalid number {0:?}")]
    BadNumber(String),
}

/// A miner's identity: the encoded public key of its coinbase address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MinerId(pub [u8; MinerId::LEN]);

impl MinerId {
    /// Ed25519 public keys are 32 bytes.
    pub const LEN: usize = 32;

    pub fn as_bytes(&self) -> &[u8; MinerId::LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<MinerId, hex::FromHexError> {
        let mut out = [0u8; MinerId::LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(MinerId(out))
    }
}

impl fmt::Debug for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MinerId({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for MinerId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for MinerId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MinerId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// `Λ = λ₀/(1 − e^(−χ))`, the sum of the untruncated sequence.
pub fn total_bonus_closed_form(lambda0: f64, chi: f64) -> Result<f64, ReputationError> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(ReputationError::Lambda0OutOfRange(lambda0));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(ReputationError::InvalidChi(chi));
    }
    Ok(lambda0 / -(-chi).exp_m1())
}

/// Inverse of [`total_bonus_closed_form`]: the `λ₀` that yields a network bonus `Λ`.
pub fn lambda0_for_target(total_bonus: f64, chi: f64) -> Result<f64, ReputationError> {
    if !(total_bonus > 0.0 && total_bonus < 1.0) {
        return Err(ReputationError::TotalBonusOutOfRange(total_bonus));
    }
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(ReputationError::InvalidChi(chi));
    }
    Ok(total_bonus * -(-chi).exp_m1())
}

/// Parameters of the exponential bonus sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReputationParams {
    lambda0: f64,
    chi: f64,
    total_bonus: f64,
    window_blocks: u64,
}

impl ReputationParams {
    /// Builds parameters from `λ₀`, `χ` and an explicit window; `Λ` is derived.
    pub fn new(lambda0: f64, chi: f64, window_blocks: u64) -> Result<Self, ReputationError> {
        let total_bonus = total_bonus_closed_form(lambda0, chi)?;
        Self::from_parts(lambda0, chi, total_bonus, window_blocks)
    }

    /// Builds parameters from all four fields, checking they agree with each other.
    pub fn from_parts(lambda0: f64, chi: f64, total_bonus: f64, window_blocks: u64) -> Result<Self, ReputationError> {
        if !(lambda0 > 0.0 && lambda0 < 1.0) {
            return Err(ReputationError::Lambda0OutOfRange(lambda0));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(ReputationError::InvalidChi(chi));
        }
        if !(total_bonus > 0.0 && total_bonus < 1.0) {
            return Err(ReputationError::TotalBonusOutOfRange(total_bonus));
        }
        let expected = total_bonus_closed_form(lambda0, chi)?;
        if ((total_bonus - expected) / expected).abs() > TOTAL_BONUS_REL_TOL {
            return Err(ReputationError::InconsistentTotal { given: total_bonus, expected });
        }
        let params = ReputationParams { lambda0, chi, total_bonus, window_blocks };
        let tail_fraction = params.tail_fraction();
        if tail_fraction >= MAX_TAIL_FRACTION {
            return Err(ReputationError::WindowTooShort { window: window_blocks, tail_fraction });
        }
        Ok(params)
    }

    /// Parameters whose bonus halves every `halving_blocks` and sums to `total_bonus`.
    /// The window spans [`WINDOW_HALF_LIVES`] half-lives.
    pub fn from_halving(halving_blocks: u64, total_bonus: f64) -> Result<Self, ReputationError> {
        if halving_blocks == 0 {
            return Err(ReputationError::ZeroHalving);
        }
        let chi = LN_2 / halving_blocks as f64;
        let lambda0 = lambda0_for_target(total_bonus, chi)?;
        Self::from_parts(lambda0, chi, total_bonus_closed_form(lambda0, chi)?, halving_blocks * WINDOW_HALF_LIVES)
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn total_bonus(&self) -> f64 {
        self.total_bonus
    }

    pub fn window_blocks(&self) -> u64 {
        self.window_blocks
    }

    /// Mass of the sequence at depths `>= window_blocks`, relative to `Λ`.
    pub fn tail_fraction(&self) -> f64 {
        (-self.chi * self.window_blocks as f64).exp()
    }

    /// `Λ` rounded to fixed point through the same exact path as the bonus table.
    pub fn total_bonus_fixed(&self) -> FixedFrac {
        HighPrec::from_f64(self.total_bonus).unwrap_or(HighPrec::ZERO).to_fixed()
    }
}

/// `λₙ = λ₀·e^(−χn)` inside the window, exactly zero beyond it.
pub fn bonus_at_depth(params: &ReputationParams, depth: u64) -> f64 {
    if depth >= params.window_blocks {
        return 0.0;
    }
    params.lambda0 * (-params.chi * depth as f64).exp()
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    lambda0: String,
    chi: String,
    total_bonus: String,
    window_blocks: String,
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, ReputationError> {
    s.trim().parse().map_err(|_| ReputationError::BadNumber(s.to_string()))
}

impl Serialize for ReputationParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // `{}` on f64 prints the shortest decimal that parses back to the same bits.
        ParamsDoc {
            lambda0: self.lambda0.to_string(),
            chi: self.chi.to_string(),
            total_bonus: self.total_bonus.to_string(),
            window_blocks: self.window_blocks.to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ReputationParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ParamsDoc::deserialize(deserializer)?;
        let build = || -> Result<ReputationParams, ReputationError> {
            ReputationParams::from_parts(
                parse_num(&doc.lambda0)?,
                parse_num(&doc.chi)?,
                parse_num(&doc.total_bonus)?,
                parse_num(&doc.window_blocks)?,
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}

/// A bonus profile over block depth, in exact fixed point.
///
/// The ledger only talks to the sequence through this trait, so profiles
/// other than the exponential one (for example flat for a year, then
/// decaying) can be plugged in.
pub trait BonusSequence: Send + Sync {
    /// Depth at which the bonus becomes zero.
    fn window_blocks(&self) -> u64;

    /// `λₙ` in high precision; zero for `depth >= window_blocks`.
    fn weight(&self, depth: u64) -> HighPrec;

    /// `λₙ₊₁/λₙ` when it is the same for every depth. Enables O(1) ledger updates.
    fn decay_factor(&self) -> Option<HighPrec> {
        None
    }

    /// `λₙ` rounded to 10⁻¹² units.
    fn weight_fixed(&self, depth: u64) -> FixedFrac {
        self.weight(depth).to_fixed()
    }
}

/// The exponential profile with a precomputed high-precision table.
#[derive(Debug, Clone)]
pub struct ExponentialBonus {
    params: ReputationParams,
    ratio: HighPrec,
    table: Vec<HighPrec>,
}

impl ExponentialBonus {
    pub fn new(params: ReputationParams) -> Self {
        let lambda0 = HighPrec::from_f64(params.lambda0).expect("lambda0 in (0,1)");
        let chi = HighPrec::from_f64(params.chi.min(255.0)).expect("chi is finite");
        let ratio = chi.exp_neg();
        let window = params.window_blocks;
        let mut table = Vec::with_capacity(window as usize);
        let mut current = lambda0;
        for depth in 0..window {
            if depth % ANCHOR_STRIDE == 0 {
                current = match chi.0.checked_mul(depth as u128) {
                    Some(exponent) => lambda0.mul(HighPrec(exponent).exp_neg()),
                    None => HighPrec::ZERO,
                };
            } else {
                current = current.mul(ratio);
            }
            table.push(current);
        }
        ExponentialBonus { params, ratio, table }
    }

    pub fn params(&self) -> &ReputationParams {
        &self.params
    }

    /// Sum of the fixed-point table over depths `0..depth_count`, the network
    /// bonus of a chain of that many attributed blocks.
    pub fn truncated_total(&self, depth_count: u64) -> FixedFrac {
        let end = depth_count.min(self.params.window_blocks) as usize;
        let sum = self.table[..end].iter().fold(HighPrec::ZERO, |acc, w| acc.checked_add(*w).expect("sum below 256"));
        sum.to_fixed()
    }
}

impl BonusSequence for ExponentialBonus {
    fn window_blocks(&self) -> u64 {
        self.params.window_blocks
    }

    fn weight(&self, depth: u64) -> HighPrec {
        if depth >= self.params.window_blocks {
            return HighPrec::ZERO;
        }
        self.table[depth as usize]
    }

    fn decay_factor(&self) -> Option<HighPrec> {
        Some(self.ratio)
    }
}

#[derive(Debug, Clone, Default)]
struct MinerEntry {
    // ascending, all within the window of the tip
    heights: VecDeque<u64>,
    accum: HighPrec,
    cached: FixedFrac,
}

/// Per-miner reputation at the chain tip, maintained incrementally.
///
/// A fresh ledger holds no blocks. Each [`advance`](Self::advance) appends one
/// block; the first one becomes height 0.
#[derive(Clone)]
pub struct ReputationLedger<S: BonusSequence = ExponentialBonus> {
    sequence: Arc<S>,
    block_count: u64,
    miners: BTreeMap<MinerId, MinerEntry>,
}

impl<S: BonusSequence> fmt::Debug for ReputationLedger<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReputationLedger")
            .field("tip_height", &self.tip_height())
            .field("miners", &self.miners.len())
            .finish()
    }
}

impl<S: BonusSequence> ReputationLedger<S> {
    pub fn new(sequence: Arc<S>) -> Self {
        ReputationLedger { sequence, block_count: 0, miners: BTreeMap::new() }
    }

    pub fn sequence(&self) -> &Arc<S> {
        &self.sequence
    }

    /// Height of the newest block, `None` while empty.
    pub fn tip_height(&self) -> Option<u64> {
        self.block_count.checked_sub(1)
    }

    pub fn block_count(&self) -> u64 {
        self.block_count
    }

    /// `Λ(x)` at the current tip. Unknown miners have zero bonus.
    pub fn miner_bonus(&self, miner: &MinerId) -> FixedFrac {
        self.miners.get(miner).map_or(FixedFrac::ZERO, |e| e.cached)
    }

    /// Heights mined by `miner` that still carry a bonus, ascending.
    pub fn mined_heights(&self, miner: &MinerId) -> Vec<u64> {
        self.miners.get(miner).map(|e| e.heights.iter().copied().collect()).unwrap_or_default()
    }

    /// Every miner with a non-zero bonus, in key order.
    pub fn bonuses(&self) -> impl Iterator<Item = (&MinerId, FixedFrac)> + '_ {
        self.miners.iter().map(|(id, e)| (id, e.cached))
    }

    /// `Σₓ Λ(x)` over the cached values.
    pub fn network_bonus(&self) -> FixedFrac {
        self.miners.values().fold(FixedFrac::ZERO, |acc, e| acc.saturating_add(e.cached))
    }

    /// `Λ(x)` recomputed from the mined heights alone, bypassing the incremental state.
    pub fn rescan_bonus(&self, miner: &MinerId) -> FixedFrac {
        let Some(tip) = self.tip_height() else { return FixedFrac::ZERO };
        self.miners.get(miner).map_or(FixedFrac::ZERO, |e| self.rescan_entry(e, tip).to_fixed())
    }

    fn rescan_entry(&self, entry: &MinerEntry, tip: u64) -> HighPrec {
        entry
            .heights
            .iter()
            .fold(HighPrec::ZERO, |acc, &h| acc.checked_add(self.sequence.weight(tip - h)).expect("sum below 256"))
    }

    /// Appends a block mined by `miner`.
    pub fn advance(&mut self, miner: &MinerId) {
        self.advance_inner(Some(miner));
    }

    /// Appends a block that credits nobody (the genesis block).
    pub fn advance_unattributed(&mut self) {
        self.advance_inner(None);
    }

    fn advance_inner(&mut self, miner: Option<&MinerId>) {
        let new_tip = self.block_count;
        self.block_count += 1;
        let window = self.sequence.window_blocks();
        let decay = self.sequence.decay_factor();

        let mut emptied = Vec::new();
        for (id, entry) in self.miners.iter_mut() {
            let mut expired = 0usize;
            while entry.heights.front().is_some_and(|&h| new_tip - h >= window) {
                entry.heights.pop_front();
                expired += 1;
            }
            if entry.heights.is_empty() {
                emptied.push(*id);
                continue;
            }
            entry.accum = match decay {
                Some(ratio) => {
                    let mut acc = entry.accum.mul(ratio);
                    for _ in 0..expired {
                        acc = acc.saturating_sub(retired_weight(&*self.sequence, window));
                    }
                    acc
                }
                None => entry.heights.iter().fold(HighPrec::ZERO, |acc, &h| {
                    acc.checked_add(self.sequence.weight(new_tip - h)).expect("sum below 256")
                }),
            };
        }
        for id in emptied {
            self.miners.remove(&id);
        }

        if let Some(id) = miner {
            let entry = self.miners.entry(*id).or_default();
            entry.heights.push_back(new_tip);
            entry.accum = entry.accum.checked_add(self.sequence.weight(0)).expect("sum below 256");
        }

        for entry in self.miners.values_mut() {
            entry.cached = entry.accum.to_fixed();
        }
    }
}

// Value of a decayed term as it crosses the window edge: one geometric step
// past the last live depth.
fn retired_weight<S: BonusSequence + ?Sized>(sequence: &S, window: u64) -> HighPrec {
    match (window.checked_sub(1), sequence.decay_factor()) {
        (Some(last), Some(ratio)) => sequence.weight(last).mul(ratio),
        _ => HighPrec::ZERO,
    }
}
