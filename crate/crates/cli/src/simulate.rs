//! `por simulate`: event-driven chain simulation with the reputation ledger.
//!
//! Block races follow the exponential model: miner `i` finds the next block
//! at rate `hᵢ/(d(1 − Λ(xᵢ)))`, where `Λ(xᵢ)` is the miner's current bonus
//! (zero if it does not use it). The interval to the next block is
//! exponential with the summed rate `R`, and the winner is miner `i` with
//! probability `rateᵢ/R`. During one block the network spends on average
//! `H/R` hashes, against `d` hashes without reputation.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use por_core::certmine::MinerKeypair;
use por_core::consensus::schedule::{effective_total_bonus, scale_bonus};
use por_core::consensus::TransitionSchedule;
use por_core::reputation::ExponentialBonus;
use por_core::{FixedFrac, MinerId, ReputationLedger};

use crate::config::ReputationSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerSpec {
    /// Label; the miner's address is derived from it.
    pub name: String,
    /// Hashes per unit of time.
    pub hashrate: f64,
    #[serde(default = "default_true")]
    pub uses_bonus: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub reputation: ReputationSpec,
    /// Base difficulty `d`: expected hashes per block without bonus.
    pub difficulty: f64,
    /// Blocks that are measured.
    pub blocks: u64,
    /// Blocks simulated first to bring bonuses to steady state; not measured.
    #[serde(default)]
    pub warmup_blocks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<TransitionSchedule>,
    pub miners: Vec<MinerSpec>,
}

impl SimulateConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.miners.is_empty() {
            return Err(CliError::Config("the miner roster is empty".into()));
        }
        if let Some(m) = self.miners.iter().find(|m| !(m.hashrate > 0.0 && m.hashrate.is_finite())) {
            return Err(CliError::Config(format!("miner {} needs a positive hashrate", m.name)));
        }
        if !(self.difficulty >= 1.0 && self.difficulty.is_finite()) {
            return Err(CliError::Config(format!("difficulty must be at least 1, got {}", self.difficulty)));
        }
        if self.blocks == 0 {
            return Err(CliError::Config("at least one measured block is required".into()));
        }
        if let Some(schedule) = &self.schedule {
            schedule.validate()?;
        }
        Ok(())
    }
}

/// Per-miner results over the measured blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerReport {
    pub name: String,
    pub address: MinerId,
    pub hashrate: f64,
    pub uses_bonus: bool,
    pub blocks_won: u64,
    pub share: f64,
    /// Ledger bonus at the end of the run, before the transition schedule.
    pub final_bonus: FixedFrac,
    /// Mean effective bonus the miner mined under.
    pub mean_bonus: f64,
    /// Hashes the miner is expected to have spent.
    pub expected_hashes: f64,
}

/// One simulated block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEvent {
    pub height: u64,
    pub miner: String,
    pub time: f64,
    /// Effective bonus of the winner when it found the block.
    pub winner_bonus: FixedFrac,
    /// `H/R`, the network's expected hash count for this block.
    pub expected_hashes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub config: SimulateConfig,
    pub measured_blocks: u64,
    pub elapsed_time: f64,
    /// `Σ H/R` over the measured blocks.
    pub expected_hashes: f64,
    /// `blocks·d`, the same chain mined without reputation.
    pub baseline_hashes: f64,
    /// `expected_hashes / baseline_hashes`.
    pub energy_ratio: f64,
    /// `Σ d(1 − Λ(winner))/(blocks·d)`: work the winning miners were asked for.
    pub winner_work_ratio: f64,
    pub miners: Vec<MinerReport>,
    /// Every simulated block, warm-up included. Not serialized with the report.
    #[serde(skip)]
    pub events: Vec<BlockEvent>,
}

impl SimulationReport {
    /// Writes the block log as newline-delimited JSON.
    pub fn write_events<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

struct Tally {
    wins: u64,
    bonus_sum: f64,
    hashes: f64,
}

pub fn cmd_simulate(config: &SimulateConfig, seed: u64) -> Result<SimulationReport, CliError> {
    config.validate()?;
    let params = config.reputation.resolve()?;
    let full = params.total_bonus_fixed();
    let schedule = config.schedule.unwrap_or_else(|| TransitionSchedule::immediate(full));
    if schedule.final_total_bonus > full {
        return Err(CliError::Config(format!("schedule final bonus {} exceeds {full}", schedule.final_total_bonus)));
    }
    let ids: Vec<MinerId> =
        config.miners.iter().map(|m| MinerKeypair::from_seed(m.name.as_bytes()).public_address()).collect();
    let total_hashrate: f64 = config.miners.iter().map(|m| m.hashrate).sum();
    let d = config.difficulty;

    let mut ledger = ReputationLedger::new(Arc::new(ExponentialBonus::new(params)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: Vec<Tally> =
        config.miners.iter().map(|_| Tally { wins: 0, bonus_sum: 0.0, hashes: 0.0 }).collect();
    let mut events = Vec::with_capacity((config.warmup_blocks + config.blocks) as usize);
    let mut bonuses = vec![FixedFrac::ZERO; config.miners.len()];
    let mut rates = vec![0.0; config.miners.len()];
    let (mut time, mut elapsed, mut expected, mut winner_work) = (0.0, 0.0, 0.0, 0.0);

    for height in 1..=config.warmup_blocks + config.blocks {
        let effective = effective_total_bonus(&schedule, height);
        for (i, miner) in config.miners.iter().enumerate() {
            bonuses[i] = if miner.uses_bonus {
                scale_bonus(ledger.miner_bonus(&ids[i]), effective, full)
            } else {
                FixedFrac::ZERO
            };
            rates[i] = miner.hashrate / (d * (1.0 - bonuses[i].to_f64()));
        }
        let total_rate: f64 = rates.iter().sum();
        let interval = Exp::new(total_rate).expect("positive rate").sample(&mut rng);
        let mut pick = rng.gen::<f64>() * total_rate;
        let winner = rates
            .iter()
            .position(|&r| {
                pick -= r;
                pick < 0.0
            })
            .unwrap_or(rates.len() - 1);
        let block_hashes = total_hashrate / total_rate;
        time += interval;

        if height > config.warmup_blocks {
            elapsed += interval;
            expected += block_hashes;
            winner_work += 1.0 - bonuses[winner].to_f64();
            for (i, miner) in config.miners.iter().enumerate() {
                tallies[i].hashes += miner.hashrate / total_rate;
            }
            tallies[winner].wins += 1;
            tallies[winner].bonus_sum += bonuses[winner].to_f64();
        }
        events.push(BlockEvent {
            height,
            miner: config.miners[winner].name.clone(),
            time,
            winner_bonus: bonuses[winner],
            expected_hashes: block_hashes,
        });
        ledger.advance(&ids[winner]);
    }

    let baseline = config.blocks as f64 * d;
    let miners = config
        .miners
        .iter()
        .zip(&ids)
        .zip(&tallies)
        .map(|((m, id), t)| MinerReport {
            name: m.name.clone(),
            address: *id,
            hashrate: m.hashrate,
            uses_bonus: m.uses_bonus,
            blocks_won: t.wins,
            share: t.wins as f64 / config.blocks as f64,
            final_bonus: ledger.miner_bonus(id),
            mean_bonus: if t.wins == 0 { 0.0 } else { t.bonus_sum / t.wins as f64 },
            expected_hashes: t.hashes,
        })
        .collect();
    Ok(SimulationReport {
        seed,
        config: config.clone(),
        measured_blocks: config.blocks,
        elapsed_time: elapsed,
        expected_hashes: expected,
        baseline_hashes: baseline,
        energy_ratio: expected / baseline,
        winner_work_ratio: winner_work / config.blocks as f64,
        miners,
        events,
    })
}
