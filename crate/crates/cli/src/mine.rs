//! `por mine`: real certified mining of a short chain on top of genesis.

use serde::{Deserialize, Serialize};

use por_core::certmine::{mine_certified, MinerKeypair, MiningJob, MiningOutcome};
use por_core::consensus::{sha256d, BlockHeader, ChainState, Hash32, HeaderTemplate};
use por_core::{FixedFrac, MinerId, U256};

use crate::config::ChainSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MineConfig {
    pub chain: ChainSpec,
    pub blocks: u64,
    /// Seed of the coinbase key, used when no key file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miner_seed: Option<String>,
    /// Nonces tried per block before giving up.
    pub max_iterations: u64,
    /// Each block commits to `sha256d("<payload>:<height>")`.
    #[serde(default)]
    pub payload: String,
    #[serde(default)]
    pub start_timestamp: u64,
    #[serde(default = "default_spacing")]
    pub block_spacing_secs: u64,
}

fn default_spacing() -> u64 {
    600
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedBlock {
    pub height: u64,
    pub hash: Hash32,
    pub nonce: u64,
    pub iterations: u64,
    pub bonus: FixedFrac,
    pub target: U256,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineReport {
    pub seed: u64,
    pub config: MineConfig,
    pub miner: MinerId,
    pub tip_hash: Hash32,
    pub blocks: Vec<MinedBlock>,
    /// The mined headers, genesis excluded. Exported separately as NDJSON.
    #[serde(skip)]
    pub headers: Vec<BlockHeader>,
}

/// Mines `config.blocks` blocks with `keypair`, or with the key derived from
/// `miner_seed` when no keypair is given. Block `h` starts its nonce search
/// from the mining seed `seed + h`.
pub fn cmd_mine(config: &MineConfig, keypair: Option<&MinerKeypair>, seed: u64) -> Result<MineReport, CliError> {
    let derived;
    let keypair = match (keypair, &config.miner_seed) {
        (Some(kp), _) => kp,
        (None, Some(s)) => {
            derived = MinerKeypair::from_seed(s.as_bytes());
            &derived
        }
        (None, None) => return Err(CliError::Config("either a key file or miner_seed is required".into())),
    };
    let mut state = ChainState::new(config.chain.resolve()?)?;
    let address = keypair.public_address();
    let mut blocks = Vec::new();
    for _ in 0..config.blocks {
        let height = state.tip_height() + 1;
        let template = HeaderTemplate {
            height,
            parent_hash: state.tip_hash(),
            payload_commitment: sha256d(format!("{}:{height}", config.payload).as_bytes()),
            timestamp: config.start_timestamp + height * config.block_spacing_secs,
            coinbase_address: address,
        };
        let target = state.target_for(&address);
        let job = MiningJob::new(template, target, config.max_iterations)?;
        let (header, iterations) = match mine_certified(keypair, &job, seed.wrapping_add(height)) {
            MiningOutcome::Found { header, iterations } => (header, iterations),
            MiningOutcome::Exhausted { iterations } => {
                return Err(CliError::Config(format!("no block found at height {height} within {iterations} nonces")))
            }
        };
        blocks.push(MinedBlock {
            height,
            hash: header.hash(),
            nonce: header.nonce,
            iterations,
            bonus: state.effective_bonus(&address),
            target,
        });
        state.append(header).map_err(|reason| por_core::consensus::ConsensusError::Rejected { height, reason })?;
    }
    Ok(MineReport {
        seed,
        config: config.clone(),
        miner: address,
        tip_hash: state.tip_hash(),
        blocks,
        headers: state.headers()[1..].to_vec(),
    })
}
