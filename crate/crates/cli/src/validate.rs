//! `por validate`: replay a chain export under the given consensus rules.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use por_core::consensus::{read_chain_ndjson, ChainState, Hash32, RejectReason};

use crate::config::ChainSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub height: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub config: ChainSpec,
    pub valid: bool,
    /// Blocks accepted before the first rejection.
    pub accepted_blocks: u64,
    pub tip_height: u64,
    pub tip_hash: Hash32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
}

/// Replays the exported headers in order and stops at the first rejection.
pub fn cmd_validate<R: BufRead>(spec: &ChainSpec, chain: R) -> Result<Verdict, CliError> {
    let headers = read_chain_ndjson(chain)?;
    let mut state = ChainState::new(spec.resolve()?)?;
    let mut rejection = None;
    for header in headers {
        let height = header.height;
        if let Err(reason) = state.append(header) {
            rejection = Some(Rejection { height, reason });
            break;
        }
    }
    Ok(Verdict {
        config: spec.clone(),
        valid: rejection.is_none(),
        accepted_blocks: state.tip_height(),
        tip_height: state.tip_height(),
        tip_hash: state.tip_hash(),
        rejection,
    })
}
