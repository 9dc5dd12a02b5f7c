//! `por params`: design the bonus sequence from a halving period and a target total.

use serde::{Deserialize, Serialize};

use por_core::reputation::total_bonus_closed_form;
use por_core::ReputationParams;

use crate::CliError;

/// Blocks per day at a ten-minute spacing.
pub const BLOCKS_PER_DAY: u64 = 144;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub halving_blocks: u64,
    pub target_total_bonus: f64,
    pub chi: f64,
    pub lambda0: f64,
    /// `λ₀/(1 − e^(−χ))` recomputed from the designed `λ₀`.
    pub total_bonus: f64,
    /// Fraction of a bonus lost over one day, `1 − e^(−144χ)`.
    pub daily_decay: f64,
    pub window_blocks: u64,
    pub tail_fraction: f64,
    /// The parameters in their canonical serialized form.
    pub params: ReputationParams,
}

pub fn cmd_params(halving_blocks: u64, target_total_bonus: f64) -> Result<ParamsReport, CliError> {
    let params = ReputationParams::from_halving(halving_blocks, target_total_bonus)?;
    Ok(ParamsReport {
        halving_blocks,
        target_total_bonus,
        chi: params.chi(),
        lambda0: params.lambda0(),
        total_bonus: total_bonus_closed_form(params.lambda0(), params.chi())?,
        daily_decay: -(-(BLOCKS_PER_DAY as f64) * params.chi()).exp_m1(),
        window_blocks: params.window_blocks(),
        tail_fraction: params.tail_fraction(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_block_halving_decays_by_ln2() {
        let report = cmd_params(1, 0.3).unwrap();
        assert!((report.chi - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((report.lambda0 - 0.15).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_inputs_fail() {
        assert!(cmd_params(0, 0.3).is_err());
        assert!(cmd_params(100, 0.0).is_err());
        assert!(cmd_params(100, 1.0).is_err());
    }
}
