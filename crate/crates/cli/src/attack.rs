//! `por attack`: closed form against Monte Carlo over a `q × Λ` grid.

use serde::{Deserialize, Serialize};

use por_core::attacksim::{critical_fraction, grid, sweep, SweepRow};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    /// Attacker shares.
    pub qs: Vec<f64>,
    /// Network bonuses.
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub others_use_bonus: bool,
    /// Races simulated per grid point.
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalShare {
    pub lambda: f64,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub seed: u64,
    pub config: AttackConfig,
    /// Share above which the attacker wins more than half the races.
    pub critical_shares: Vec<CriticalShare>,
    pub rows: Vec<SweepRow>,
    pub rows_within_band: usize,
}

pub fn cmd_attack(config: &AttackConfig, seed: u64) -> Result<AttackReport, CliError> {
    if config.qs.is_empty() || config.lambdas.is_empty() {
        return Err(CliError::Config("qs and lambdas must both be non-empty".into()));
    }
    let scenarios = grid(&config.qs, &config.lambdas, config.others_use_bonus)?;
    let rows = sweep(&scenarios, config.trials, seed)?;
    let mut lambdas = config.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let critical_shares = lambdas
        .iter()
        .map(|&lambda| Ok(CriticalShare { lambda, q0: critical_fraction(lambda)? }))
        .collect::<Result<_, CliError>>()?;
    Ok(AttackReport {
        seed,
        config: config.clone(),
        critical_shares,
        rows_within_band: rows.iter().filter(|r| r.within_band()).count(),
        rows,
    })
}
