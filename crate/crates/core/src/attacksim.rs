//! 51% attack analysis.
//!
//! An attacker with hashrate share `q` who mines a proportion `q` of the
//! blocks settles at bonus `Λ' = qΛ`. When nobody else uses their bonus the
//! attacker's block time is `T' ~ Exp(α')` with `α' = h'/(d(1 − qΛ))`, the
//! rest of the network's is `T ~ Exp(α)` with `α = h/d`, and
//!
//! ```text
//! P[T' < T] = α'/(α' + α) = q / (1 − qΛ(1 − q))
//! ```
//!
//! which exceeds 1/2 exactly when `q > q₀ = 1/2 − (√(4 + Λ²) − 2)/(2Λ)`.
//!
//! This is analysis code: it uses floating point and seeded ChaCha8 streams.
//! Trials are split into fixed-size chunks, chunk `k` drawing from stream `k`
//! of the seed, so results do not depend on the number of worker threads.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attacker share q must lie in (0, 1), got {0}")]
    ShareOutOfRange(f64),
    #[error("network bonus must lie in [0, 1), got {0}")]
    BonusOutOfRange(f64),
    #[error("hashrates must be positive and finite")]
    BadHashrate,
    #[error("difficulty must be at least 1, got {0}")]
    BadDifficulty(f64),
    #[error("q = {q} disagrees with h'/(h + h') = {implied}")]
    InconsistentShare { q: f64, implied: f64 },
    #[error("the apparent hashrate formula assumes no other miner uses a bonus")]
    OthersUseBonus,
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One attacker against the rest of the network, everyone at steady-state bonus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    /// Attacker share of the total hashrate, `h'/(h + h')`.
    pub q: f64,
    /// Network bonus `Λ`.
    pub total_bonus: f64,
    /// `h`, hashes per second of everyone else.
    pub honest_hashrate: f64,
    /// `h'`, hashes per second of the attacker.
    pub attacker_hashrate: f64,
    /// Whether the rest of the network applies its own bonus `(1 − q)Λ`.
    pub others_use_bonus: bool,
    /// Base difficulty `d`, expected hashes per block without bonus.
    pub difficulty: f64,
}

impl AttackScenario {
    /// Scenario with total hashrate 1 and difficulty 1.
    pub fn new(q: f64, total_bonus: f64, others_use_bonus: bool) -> Result<Self, AttackError> {
        Self::with_hashrate(q, total_bonus, 1.0, 1.0, others_use_bonus)
    }

    pub fn with_hashrate(
        q: f64,
        total_bonus: f64,
        total_hashrate: f64,
        difficulty: f64,
        others_use_bonus: bool,
    ) -> Result<Self, AttackError> {
        let scenario = AttackScenario {
            q,
            total_bonus,
            honest_hashrate: (1.0 - q) * total_hashrate,
            attacker_hashrate: q * total_hashrate,
            others_use_bonus,
            difficulty,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(AttackError::ShareOutOfRange(self.q));
        }
        if !(0.0..1.0).contains(&self.total_bonus) {
            return Err(AttackError::BonusOutOfRange(self.total_bonus));
        }
        let positive = |h: f64| h > 0.0 && h.is_finite();
        if !positive(self.honest_hashrate) || !positive(self.attacker_hashrate) {
            return Err(AttackError::BadHashrate);
        }
        if !(self.difficulty >= 1.0 && self.difficulty.is_finite()) {
            return Err(AttackError::BadDifficulty(self.difficulty));
        }
        let implied = self.attacker_hashrate / (self.attacker_hashrate + self.honest_hashrate);
        if ((implied - self.q) / self.q).abs() > 1e-12 {
            return Err(AttackError::InconsistentShare { q: self.q, implied });
        }
        Ok(())
    }

    /// Attacker steady-state bonus `qΛ`.
    pub fn attacker_bonus(&self) -> f64 {
        self.q * self.total_bonus
    }

    /// Bonus of the rest of the network: `(1 − q)Λ` if it uses it, else 0.
    pub fn honest_bonus(&self) -> f64 {
        if self.others_use_bonus {
            (1.0 - self.q) * self.total_bonus
        } else {
            0.0
        }
    }
}

/// Exponential rates of the two block-time variables and the attacker's win probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceOutcome {
    /// `α' = h'/(d(1 − qΛ))`.
    pub attacker_rate: f64,
    /// `α = h/d`, or `h/(d(1 − (1 − q)Λ))` when the others use their bonus.
    pub honest_rate: f64,
    /// `P[T' < T] = α'/(α' + α)`.
    pub win_probability: f64,
}

pub fn race_outcome(scenario: &AttackScenario) -> Result<RaceOutcome, AttackError> {
    scenario.validate()?;
    let d = scenario.difficulty;
    let attacker_rate = scenario.attacker_hashrate / (d * (1.0 - scenario.attacker_bonus()));
    let honest_rate = scenario.honest_hashrate / (d * (1.0 - scenario.honest_bonus()));
    Ok(RaceOutcome { attacker_rate, honest_rate, win_probability: attacker_rate / (attacker_rate + honest_rate) })
}

/// `h'/(1 − qΛ)`: the hashrate the network appears to face from the only bonus user.
pub fn apparent_hashrate(scenario: &AttackScenario) -> Result<f64, AttackError> {
    scenario.validate()?;
    if scenario.others_use_bonus {
        return Err(AttackError::OthersUseBonus);
    }
    Ok(scenario.attacker_hashrate / (1.0 - scenario.attacker_bonus()))
}

/// `q/(1 − qΛ(1 − q))`, the attacker's chance to find the next block first.
pub fn attack_success_probability(q: f64, total_bonus: f64) -> Result<f64, AttackError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(AttackError::ShareOutOfRange(q));
    }
    if !(0.0..1.0).contains(&total_bonus) {
        return Err(AttackError::BonusOutOfRange(total_bonus));
    }
    Ok(q / (1.0 - q * total_bonus * (1.0 - q)))
}

/// Smallest share `q₀` with `P[T' < T] > 1/2`: the root in (0, 1) of
/// `Λq² − (Λ + 2)q + 1`. Returns exactly 1/2 for `Λ = 0`.
pub fn critical_fraction(total_bonus: f64) -> Result<f64, AttackError> {
    if !(0.0..1.0).contains(&total_bonus) {
        return Err(AttackError::BonusOutOfRange(total_bonus));
    }
    if total_bonus == 0.0 {
        return Ok(0.5);
    }
    // 1/2 − (√(4+Λ²) − 2)/(2Λ), with the difference rewritten to avoid cancellation
    let root = (4.0 + total_bonus * total_bonus).sqrt();
    Ok(0.5 - total_bonus / (2.0 * (root + 2.0)))
}

/// Empirical race frequency with its 3σ binomial half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceEstimate {
    pub wins: u64,
    pub trials: u64,
    pub seed: u64,
    pub empirical: f64,
    pub half_width: f64,
}

impl RaceEstimate {
    fn new(wins: u64, trials: u64, seed: u64) -> Self {
        let p = wins as f64 / trials as f64;
        RaceEstimate { wins, trials, seed, empirical: p, half_width: 3.0 * (p * (1.0 - p) / trials as f64).sqrt() }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.empirical - value).abs() < self.half_width
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunked<T, F>(count: u64, seed: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let n = CHUNK.min(count - k * CHUNK);
            per_chunk(&mut chunk_rng(seed, k), n)
        })
        .collect()
}

/// Draws `T' ~ Exp(α')` and `T ~ Exp(α)` per trial and counts `T' < T`.
pub fn simulate_race(scenario: &AttackScenario, trials: u64, seed: u64) -> Result<RaceEstimate, AttackError> {
    if trials == 0 {
        return Err(AttackError::NoTrials);
    }
    let rates = race_outcome(scenario)?;
    let attacker = Exp::new(rates.attacker_rate).expect("positive rate");
    let honest = Exp::new(rates.honest_rate).expect("positive rate");
    let wins =
        chunked(trials, seed, |rng, n| (0..n).filter(|_| attacker.sample(rng) < honest.sample(rng)).count() as u64)
            .into_iter()
            .sum();
    Ok(RaceEstimate::new(wins, trials, seed))
}

/// Sample mean of the attacker's block interval and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
}

/// Block intervals of the attacker mining alone with its bonus, hash by hash:
/// each hash succeeds with probability `1/(d(1 − qΛ))`, and `h'` hashes take
/// one second. The mean should approach `d/apparent_hashrate`.
pub fn simulate_block_intervals(
    scenario: &AttackScenario,
    samples: u64,
    seed: u64,
) -> Result<IntervalEstimate, AttackError> {
    if samples < 2 {
        return Err(AttackError::NoTrials);
    }
    scenario.validate()?;
    let expected_hashes = scenario.difficulty * (1.0 - scenario.attacker_bonus());
    let hashes_to_block = Geometric::new((1.0 / expected_hashes).min(1.0)).expect("probability in (0, 1]");
    let rate = scenario.attacker_hashrate;
    let parts = chunked(samples, seed, |rng, n| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let interval = (hashes_to_block.sample(rng) + 1) as f64 / rate;
            sum += interval;
            sum_sq += interval * interval;
        }
        (sum, sum_sq)
    });
    let sum: f64 = parts.iter().map(|(s, _)| s).sum();
    let sum_sq: f64 = parts.iter().map(|(_, q)| q).sum();
    let n = samples as f64;
    let mean = sum / n;
    let variance = (sum_sq - n * mean * mean) / (n - 1.0);
    Ok(IntervalEstimate { samples, seed, mean, std_error: (variance / n).sqrt() })
}

/// One line of an attack sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub q: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub half_width: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SweepRow {
    pub fn within_band(&self) -> bool {
        (self.empirical - self.closed_form).abs() < self.half_width
    }
}

/// Runs the closed form and the simulation over a grid. Rows come back sorted
/// by `(Λ, q)`; row `i` is simulated with seed `seed + i`.
pub fn sweep(scenarios: &[AttackScenario], trials: u64, seed: u64) -> Result<Vec<SweepRow>, AttackError> {
    let mut sorted = scenarios.to_vec();
    sorted.sort_by(|a, b| a.total_bonus.total_cmp(&b.total_bonus).then(a.q.total_cmp(&b.q)));
    sorted
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let row_seed = seed.wrapping_add(i as u64);
            let closed_form = race_outcome(s)?.win_probability;
            let estimate = simulate_race(s, trials, row_seed)?;
            Ok(SweepRow {
                lambda: s.total_bonus,
                q: s.q,
                closed_form,
                empirical: estimate.empirical,
                half_width: estimate.half_width,
                trials,
                seed: row_seed,
            })
        })
        .collect()
}

/// The full `q × Λ` grid.
pub fn grid(qs: &[f64], lambdas: &[f64], others_use_bonus: bool) -> Result<Vec<AttackScenario>, AttackError> {
    lambdas.iter().flat_map(|&l| qs.iter().map(move |&q| AttackScenario::new(q, l, others_use_bonus))).collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), AttackError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apparent_hashrate_examples() {
        let s = AttackScenario::with_hashrate(0.5, 0.0, 100.0, 1.0, false).unwrap();
        assert_eq!(apparent_hashrate(&s).unwrap(), 50.0);
        let s = AttackScenario::with_hashrate(0.5, 0.3, 100.0, 1.0, false).unwrap();
        assert!((apparent_hashrate(&s).unwrap() - 50.0 / 0.85).abs() < 1e-12);
        let s = AttackScenario::new(0.5, 0.3, true).unwrap();
        assert!(matches!(apparent_hashrate(&s), Err(AttackError::OthersUseBonus)));
    }

    #[test]
    fn success_probability_examples() {
        for q in [0.1, 0.3, 0.5, 0.9] {
            assert_eq!(attack_success_probability(q, 0.0).unwrap(), q);
        }
        let p = attack_success_probability(0.4627, 0.3).unwrap();
        assert!((p - 0.5).abs() < 5e-4, "{p}");
        assert!(attack_success_probability(0.0, 0.3).is_err());
        assert!(attack_success_probability(0.5, 1.0).is_err());
    }

    #[test]
    fn success_probability_increases_in_both_arguments() {
        let mut prev_q = 0.0;
        for i in 1..100 {
            let q = i as f64 / 100.0;
            let p = attack_success_probability(q, 0.3).unwrap();
            assert!(p > prev_q);
            prev_q = p;
        }
        let mut prev_l = 0.0;
        for i in 0..100 {
            let p = attack_success_probability(0.3, i as f64 / 100.0).unwrap();
            assert!(p > prev_l);
            prev_l = p;
        }
    }

    #[test]
    fn critical_fraction_examples() {
        let q0 = critical_fraction(0.3).unwrap();
        assert!((q0 - 0.4627).abs() < 1e-4, "{q0}");
        // raw formula from the definition agrees with the cancellation-free form
        let raw = 0.5 - ((4.0f64 + 0.09).sqrt() - 2.0) / 0.6;
        assert!((q0 - raw).abs() < 1e-15);
        assert_eq!(critical_fraction(0.0).unwrap(), 0.5);
        for l in [1e-3, 1e-6, 1e-9] {
            assert!((critical_fraction(l).unwrap() - 0.5).abs() <= l / 4.0);
        }
        assert!(critical_fraction(1.0).is_err());
        assert!(critical_fraction(-0.1).is_err());
    }

    #[test]
    fn critical_fraction_matches_bisection() {
        let l: f64 = 0.6;
        let poly = |q: f64| l * q * q - (l + 2.0) * q + 1.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((critical_fraction(l).unwrap() - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn race_probability_is_rate_ratio() {
        let s = AttackScenario::with_hashrate(0.3, 0.3, 7.0, 1024.0, false).unwrap();
        let r = race_outcome(&s).unwrap();
        let ratio = r.attacker_rate / (r.attacker_rate + r.honest_rate);
        assert!(((r.win_probability - ratio) / ratio).abs() < 1e-12);
        let closed = attack_success_probability(0.3, 0.3).unwrap();
        assert!(((r.win_probability - closed) / closed).abs() < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        assert!(matches!(AttackScenario::new(1.0, 0.3, false), Err(AttackError::ShareOutOfRange(_))));
        assert!(matches!(AttackScenario::new(0.5, 1.0, false), Err(AttackError::BonusOutOfRange(_))));
        let mut s = AttackScenario::new(0.5, 0.3, false).unwrap();
        s.attacker_hashrate = 3.0;
        assert!(matches!(s.validate(), Err(AttackError::InconsistentShare { .. })));
        assert!(matches!(AttackScenario::with_hashrate(0.5, 0.3, 1.0, 0.5, false), Err(AttackError::BadDifficulty(_))));
    }

    #[test]
    fn simulation_is_seeded_and_thread_independent() {
        let s = AttackScenario::new(0.3, 0.3, false).unwrap();
        let a = simulate_race(&s, 200_000, 7).unwrap();
        let b = simulate_race(&s, 200_000, 7).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| simulate_race(&s, 200_000, 7).unwrap());
        assert_eq!(a, c);
        assert_ne!(a.wins, simulate_race(&s, 200_000, 8).unwrap().wins);
        assert!(matches!(simulate_race(&s, 0, 7), Err(AttackError::NoTrials)));
    }

    #[test]
    fn symmetric_race() {
        let s = AttackScenario::new(0.5, 0.0, false).unwrap();
        let est = simulate_race(&s, 1_000_000, 1).unwrap();
        assert!((est.half_width - 0.0015).abs() < 1e-4);
        assert!(est.contains(0.5), "{est:?}");
    }

    #[test]
    fn sweep_examples() {
        assert!(sweep(&[], 10, 0).unwrap().is_empty());
        let s = AttackScenario::new(0.3, 0.3, false).unwrap();
        let rows = sweep(&[s], 50_000, 11).unwrap();
        let single = simulate_race(&s, 50_000, 11).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].empirical, single.empirical);
        assert_eq!(rows[0].half_width, single.half_width);
        assert!((rows[0].closed_form - attack_success_probability(0.3, 0.3).unwrap()).abs() < 1e-12);

        let points = grid(&[0.4, 0.1], &[0.3, 0.0], false).unwrap();
        let rows = sweep(&points, 1_000, 0).unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.q)).collect();
        assert_eq!(keys, vec![(0.0, 0.1), (0.0, 0.4), (0.3, 0.1), (0.3, 0.4)]);
    }

    #[test]
    fn critical_rows_straddle_one_half() {
        let l = 0.3;
        let q0 = critical_fraction(l).unwrap();
        let points = grid(&[q0 - 0.01, q0, q0 + 0.01], &[l], false).unwrap();
        let rows = sweep(&points, 10, 0).unwrap();
        assert!(rows[0].closed_form < 0.5);
        assert!((rows[1].closed_form - 0.5).abs() < 1e-12);
        assert!(rows[2].closed_form > 0.5);
    }

    #[test]
    fn csv_columns() {
        let row =
            SweepRow { lambda: 0.3, q: 0.4, closed_form: 0.45, empirical: 0.44, half_width: 0.01, trials: 10, seed: 1 };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "lambda,q,closed_form,empirical,half_width,trials,seed");
    }
}
