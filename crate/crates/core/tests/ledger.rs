use std::sync::Arc;

use por_core::reputation::{bonus_at_depth, BonusSequence, ExponentialBonus};
use por_core::{MinerId, ReputationLedger, ReputationParams, FIXED_SCALE};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn miner(i: u8) -> MinerId {
    MinerId([i; 32])
}

/// Bonus of every miner from a plain replay of the block sequence in f64.
fn float_oracle(params: &ReputationParams, blocks: &[u8], who: u8) -> f64 {
    let tip = blocks.len() as u64 - 1;
    blocks.iter().enumerate().filter(|(_, &m)| m == who).map(|(h, _)| bonus_at_depth(params, tip - h as u64)).sum()
}

#[test]
fn thousand_random_advances_match_float_rescan() {
    let params = ReputationParams::from_halving(40, 0.3).unwrap();
    let mut ledger = ReputationLedger::new(Arc::new(ExponentialBonus::new(params)));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut blocks = Vec::new();
    for _ in 0..1000 {
        let m = rng.gen_range(0..6u8);
        blocks.push(m);
        ledger.advance(&miner(m));
        for who in 0..6u8 {
            let want = float_oracle(&params, &blocks, who) * FIXED_SCALE as f64;
            let got = ledger.miner_bonus(&miner(who)).units() as f64;
            assert!((got - want).abs() <= 1.0, "miner {who} at {}: {got} vs {want}", blocks.len());
        }
    }
}

#[test]
fn depths_zero_one_five() {
    let params = ReputationParams::from_halving(40, 0.3).unwrap();
    let mut ledger = ReputationLedger::new(Arc::new(ExponentialBonus::new(params)));
    let blocks = [1u8, 2, 2, 2, 1, 1];
    for &m in &blocks {
        ledger.advance(&miner(m));
    }
    let want =
        (bonus_at_depth(&params, 0) + bonus_at_depth(&params, 1) + bonus_at_depth(&params, 5)) * FIXED_SCALE as f64;
    assert!((ledger.miner_bonus(&miner(1)).units() as f64 - want).abs() <= 1.0);
}

#[test]
fn advance_decays_uninvolved_miners_by_one_step() {
    let params = ReputationParams::from_halving(100, 0.3).unwrap();
    let mut ledger = ReputationLedger::new(Arc::new(ExponentialBonus::new(params)));
    for _ in 0..50 {
        ledger.advance(&miner(1));
    }
    let before = ledger.miner_bonus(&miner(1)).units() as f64;
    ledger.advance(&miner(2));
    let after = ledger.miner_bonus(&miner(1)).units() as f64;
    let factor = (-params.chi()).exp();
    assert!((after - before * factor).abs() <= 1.0);
    assert!(ledger.miner_bonus(&miner(2)).units() as f64 >= params.lambda0() * FIXED_SCALE as f64 - 0.5);
}

#[test]
fn network_bonus_approaches_total_on_bitcoin_calibration() {
    // young chain: network bonus is the truncated series over the existing depths
    let params = ReputationParams::from_halving(52_560, 0.3).unwrap();
    let seq = Arc::new(ExponentialBonus::new(params));
    let mut ledger = ReputationLedger::new(seq.clone());
    for i in 0..5_000u32 {
        ledger.advance(&miner((i % 7) as u8));
    }
    let series: f64 = (0..5_000).map(|n| bonus_at_depth(&params, n)).sum();
    let network = ledger.network_bonus().to_f64();
    assert!((network - series).abs() < 1e-9, "{network} vs {series}");
    assert!(seq.truncated_total(u64::MAX).to_f64() < 0.3);
    assert!((seq.truncated_total(u64::MAX).to_f64() - 0.3).abs() < 0.3 * 1e-6 + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incremental_equals_rescan(halving in 3u64..200, seq in proptest::collection::vec(0u8..8, 1..10_000)) {
        let params = ReputationParams::from_halving(halving, 0.3).unwrap();
        let bonus = Arc::new(ExponentialBonus::new(params));
        let mut ledger = ReputationLedger::new(bonus.clone());
        for &m in &seq {
            ledger.advance(&miner(m));
        }
        let mut total = 0u64;
        for who in 0..8u8 {
            let id = miner(who);
            let inc = ledger.miner_bonus(&id).units() as i64;
            let batch = ledger.rescan_bonus(&id).units() as i64;
            prop_assert!((inc - batch).abs() <= 1, "miner {}: {} vs {}", who, inc, batch);
            prop_assert!(inc as u64 <= params.total_bonus_fixed().units());
            total += inc as u64;
        }
        let expected = bonus.truncated_total(seq.len() as u64).units() as i64;
        // every block is attributed, so the miners share the whole truncated series
        prop_assert!((total as i64 - expected).abs() <= 8, "{} vs {}", total, expected);
        prop_assert!(total as f64 / FIXED_SCALE as f64 <= params.total_bonus() + 1e-9);
    }

    #[test]
    fn sequence_is_strictly_decreasing(halving in 1u64..500) {
        let params = ReputationParams::from_halving(halving, 0.3).unwrap();
        let bonus = ExponentialBonus::new(params);
        for n in 1..params.window_blocks() {
            prop_assert!(bonus_at_depth(&params, n) < bonus_at_depth(&params, n - 1));
            prop_assert!(bonus.weight(n) < bonus.weight(n - 1));
        }
    }
}
