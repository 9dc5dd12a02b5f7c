//! Gradual introduction of the reputation bonus.
//!
//! The network bonus ramps linearly from zero at `start_height` to
//! `final_total_bonus` at `end_height`. Miner bonuses computed with the final
//! parameters are scaled by the ratio of the effective to the final value.

use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::fixed::FixedFrac;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSchedule {
    pub start_height: u64,
    pub end_height: u64,
    pub final_total_bonus: FixedFrac,
}

impl TransitionSchedule {
    pub fn new(start_height: u64, end_height: u64, final_total_bonus: FixedFrac) -> Result<Self, ConsensusError> {
        let schedule = TransitionSchedule { start_height, end_height, final_total_bonus };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Full bonus from the first block on.
    pub fn immediate(final_total_bonus: FixedFrac) -> Self {
        TransitionSchedule { start_height: 0, end_height: 0, final_total_bonus }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.start_height > self.end_height {
            return Err(ConsensusError::InvalidSchedule(format!(
                "start_height {} is after end_height {}",
                self.start_height, self.end_height
            )));
        }
        if self.final_total_bonus >= FixedFrac::ONE {
            return Err(ConsensusError::InvalidSchedule("final_total_bonus must be below 1".into()));
        }
        Ok(())
    }
}

/// Network bonus in force at `height`, floored to fixed point.
pub fn effective_total_bonus(schedule: &TransitionSchedule, height: u64) -> FixedFrac {
    if height < schedule.start_height {
        return FixedFrac::ZERO;
    }
    if height >= schedule.end_height {
        return schedule.final_total_bonus;
    }
    let elapsed = (height - schedule.start_height) as u128;
    let span = (schedule.end_height - schedule.start_height) as u128;
    let units = schedule.final_total_bonus.units() as u128 * elapsed / span;
    FixedFrac::from_units(units as u64).expect("ramp stays below the final value")
}

/// Scales a bonus earned under the full network bonus `full` down to `effective`.
pub fn scale_bonus(bonus: FixedFrac, effective: FixedFrac, full: FixedFrac) -> FixedFrac {
    if effective >= full || full == FixedFrac::ZERO {
        return bonus;
    }
    let units = bonus.units() as u128 * effective.units() as u128 / full.units() as u128;
    FixedFrac::from_units(units as u64).expect("scaled bonus is smaller")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> TransitionSchedule {
        TransitionSchedule::new(100, 1100, "0.3".parse().unwrap()).unwrap()
    }

    #[test]
    fn ramp_examples() {
        let s = ramp();
        assert_eq!(effective_total_bonus(&s, 0), FixedFrac::ZERO);
        assert_eq!(effective_total_bonus(&s, 99), FixedFrac::ZERO);
        assert_eq!(effective_total_bonus(&s, 1100), s.final_total_bonus);
        assert_eq!(effective_total_bonus(&s, u64::MAX), s.final_total_bonus);
        let mid = effective_total_bonus(&s, 600).units() as i64;
        assert!((mid - 150_000_000_000).abs() <= 1);
    }

    #[test]
    fn immediate_schedule_is_constant() {
        let s = TransitionSchedule::immediate("0.3".parse().unwrap());
        assert_eq!(effective_total_bonus(&s, 0), s.final_total_bonus);
    }

    #[test]
    fn rejects_inverted_ranges() {
        assert!(TransitionSchedule::new(10, 5, FixedFrac::ZERO).is_err());
        assert!(TransitionSchedule::new(0, 5, FixedFrac::ONE).is_err());
    }

    #[test]
    fn scaling() {
        let full: FixedFrac = "0.3".parse().unwrap();
        let bonus: FixedFrac = "0.1".parse().unwrap();
        assert_eq!(scale_bonus(bonus, full, full), bonus);
        assert_eq!(scale_bonus(bonus, "0.15".parse().unwrap(), full), "0.05".parse().unwrap());
        assert_eq!(scale_bonus(bonus, FixedFrac::ZERO, full), FixedFrac::ZERO);
    }

    proptest! {
        // linear interpolation oracle in floating point
        #[test]
        fn ramp_is_monotone_and_linear(start in 0u64..1_000, len in 1u64..10_000, h in 0u64..12_000, units in 0u64..999_999_999_999) {
            let s = TransitionSchedule::new(start, start + len, FixedFrac::from_units(units).unwrap()).unwrap();
            let v = effective_total_bonus(&s, h);
            prop_assert!(v <= effective_total_bonus(&s, h + 1));
            let t = ((h.max(start) - start) as f64 / len as f64).min(1.0);
            let expected = units as f64 * t;
            prop_assert!((v.units() as f64 - expected).abs() <= 1.0 + expected * 1e-15);
        }
    }
}
