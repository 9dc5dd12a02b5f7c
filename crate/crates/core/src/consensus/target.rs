//! Targets, difficulties and their per-miner tailored versions.
//!
//! A digest is a valid proof of work when, read as a big-endian integer, it
//! is strictly below the target `D`. The difficulty `d = 2²⁵⁶/D` is the
//! expected number of attempts. A miner holding bonus `Λ(x)` works against
//! `D(x) = D/(1 − Λ(x))`, i.e. difficulty `d(x) = d·(1 − Λ(x))`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::ConsensusError;
use crate::fixed::{FixedFrac, FIXED_SCALE};
use crate::u256::U256;

/// `min(2²⁵⁶ − 1, ⌊D·S/(S − b)⌋)` with `S = 10¹²` and `b` the bonus in units.
pub fn tailored_target(base_target: U256, miner_bonus: FixedFrac) -> Result<U256, ConsensusError> {
    if base_target.is_zero() {
        return Err(ConsensusError::ZeroTarget);
    }
    if miner_bonus >= FixedFrac::ONE {
        return Err(ConsensusError::BonusTooLarge(miner_bonus));
    }
    let remaining = FIXED_SCALE - miner_bonus.units();
    // D = q·(S − b) + r, so D·S/(S − b) = q·S + r·S/(S − b)
    let (quotient, rem) = base_target.div_rem_u64(remaining);
    let frac = (rem as u128 * FIXED_SCALE as u128 / remaining as u128) as u64;
    let target = quotient
        .checked_mul_u64(FIXED_SCALE)
        .and_then(|scaled| scaled.checked_add(U256::from_u64(frac)))
        .unwrap_or(U256::MAX);
    Ok(target)
}

/// Exact rational difficulty `2²⁵⁶/D`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Difficulty(BigRational);

impl Difficulty {
    pub fn from_target(target: U256) -> Result<Difficulty, ConsensusError> {
        if target.is_zero() {
            return Err(ConsensusError::ZeroTarget);
        }
        Ok(Difficulty(BigRational::new(two_pow_256(), u256_to_bigint(target))))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// `d·(1 − Λ(x))`.
    pub fn tailored(&self, miner_bonus: FixedFrac) -> Result<Difficulty, ConsensusError> {
        if miner_bonus >= FixedFrac::ONE {
            return Err(ConsensusError::BonusTooLarge(miner_bonus));
        }
        let keep = BigRational::new(BigInt::from(FIXED_SCALE - miner_bonus.units()), BigInt::from(FIXED_SCALE));
        Ok(Difficulty(&self.0 * keep))
    }
}

/// Free-function form of [`Difficulty::tailored`].
pub fn tailored_difficulty(difficulty: &Difficulty, miner_bonus: FixedFrac) -> Result<Difficulty, ConsensusError> {
    difficulty.tailored(miner_bonus)
}

pub(crate) fn two_pow_256() -> BigInt {
    BigInt::one() << 256u32
}

pub(crate) fn u256_to_bigint(value: U256) -> BigInt {
    BigInt::from_bytes_be(num_bigint::Sign::Plus, &value.to_be_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frac(s: &str) -> FixedFrac {
        s.parse().unwrap()
    }

    // floor(D / (1 - bonus)) computed with big rationals, then capped.
    fn oracle(base: U256, bonus: FixedFrac) -> BigInt {
        let one_minus = BigRational::new(BigInt::from(FIXED_SCALE - bonus.units()), BigInt::from(FIXED_SCALE));
        let exact = BigRational::from_integer(u256_to_bigint(base)) / one_minus;
        exact.floor().to_integer().min(two_pow_256() - 1)
    }

    #[test]
    fn identity_and_half() {
        let d = U256::pow2(224).checked_add(U256::from_u64(12345)).unwrap();
        assert_eq!(tailored_target(d, FixedFrac::ZERO).unwrap(), d);
        let doubled = u256_to_bigint(tailored_target(d, frac("0.5")).unwrap());
        let two_d = u256_to_bigint(d) * 2;
        let diff: BigInt = doubled - two_d;
        assert!(diff.magnitude() <= &num_bigint::BigUint::from(1u8));
    }

    #[test]
    fn thirty_percent_matches_rational_oracle() {
        let d = U256::pow2(224);
        let got = tailored_target(d, frac("0.3")).unwrap();
        assert_eq!(u256_to_bigint(got), oracle(d, frac("0.3")));
    }

    #[test]
    fn saturates_and_rejects() {
        assert_eq!(tailored_target(U256::MAX, frac("0.5")).unwrap(), U256::MAX);
        assert!(matches!(tailored_target(U256::ONE, FixedFrac::ONE), Err(ConsensusError::BonusTooLarge(_))));
        assert!(matches!(tailored_target(U256::ZERO, FixedFrac::ZERO), Err(ConsensusError::ZeroTarget)));
        assert!(Difficulty::from_target(U256::ZERO).is_err());
    }

    #[test]
    fn tailored_difficulty_scales() {
        let d = Difficulty::from_target(U256::pow2(246)).unwrap();
        assert_eq!(d.to_f64(), 1024.0);
        assert_eq!(d.tailored(FixedFrac::ZERO).unwrap(), d);
        assert!((d.tailored(frac("0.3")).unwrap().to_f64() - 0.7 * 1024.0).abs() < 1e-9);
        assert!(d.tailored(FixedFrac::ONE).is_err());
    }

    fn any_target() -> impl Strategy<Value = U256> {
        any::<[u8; 32]>().prop_map(U256::from_be_bytes).prop_filter("non-zero", |t| !t.is_zero())
    }

    proptest! {
        #[test]
        fn tailored_target_matches_oracle(base in any_target(), units in 0u64..FIXED_SCALE) {
            let bonus = FixedFrac::from_units(units).unwrap();
            let got = tailored_target(base, bonus).unwrap();
            prop_assert_eq!(u256_to_bigint(got), oracle(base, bonus));
            prop_assert!(got >= base);
        }

        #[test]
        fn monotone_in_bonus(base in any_target(), a in 0u64..FIXED_SCALE, b in 0u64..FIXED_SCALE) {
            let (lo, hi) = (a.min(b), a.max(b));
            let t_lo = tailored_target(base, FixedFrac::from_units(lo).unwrap()).unwrap();
            let t_hi = tailored_target(base, FixedFrac::from_units(hi).unwrap()).unwrap();
            prop_assert!(t_lo <= t_hi);
            // strictly increasing while the cap is not hit, once the step moves the exact value by >= 1
            if t_hi < U256::MAX && hi > lo && base >= U256::pow2(64) {
                prop_assert!(t_lo < t_hi);
            }
        }

        // d(x)·D(x) = 2^256 up to the floor in D(x), i.e. within one d(x).
        #[test]
        fn difficulty_target_product(base in any_target(), units in 0u64..FIXED_SCALE) {
            let bonus = FixedFrac::from_units(units).unwrap();
            let target = tailored_target(base, bonus).unwrap();
            prop_assume!(target < U256::MAX);
            let dx = Difficulty::from_target(base).unwrap().tailored(bonus).unwrap();
            let product = dx.as_rational() * BigRational::from_integer(u256_to_bigint(target));
            let gap = BigRational::from_integer(two_pow_256()) - product;
            prop_assert!(gap >= BigRational::from_integer(BigInt::from(0)));
            prop_assert!(&gap < dx.as_rational());
        }
    }
}
