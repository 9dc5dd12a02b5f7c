//! Deterministic fixed-point arithmetic.
//!
//! Two representations live here:
//!
//! * [`FixedFrac`]: a fraction in parts per 10¹², the unit every consensus
//!   rule works in (miner bonuses, schedule values).
//! * [`HighPrec`]: an unsigned Q8.120 binary fixed-point number used to build
//!   the bonus table and the ledger accumulators. It only exists so that the
//!   rounded [`FixedFrac`] values are reproducible bit-for-bit on every
//!   platform; no floating point is involved once the parameters are loaded.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Denominator of [`FixedFrac`].
pub const FIXED_SCALE: u64 = 1_000_000_000_000;

const FIXED_DECIMALS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixedError {
    #[error("invalid decimal fraction {0:?}")]
    Parse(String),
    #[error("fraction {0} is outside [0, 1]")]
    OutOfRange(String),
}

/// A fraction in `[0, 1]` stored as an integer count of 10⁻¹² units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FixedFrac(u64);

impl FixedFrac {
    pub const ZERO: FixedFrac = FixedFrac(0);
    pub const ONE: FixedFrac = FixedFrac(FIXED_SCALE);

    /// Builds a fraction from raw 10⁻¹² units.
    pub fn from_units(units: u64) -> Result<Self, FixedError> {
        if units > FIXED_SCALE {
            return Err(FixedError::OutOfRange(format!("{units}e-12")));
        }
        Ok(FixedFrac(units))
    }

    pub const fn units(self) -> u64 {
        self.0
    }

    /// Rounds a float to the nearest unit (ties to even). Analysis paths only.
    pub fn from_f64(value: f64) -> Result<Self, FixedError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(FixedError::OutOfRange(value.to_string()));
        }
        let hp = HighPrec::from_f64(value).ok_or_else(|| FixedError::OutOfRange(value.to_string()))?;
        Ok(FixedFrac(hp.to_fixed_units()))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / FIXED_SCALE as f64
    }

    pub fn saturating_add(self, other: FixedFrac) -> FixedFrac {
        FixedFrac((self.0 + other.0).min(FIXED_SCALE))
    }
}

impl fmt::Display for FixedFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.0 / FIXED_SCALE;
        let frac = self.0 % FIXED_SCALE;
        if frac == 0 {
            return write!(f, "{int}");
        }
        let digits = format!("{frac:012}");
        write!(f, "{int}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for FixedFrac {
    type Err = FixedError;

    /// Exact decimal parse; more than 12 fractional digits are rounded half to even.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FixedError::Parse(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        if int > 1 {
            return Err(FixedError::OutOfRange(s.to_string()));
        }
        let (kept, rest) = frac_part.split_at(frac_part.len().min(FIXED_DECIMALS));
        let mut units: u64 = format!("{kept:0<12}").parse().map_err(|_| bad())?;
        if let Some(first) = rest.bytes().next() {
            let tail_nonzero = rest.bytes().skip(1).any(|b| b != b'0');
            let round_up = match first {
                b'6'..=b'9' => true,
                b'5' => tail_nonzero || units % 2 == 1,
                _ => false,
            };
            if round_up {
                units += 1;
            }
        }
        let total = int * FIXED_SCALE + units;
        FixedFrac::from_units(total).map_err(|_| FixedError::OutOfRange(s.to_string()))
    }
}

impl Serialize for FixedFrac {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FixedFrac {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of fractional bits in [`HighPrec`].
pub const HP_FRAC_BITS: u32 = 120;
const HP_FRAC_MASK: u128 = (1u128 << HP_FRAC_BITS) - 1;

/// Unsigned Q8.120 fixed-point value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HighPrec(pub u128);

impl HighPrec {
    pub const ZERO: HighPrec = HighPrec(0);
    pub const ONE: HighPrec = HighPrec(1u128 << HP_FRAC_BITS);

    /// Exact conversion of a non-negative float below 256. Bits below 2⁻¹²⁰ are truncated.
    pub fn from_f64(value: f64) -> Option<HighPrec> {
        if !(0.0..256.0).contains(&value) {
            return None;
        }
        if value == 0.0 {
            return Some(HighPrec::ZERO);
        }
        let bits = value.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let (mantissa, exp) = if biased == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), biased - 1075)
        };
        let shift = exp + HP_FRAC_BITS as i32;
        let raw = if shift >= 0 {
            (mantissa as u128) << shift
        } else if shift > -128 {
            (mantissa as u128) >> (-shift)
        } else {
            0
        };
        Some(HighPrec(raw))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u128 << HP_FRAC_BITS) as f64
    }

    /// Truncating product. The caller guarantees the result stays below 256.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: HighPrec) -> HighPrec {
        let (hi, lo) = mul_wide(self.0, other.0);
        HighPrec((hi << (128 - HP_FRAC_BITS)) | (lo >> HP_FRAC_BITS))
    }

    pub fn saturating_sub(self, other: HighPrec) -> HighPrec {
        HighPrec(self.0.saturating_sub(other.0))
    }

    pub fn checked_add(self, other: HighPrec) -> Option<HighPrec> {
        self.0.checked_add(other.0).map(HighPrec)
    }

    /// Rounds to 10⁻¹² units, ties to even.
    pub fn to_fixed_units(self) -> u64 {
        let (hi, lo) = mul_wide(self.0, FIXED_SCALE as u128);
        let quotient = (hi << (128 - HP_FRAC_BITS)) | (lo >> HP_FRAC_BITS);
        let rem = lo & HP_FRAC_MASK;
        let half = 1u128 << (HP_FRAC_BITS - 1);
        let rounded = if rem > half || (rem == half && quotient % 2 == 1) { quotient + 1 } else { quotient };
        u64::try_from(rounded).expect("fixed-point value exceeds u64")
    }

    pub fn to_fixed(self) -> FixedFrac {
        FixedFrac(self.to_fixed_units().min(FIXED_SCALE))
    }

    /// e^(−x), evaluated with integer arithmetic only.
    pub fn exp_neg(self) -> HighPrec {
        let whole = self.0 >> HP_FRAC_BITS;
        // e^-84 is below 2^-120
        if whole >= 84 {
            return HighPrec::ZERO;
        }
        let frac = exp_neg_unit(HighPrec(self.0 & HP_FRAC_MASK));
        let mut result = frac;
        let mut base = exp_neg_unit(HighPrec::ONE);
        let mut n = whole as u32;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        result
    }
}

/// Taylor series of e^(−x) for 0 ≤ x ≤ 1, positive and negative terms summed apart.
fn exp_neg_unit(x: HighPrec) -> HighPrec {
    let mut term = HighPrec::ONE;
    let mut positive = HighPrec::ONE.0;
    let mut negative = 0u128;
    let mut k = 1u128;
    loop {
        term = HighPrec(term.mul(x).0 / k);
        if term.0 == 0 {
            break;
        }
        if k % 2 == 1 {
            negative += term.0;
        } else {
            positive += term.0;
        }
        k += 1;
    }
    HighPrec(positive - negative)
}

/// Full 256-bit product of two u128 values as (high, low).
pub(crate) fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}
