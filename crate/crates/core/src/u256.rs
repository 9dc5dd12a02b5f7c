//! Fixed-width 256-bit unsigned integer for targets and hash digests.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum U256ParseError {
    #[error("hex string is empty")]
    Empty,
    #[error("hex string longer than 64 digits")]
    TooLong,
    #[error("invalid hex digit in {0:?}")]
    InvalidDigit(String),
}

/// 256-bit unsigned integer, limbs stored least significant first.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct U256([u64; 4]);

impl U256 {
    pub const ZERO: U256 = U256([0; 4]);
    pub const ONE: U256 = U256([1, 0, 0, 0]);
    pub const MAX: U256 = U256([u64::MAX; 4]);

    pub const fn from_u64(value: u64) -> U256 {
        U256([value, 0, 0, 0])
    }

    /// 2^exp for exp < 256.
    pub fn pow2(exp: u32) -> U256 {
        assert!(exp < 256, "2^{exp} does not fit in 256 bits");
        let mut limbs = [0u64; 4];
        limbs[(exp / 64) as usize] = 1u64 << (exp % 64);
        U256(limbs)
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> U256 {
        let mut limbs = [0u64; 4];
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            limbs[3 - i] = u64::from_be_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        U256(limbs)
    }

    pub fn to_be_bytes(self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for i in 0..4 {
            out[i * 8..(i + 1) * 8].copy_from_slice(&self.0[3 - i].to_be_bytes());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn bits(&self) -> u32 {
        for i in (0..4).rev() {
            if self.0[i] != 0 {
                return 64 * i as u32 + (64 - self.0[i].leading_zeros());
            }
        }
        0
    }

    pub fn checked_add(self, other: U256) -> Option<U256> {
        let mut out = [0u64; 4];
        let mut carry = false;
        for (i, limb) in out.iter_mut().enumerate() {
            let (s1, c1) = self.0[i].overflowing_add(other.0[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *limb = s2;
            carry = c1 || c2;
        }
        (!carry).then_some(U256(out))
    }

    pub fn checked_sub(self, other: U256) -> Option<U256> {
        let mut out = [0u64; 4];
        let mut borrow = false;
        for (i, limb) in out.iter_mut().enumerate() {
            let (d1, b1) = self.0[i].overflowing_sub(other.0[i]);
            let (d2, b2) = d1.overflowing_sub(borrow as u64);
            *limb = d2;
            borrow = b1 || b2;
        }
        (!borrow).then_some(U256(out))
    }

    pub fn checked_mul_u64(self, factor: u64) -> Option<U256> {
        let mut out = [0u64; 4];
        let mut carry = 0u128;
        for (i, limb) in out.iter_mut().enumerate() {
            let wide = self.0[i] as u128 * factor as u128 + carry;
            *limb = wide as u64;
            carry = wide >> 64;
        }
        (carry == 0).then_some(U256(out))
    }

    /// Quotient and remainder by a non-zero u64.
    pub fn div_rem_u64(self, divisor: u64) -> (U256, u64) {
        assert!(divisor != 0, "division by zero");
        let mut out = [0u64; 4];
        let mut rem = 0u128;
        for i in (0..4).rev() {
            let cur = (rem << 64) | self.0[i] as u128;
            out[i] = (cur / divisor as u128) as u64;
            rem = cur % divisor as u128;
        }
        (U256(out), rem as u64)
    }

    /// Lossy conversion for reporting.
    pub fn to_f64(self) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &limb| acc * 18_446_744_073_709_551_616.0 + limb as f64)
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.to_be_bytes())
    }

    /// Parses up to 64 hex digits, with or without a `0x` prefix.
    pub fn from_hex(s: &str) -> Result<U256, U256ParseError> {
        let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        if digits.is_empty() {
            return Err(U256ParseError::Empty);
        }
        if digits.len() > 64 {
            return Err(U256ParseError::TooLong);
        }
        let padded = format!("{digits:0>64}");
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(&padded, &mut bytes).map_err(|_| U256ParseError::InvalidDigit(s.to_string()))?;
        Ok(U256::from_be_bytes(bytes))
    }
}

impl Ord for U256 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for U256 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<u64> for U256 {
    fn from(value: u64) -> Self {
        U256::from_u64(value)
    }
}

impl fmt::Debug for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl fmt::Display for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl FromStr for U256 {
    type Err = U256ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        U256::from_hex(s)
    }
}

impl Serialize for U256 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for U256 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        U256::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn big(v: U256) -> BigUint {
        BigUint::from_bytes_be(&v.to_be_bytes())
    }

    fn any_u256() -> impl Strategy<Value = U256> {
        any::<[u8; 32]>().prop_map(U256::from_be_bytes)
    }

    #[test]
    fn hex_parsing() {
        assert_eq!(U256::from_hex("0x01").unwrap(), U256::ONE);
        assert_eq!(U256::from_hex(&"f".repeat(64)).unwrap(), U256::MAX);
        assert_eq!(U256::from_hex("").unwrap_err(), U256ParseError::Empty);
        assert_eq!(U256::from_hex(&"0".repeat(65)).unwrap_err(), U256ParseError::TooLong);
        assert!(matches!(U256::from_hex("zz"), Err(U256ParseError::InvalidDigit(_))));
        assert_eq!(U256::pow2(255).to_hex(), format!("8{}", "0".repeat(63)));
    }

    #[test]
    fn bits_and_overflow() {
        assert_eq!(U256::ZERO.bits(), 0);
        assert_eq!(U256::pow2(200).bits(), 201);
        assert_eq!(U256::MAX.checked_add(U256::ONE), None);
        assert_eq!(U256::ZERO.checked_sub(U256::ONE), None);
        assert_eq!(U256::MAX.checked_mul_u64(2), None);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_bigint(a in any_u256(), b in any_u256(), k in 1u64..) {
            let modulus = BigUint::from(1u8) << 256u32;
            let sum = big(a) + big(b);
            prop_assert_eq!(a.checked_add(b).map(big), (sum < modulus).then_some(sum));
            let prod = big(a) * BigUint::from(k);
            prop_assert_eq!(a.checked_mul_u64(k).map(big), (prod < modulus).then_some(prod));
            let (q, r) = a.div_rem_u64(k);
            prop_assert_eq!(big(q), big(a) / BigUint::from(k));
            prop_assert_eq!(BigUint::from(r), big(a) % BigUint::from(k));
            prop_assert_eq!(a.cmp(&b), big(a).cmp(&big(b)));
            prop_assert_eq!(U256::from_hex(&a.to_hex()).unwrap(), a);
        }
    }
}
