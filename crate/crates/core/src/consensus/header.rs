//! Block header and its canonical byte layout.
//!
//! ```text
//! offset  size  field
//!      0     8  height               u64 big-endian
//!      8    32  parent_hash
//!     40    32  payload_commitment
//!     72     8  timestamp            u64 big-endian, seconds
//!     80     8  nonce                u64 big-endian
//!     88    32  coinbase_address     Ed25519 public key
//!    ---------  preimage ends (120 bytes), the signature covers it
//!    120    64  header_signature     Ed25519 signature
//! ```
//!
//! The block hash, used both as the proof-of-work value and as the next
//! block's `parent_hash`, is double SHA-256 over all 184 bytes.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::reputation::MinerId;
use crate::u256::U256;

pub const PREIMAGE_LEN: usize = 120;
pub const SIGNATURE_LEN: usize = 64;
pub const HEADER_LEN: usize = PREIMAGE_LEN + SIGNATURE_LEN;

const NONCE_OFFSET: usize = 80;

/// A 32-byte SHA-256 digest.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Hash32, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Hash32(out))
    }

    /// The digest read as a big-endian 256-bit integer.
    pub fn to_u256(&self) -> U256 {
        U256::from_be_bytes(self.0)
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({})", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Hash32::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// SHA-256 applied twice.
pub fn sha256d(data: &[u8]) -> Hash32 {
    let first = Sha256::digest(data);
    Hash32(Sha256::digest(first).into())
}

/// Every header field except the nonce and the signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderTemplate {
    pub height: u64,
    pub parent_hash: Hash32,
    pub payload_commitment: Hash32,
    pub timestamp: u64,
    pub coinbase_address: MinerId,
}

impl HeaderTemplate {
    pub fn preimage(&self, nonce: u64) -> [u8; PREIMAGE_LEN] {
        let mut out = [0u8; PREIMAGE_LEN];
        out[0..8].copy_from_slice(&self.height.to_be_bytes());
        out[8..40].copy_from_slice(&self.parent_hash.0);
        out[40..72].copy_from_slice(&self.payload_commitment.0);
        out[72..80].copy_from_slice(&self.timestamp.to_be_bytes());
        out[NONCE_OFFSET..NONCE_OFFSET + 8].copy_from_slice(&nonce.to_be_bytes());
        out[88..120].copy_from_slice(self.coinbase_address.as_bytes());
        out
    }

    pub fn with_signature(&self, nonce: u64, header_signature: [u8; SIGNATURE_LEN]) -> BlockHeader {
        BlockHeader {
            height: self.height,
            parent_hash: self.parent_hash,
            payload_commitment: self.payload_commitment,
            timestamp: self.timestamp,
            nonce,
            coinbase_address: self.coinbase_address,
            header_signature,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub parent_hash: Hash32,
    pub payload_commitment: Hash32,
    pub timestamp: u64,
    pub nonce: u64,
    pub coinbase_address: MinerId,
    pub header_signature: [u8; SIGNATURE_LEN],
}

impl fmt::Debug for BlockHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockHeader")
            .field("height", &self.height)
            .field("parent_hash", &self.parent_hash)
            .field("nonce", &self.nonce)
            .field("coinbase_address", &self.coinbase_address)
            .finish_non_exhaustive()
    }
}

impl BlockHeader {
    /// The all-zero genesis header. It carries no valid signature and credits nobody.
    pub fn genesis() -> BlockHeader {
        BlockHeader {
            height: 0,
            parent_hash: Hash32::ZERO,
            payload_commitment: Hash32::ZERO,
            timestamp: 0,
            nonce: 0,
            coinbase_address: MinerId([0; MinerId::LEN]),
            header_signature: [0; SIGNATURE_LEN],
        }
    }

    pub fn template(&self) -> HeaderTemplate {
        HeaderTemplate {
            height: self.height,
            parent_hash: self.parent_hash,
            payload_commitment: self.payload_commitment,
            timestamp: self.timestamp,
            coinbase_address: self.coinbase_address,
        }
    }

    /// The signed bytes.
    pub fn preimage(&self) -> [u8; PREIMAGE_LEN] {
        self.template().preimage(self.nonce)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..PREIMAGE_LEN].copy_from_slice(&self.preimage());
        out[PREIMAGE_LEN..].copy_from_slice(&self.header_signature);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<BlockHeader> {
        if bytes.len() != HEADER_LEN {
            return None;
        }
        let u64_at = |at: usize| u64::from_be_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        let h32_at = |at: usize| -> [u8; 32] { bytes[at..at + 32].try_into().expect("32 bytes") };
        Some(BlockHeader {
            height: u64_at(0),
            parent_hash: Hash32(h32_at(8)),
            payload_commitment: Hash32(h32_at(40)),
            timestamp: u64_at(72),
            nonce: u64_at(NONCE_OFFSET),
            coinbase_address: MinerId(h32_at(88)),
            header_signature: bytes[PREIMAGE_LEN..].try_into().expect("64 bytes"),
        })
    }

    /// Double SHA-256 of preimage ‖ signature.
    pub fn hash(&self) -> Hash32 {
        sha256d(&self.to_bytes())
    }

    pub fn pow_value(&self) -> U256 {
        self.hash().to_u256()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sha256d_known_vector() {
        // double SHA-256 of the empty string
        assert_eq!(sha256d(b"").to_hex(), "5df6e0e2761359d30a8275058e299fcc0381534545f55cf43e41983f5d4c9456");
    }

    #[test]
    fn layout_offsets() {
        let header = BlockHeader {
            height: 0x0102030405060708,
            parent_hash: Hash32([0xaa; 32]),
            payload_commitment: Hash32([0xbb; 32]),
            timestamp: 0x1112131415161718,
            nonce: 0x2122232425262728,
            coinbase_address: MinerId([0xcc; 32]),
            header_signature: [0xdd; 64],
        };
        let bytes = header.to_bytes();
        assert_eq!(&bytes[0..8], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(bytes[8], 0xaa);
        assert_eq!(bytes[40], 0xbb);
        assert_eq!(bytes[72], 0x11);
        assert_eq!(bytes[80], 0x21);
        assert_eq!(bytes[88], 0xcc);
        assert_eq!(bytes[120], 0xdd);
        assert_eq!(bytes[183], 0xdd);
        assert!(BlockHeader::from_bytes(&bytes[..183]).is_none());
    }

    #[test]
    fn genesis_hash_is_stable() {
        assert_eq!(BlockHeader::genesis().hash(), sha256d(&[0u8; HEADER_LEN]));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(height: u64, ts: u64, nonce: u64, parent: [u8; 32], payload: [u8; 32], coinbase: [u8; 32], sig in proptest::collection::vec(any::<u8>(), 64)) {
            let header = BlockHeader {
                height,
                parent_hash: Hash32(parent),
                payload_commitment: Hash32(payload),
                timestamp: ts,
                nonce,
                coinbase_address: MinerId(coinbase),
                header_signature: sig.try_into().unwrap(),
            };
            let bytes = header.to_bytes();
            prop_assert_eq!(BlockHeader::from_bytes(&bytes), Some(header));
            prop_assert_eq!(&bytes[..PREIMAGE_LEN], &header.preimage()[..]);
        }
    }
}
