//! Certified mining.
//!
//! Every nonce attempt must be signed with the secret key of the coinbase
//! address, and the proof-of-work hash covers the signature. Mining on behalf
//! of someone else's reputation therefore requires their secret key, and the
//! cost of each attempt is dominated by the signature rather than the hash.
//!
//! Ed25519 is used because its signatures are deterministic, which makes
//! mining runs reproducible.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consensus::{sha256d, BlockHeader, Hash32, HeaderTemplate, HEADER_LEN, PREIMAGE_LEN, SIGNATURE_LEN};
use crate::reputation::MinerId;
use crate::u256::U256;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("header preimage must be {PREIMAGE_LEN} bytes, got {0}")]
    PreimageLength(usize),
    #[error("mining target must be at least 1")]
    ZeroTarget,
    #[error("key file: {0}")]
    KeyFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A coinbase signing key and the address derived from it.
#[derive(Clone)]
pub struct MinerKeypair {
    signing: SigningKey,
}

impl fmt::Debug for MinerKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MinerKeypair").field("public_address", &self.public_address()).finish_non_exhaustive()
    }
}

impl MinerKeypair {
    pub fn from_secret_bytes(secret: [u8; 32]) -> Self {
        MinerKeypair { signing: SigningKey::from_bytes(&secret) }
    }

    /// Deterministic key derived as SHA-256 of `seed`. For simulations and tests.
    pub fn from_seed(seed: &[u8]) -> Self {
        Self::from_secret_bytes(Sha256::digest(seed).into())
    }

    pub fn generate<R: rand::CryptoRng + rand::RngCore>(rng: &mut R) -> Self {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        Self::from_secret_bytes(secret)
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public_address(&self) -> MinerId {
        MinerId(self.signing.verifying_key().to_bytes())
    }

    pub fn to_key_file(&self) -> KeyFile {
        KeyFile { secret_key_hex: hex::encode(self.secret_bytes()), public_address_hex: self.public_address().to_hex() }
    }

    pub fn from_key_file(file: &KeyFile) -> Result<Self, CertError> {
        let mut secret = [0u8; 32];
        hex::decode_to_slice(&file.secret_key_hex, &mut secret)
            .map_err(|e| CertError::KeyFile(format!("secret_key_hex: {e}")))?;
        let keypair = Self::from_secret_bytes(secret);
        if keypair.public_address().to_hex() != file.public_address_hex.to_ascii_lowercase() {
            return Err(CertError::KeyFile("public_address_hex does not match the secret key".into()));
        }
        Ok(keypair)
    }

    /// Loads a JSON key file. Such files hold a secret key and should be readable by the owner only.
    pub fn load(path: &Path) -> Result<Self, CertError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_key_file(&serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CertError> {
        let mut text = serde_json::to_string_pretty(&self.to_key_file())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk key format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub secret_key_hex: String,
    pub public_address_hex: String,
}

/// Signs a canonical header preimage.
pub fn sign_header(keypair: &MinerKeypair, header_preimage: &[u8]) -> Result<[u8; SIGNATURE_LEN], CertError> {
    if header_preimage.len() != PREIMAGE_LEN {
        return Err(CertError::PreimageLength(header_preimage.len()));
    }
    Ok(keypair.signing.sign(header_preimage).to_bytes())
}

/// True iff `signature` is a valid signature of `header_preimage` under `address`.
/// Malformed keys or signatures simply fail.
pub fn verify_header(address: &MinerId, header_preimage: &[u8], signature: &[u8]) -> bool {
    let Ok(key) = VerifyingKey::from_bytes(address.as_bytes()) else { return false };
    let Ok(signature) = Signature::from_slice(signature) else { return false };
    key.verify(header_preimage, &signature).is_ok()
}

/// A unit of mining work: find a nonce whose signed header hashes below `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningJob {
    pub template: HeaderTemplate,
    pub target: U256,
    pub max_iterations: u64,
}

impl MiningJob {
    pub fn new(template: HeaderTemplate, target: U256, max_iterations: u64) -> Result<Self, CertError> {
        if target.is_zero() {
            return Err(CertError::ZeroTarget);
        }
        Ok(MiningJob { template, target, max_iterations })
    }
}

/// One nonce attempt: exactly one signature and one double hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attempt {
    pub nonce: u64,
    pub signature: [u8; SIGNATURE_LEN],
    pub digest: Hash32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MiningOutcome {
    Found { header: BlockHeader, iterations: u64 },
    Exhausted { iterations: u64 },
}

impl MiningOutcome {
    pub fn iterations(&self) -> u64 {
        match self {
            MiningOutcome::Found { iterations, .. } | MiningOutcome::Exhausted { iterations } => *iterations,
        }
    }

    pub fn header(&self) -> Option<&BlockHeader> {
        match self {
            MiningOutcome::Found { header, .. } => Some(header),
            MiningOutcome::Exhausted { .. } => None,
        }
    }
}

/// First nonce tried for a given seed. Later attempts count up from it, wrapping at 2⁶⁴.
pub fn start_nonce(seed: u64) -> u64 {
    let digest = Sha256::digest(seed.to_be_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn attempt(keypair: &MinerKeypair, template: &HeaderTemplate, nonce: u64) -> Attempt {
    let preimage = template.preimage(nonce);
    let signature = keypair.signing.sign(&preimage).to_bytes();
    let mut bytes = [0u8; HEADER_LEN];
    bytes[..PREIMAGE_LEN].copy_from_slice(&preimage);
    bytes[PREIMAGE_LEN..].copy_from_slice(&signature);
    Attempt { nonce, signature, digest: sha256d(&bytes) }
}

/// Serial certified mining. Deterministic in `(keypair, job, seed)`.
pub fn mine_certified(keypair: &MinerKeypair, job: &MiningJob, seed: u64) -> MiningOutcome {
    mine_certified_traced(keypair, job, seed, |_| {})
}

/// [`mine_certified`] reporting every attempt to `observe`.
pub fn mine_certified_traced<F>(keypair: &MinerKeypair, job: &MiningJob, seed: u64, observe: F) -> MiningOutcome
where
    F: FnMut(&Attempt),
{
    mine_from_nonce(keypair, job, start_nonce(seed), observe)
}

fn mine_from_nonce<F>(keypair: &MinerKeypair, job: &MiningJob, start: u64, mut observe: F) -> MiningOutcome
where
    F: FnMut(&Attempt),
{
    for i in 0..job.max_iterations {
        let a = attempt(keypair, &job.template, start.wrapping_add(i));
        observe(&a);
        if a.digest.to_u256() < job.target {
            return MiningOutcome::Found {
                header: job.template.with_signature(a.nonce, a.signature),
                iterations: i + 1,
            };
        }
    }
    MiningOutcome::Exhausted { iterations: job.max_iterations }
}

/// Certified mining spread over `threads` workers. Thread `t` tries the
/// attempt indices `i ≡ t (mod threads)`; the lowest successful index wins,
/// so the outcome is identical to [`mine_certified`].
pub fn mine_certified_parallel(keypair: &MinerKeypair, job: &MiningJob, seed: u64, threads: usize) -> MiningOutcome {
    let threads = threads.max(1) as u64;
    let start = start_nonce(seed);
    let best = AtomicU64::new(u64::MAX);
    std::thread::scope(|scope| {
        for t in 0..threads {
            let best = &best;
            scope.spawn(move || {
                let mut i = t;
                while i < job.max_iterations && i < best.load(Ordering::Relaxed) {
                    let a = attempt(keypair, &job.template, start.wrapping_add(i));
                    if a.digest.to_u256() < job.target {
                        best.fetch_min(i, Ordering::Relaxed);
                        return;
                    }
                    i += threads;
                }
            });
        }
    });
    match best.into_inner() {
        u64::MAX => MiningOutcome::Exhausted { iterations: job.max_iterations },
        i => {
            let a = attempt(keypair, &job.template, start.wrapping_add(i));
            MiningOutcome::Found { header: job.template.with_signature(a.nonce, a.signature), iterations: i + 1 }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template(kp: &MinerKeypair) -> HeaderTemplate {
        HeaderTemplate {
            height: 1,
            parent_hash: Hash32([1; 32]),
            payload_commitment: Hash32([2; 32]),
            timestamp: 1_700_000_000,
            coinbase_address: kp.public_address(),
        }
    }

    #[test]
    fn sign_verify_examples() {
        let kp = MinerKeypair::from_seed(b"miner-a");
        let other = MinerKeypair::from_seed(b"miner-b");
        let t = template(&kp);
        let pre = t.preimage(42);
        let sig = sign_header(&kp, &pre).unwrap();
        assert!(verify_header(&kp.public_address(), &pre, &sig));
        assert_eq!(sig, sign_header(&kp, &pre).unwrap());

        let mut tampered = pre;
        tampered[87] ^= 1; // last nonce byte
        assert!(!verify_header(&kp.public_address(), &tampered, &sig));
        assert_ne!(sig, sign_header(&kp, &t.preimage(43)).unwrap());

        let foreign = sign_header(&other, &pre).unwrap();
        assert!(!verify_header(&kp.public_address(), &pre, &foreign));
        assert!(!verify_header(&kp.public_address(), &pre, &sig[..63]));
        assert!(!verify_header(&MinerId([0xff; 32]), &pre, &sig));

        assert!(matches!(sign_header(&kp, &pre[..119]), Err(CertError::PreimageLength(119))));
    }

    #[test]
    fn key_file_round_trip() {
        let kp = MinerKeypair::from_seed(b"keyfile");
        let file = kp.to_key_file();
        assert_eq!(MinerKeypair::from_key_file(&file).unwrap().public_address(), kp.public_address());
        let mut wrong = file.clone();
        wrong.public_address_hex = MinerKeypair::from_seed(b"x").public_address().to_hex();
        assert!(MinerKeypair::from_key_file(&wrong).is_err());
        let mut bad = file;
        bad.secret_key_hex.truncate(10);
        assert!(MinerKeypair::from_key_file(&bad).is_err());
    }

    #[test]
    fn always_win_and_never_win() {
        let kp = MinerKeypair::from_seed(b"m");
        let easy = MiningJob::new(template(&kp), U256::MAX, 5).unwrap();
        match mine_certified(&kp, &easy, 9) {
            MiningOutcome::Found { header, iterations } => {
                assert_eq!(iterations, 1);
                assert_eq!(header.nonce, start_nonce(9));
                assert!(verify_header(&kp.public_address(), &header.preimage(), &header.header_signature));
            }
            other => panic!("expected a block, got {other:?}"),
        }
        let hard = MiningJob::new(template(&kp), U256::ONE, 10).unwrap();
        assert_eq!(mine_certified(&kp, &hard, 9), MiningOutcome::Exhausted { iterations: 10 });
        assert!(MiningJob::new(template(&kp), U256::ZERO, 1).is_err());
    }

    #[test]
    fn nonce_wraps_around() {
        let kp = MinerKeypair::from_seed(b"wrap");
        let job = MiningJob::new(template(&kp), U256::ONE, 3).unwrap();
        let mut nonces = Vec::new();
        mine_from_nonce(&kp, &job, u64::MAX - 1, |a| nonces.push(a.nonce));
        assert_eq!(nonces, vec![u64::MAX - 1, u64::MAX, 0]);
    }

    #[test]
    fn parallel_matches_serial() {
        let kp = MinerKeypair::from_seed(b"par");
        let job = MiningJob::new(template(&kp), U256::pow2(250), 10_000).unwrap();
        for seed in 0..4 {
            let serial = mine_certified(&kp, &job, seed);
            for threads in [1, 3, 8] {
                assert_eq!(mine_certified_parallel(&kp, &job, seed, threads), serial);
            }
        }
        let hard = MiningJob::new(template(&kp), U256::ONE, 50).unwrap();
        assert_eq!(mine_certified_parallel(&kp, &hard, 0, 4), MiningOutcome::Exhausted { iterations: 50 });
    }
}
