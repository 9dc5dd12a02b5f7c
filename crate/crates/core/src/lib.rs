//! Proof-of-Reputation mining.
//!
//! Miners earn a decaying bonus for every block they mine. The bonus lowers
//! their personal difficulty, so a miner with total bonus `Λ(x)` needs only a
//! fraction `1 − Λ(x)` of the usual work. To keep reputation from being
//! rented out, every nonce attempt is signed with the coinbase key.
//!
//! * [`reputation`]: the bonus sequence and the incremental per-miner ledger.
//! * [`consensus`]: headers, 256-bit targets, tailored targets and chain validation.
//! * [`certmine`]: signed-header mining.
//! * [`attacksim`]: closed-form and Monte Carlo analysis of the 51% race.

pub mod attacksim;
pub mod certmine;
pub mod consensus;
pub mod fixed;
pub mod reputation;
pub mod u256;

pub use fixed::{FixedFrac, FIXED_SCALE};
pub use reputation::{MinerId, ReputationLedger, ReputationParams};
pub use u256::U256;
