//! Exact tampering/leakage experiment runners, simulator construction, and
//! definition checks for the coding schemes.

pub mod adversary;
pub mod block;
pub mod leakage;
pub mod nmc_exp;
pub mod nmss_exp;
pub mod report;

pub use adversary::{AdversarySpec, ClassicalTamper, SplitAdversary};
pub use nmc_exp::{rejection_condition, NmOutcome, NmcExperiment, Simulator, StageDiffs, Wiring};
pub use leakage::{leakage_2of2, leakage_2ofp, LeakageAdversary};
pub use report::ExperimentRecord;
pub use nmss_exp::{
    bit_transition, nmss_privacy, p_x_same, run_nmss_experiment, NmssOutcome, RTamper,
    ThresholdAdversary,
};

/// Small deterministic digest (FNV-1a folded to 128 bits) for byte-exact
/// fingerprints in determinism checks.
pub fn fingerprint_digest(bytes: &[u8]) -> [u8; 16] {
    let mut h1: u64 = 0xcbf29ce484222325;
    let mut h2: u64 = 0x84222325cbf29ce4;
    for &b in bytes {
        h1 ^= b as u64;
        h1 = h1.wrapping_mul(0x100000001b3);
        h2 = h2.rotate_left(13) ^ (b as u64).wrapping_mul(0x100000001b3);
    }
    let mut out = [0u8; 16];
    out[..8].copy_from_slice(&h1.to_le_bytes());
    out[8..].copy_from_slice(&h2.to_le_bytes());
    out
}
