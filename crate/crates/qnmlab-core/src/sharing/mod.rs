//! Quantum Shamir, classical Shamir, and the inner-product augmented
//! leakage-resilient sharing schemes.

pub mod cshamir;
pub mod lrss;
pub mod prime_field;
pub mod qshamir;

pub use cshamir::{cshamir_distribution, cshamir_rec, cshamir_share};
pub use lrss::{
    lrrec2, lrrec_2p, lrshare2, lrshare2_distribution, lrshare_2p, LrssParams, Share2p,
};
pub use prime_field::PrimeField;
pub use qshamir::{qrec, qshare, qshare_operator, qshare_pure, QShamirParams, QuantumShareSet};
