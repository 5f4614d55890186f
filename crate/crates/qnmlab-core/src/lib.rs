//! Exact, desk-scale simulation laboratory for split-state non-malleable
//! codes and non-malleable secret sharing of quantum messages.
//!
//! Everything here is computed by exact enumeration and dense linear algebra
//! on small registers: tampering experiments are closed-form mixtures, never
//! Monte Carlo, so trace-distance assertions at `1e-8` tolerances are
//! meaningful.
//!
//! The main pieces:
//!
//! - [`qmatrix`]: dense operator algebra over labeled tensor-product
//!   registers (trace distance, fidelity, max-divergence, min-entropy,
//!   purifications, channels, Uhlmann isometries).
//! - [`pauli`]: symplectic Pauli/Clifford operators, the special Clifford
//!   subgroup with its keyed sampler, and the twirl identities.
//! - [`extractors`]: GF(2^k) arithmetic, the inner-product extractor, and the
//!   pluggable two-source non-malleable-extractor contract with exhaustive
//!   desk-scale certification.
//! - [`nmc`]: the split-state non-malleable code for quantum messages
//!   (encode, decode, rate arithmetic).
//! - [`sharing`]: quantum and classical Shamir sharing plus the inner-product
//!   leakage-resilient schemes.
//! - [`nmss`]: the composed threshold non-malleable secret sharing schemes
//!   (quantum-message and quantum-secure classical variants).
//! - [`harness`]: exact tampering/leakage experiment runners and simulator
//!   construction.
//! - [`cli`]: batch front-end used by the `qnmlab` binary.

pub mod cli;
pub mod error;
pub mod extractors;
pub mod harness;
pub mod nmc;
pub mod nmss;
pub mod pauli;
pub mod qmatrix;
pub mod sharing;

pub use error::{Error, Result};
