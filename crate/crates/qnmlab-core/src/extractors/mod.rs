//! Finite-field inner-product extractor, qpa-state checks, and the pluggable
//! non-malleable-extractor contract with exhaustively certified toy
//! instances.

pub mod gf;
pub mod ip;
pub mod nmext;
pub mod qpa;

pub use gf::{FieldVector, Gf};
pub use ip::{ip_extract, ip_preimage_count, ip_preimage_enumerate, ip_preimage_sample};
pub use nmext::{
    find_toy_nmext, nmext_certify_classical, CertificationReport, NmExtDescriptor, TamperFamily,
    TamperResult,
};
pub use qpa::{qpa_check, QpaRegisters, QpaReport};
