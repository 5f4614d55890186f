//! Symplectic-representation Pauli and Clifford operators, the special
//! Clifford subgroup with its keyed sampler, and the twirl identities.

mod clifford;
mod pauli_op;
mod subclifford;
mod twirl;

pub use clifford::{
    apply_pauli, cnot, equal_up_to_phase, hadamard, phase_gate, random_clifford, CliffordOp,
};
pub use pauli_op::{bits_from_index, index_from_bits, pauli_decompose, PauliOp, MAX_DENSE_QUBITS};
pub use subclifford::{
    linear_clifford, sc_enumerate, sc_linear_size, sc_samp, sc_samp_index, sc_size, sl2_elements,
    SubCliffordKey, MAX_ENUM_QUBITS,
};
pub use twirl::{
    epr_projector, epr_twirl_decomposition, group_twirl, twirl_cross_term,
    twirl_cross_term_modified, verify_algebra, AlgebraReport, EprTwirl, TwirlGroup,
};
