//! Dense complex operator algebra over labeled tensor-product registers.
//!
//! States carry a [`RegisterLayout`] naming each tensor factor. Trace
//! distance is the *un-halved* 1-norm throughout, so
//! `trace_distance(|0><0|, |1><1|) == 2`.

mod channel;
mod density;
mod functionals;
mod layout;

pub use channel::{apply_channel, stinespring, Channel};
pub use density::{
    condition_on, embed_operator, partial_trace, pure_partial_trace, pure_state_marginal, tensor,
    DensityOperator, PureState,
};
pub use functionals::{
    bures_distance, canonical_purification, dmax, fidelity, hmin, hmin_classical, imax_upper,
    trace_distance, uhlmann_isometry, HminBracket,
};
pub use layout::RegisterLayout;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

/// Hermiticity / positivity / CPTP tolerance used by validity checks.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Complex literal helper.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product in register order: `a` indexes the slow (leftmost) axis.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Identity matrix of the given dimension.
pub fn eye(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Frobenius norm of a complex matrix.
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry of `a - b`.
pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, via `(M + M†)/2`
/// symmetrization to absorb numerical drift.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    (vals, eig.eigenvectors)
}

/// Hermitian matrix function `f` applied through the eigendecomposition,
/// with eigenvalues clamped at zero before applying `f`.
pub fn psd_matrix_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(f(v.max(0.0)), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// PSD square root with eigenvalue clamping.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    psd_matrix_function(m, f64::sqrt)
}

/// Sum of absolute eigenvalues of a Hermitian matrix (Schatten 1-norm).
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Nuclear norm of an arbitrary matrix (sum of singular values).
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}
