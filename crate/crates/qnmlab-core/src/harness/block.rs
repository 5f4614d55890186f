//! Small dense blocks over the quantum registers of a tampering experiment,
//! with the classical registers handled by enumeration outside. The fixed
//! register order is `(Z, Mhat, W1, W2)` with `W2` fastest.

use crate::qmatrix::{CMatrix, CVector};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDims {
    pub d_z: usize,
    pub d_m: usize,
    pub d1: usize,
    pub d2: usize,
}

impl BlockDims {
    pub fn total(&self) -> usize {
        self.d_z * self.d_m * self.d1 * self.d2
    }

    fn strides(&self) -> [usize; 4] {
        [
            self.d_m * self.d1 * self.d2,
            self.d1 * self.d2,
            self.d2,
            1,
        ]
    }

    fn dims(&self) -> [usize; 4] {
        [self.d_z, self.d_m, self.d1, self.d2]
    }

    /// Decompose a flat index into the sub-index over `axes` (in the given
    /// order) and the rest-index over the remaining axes.
    fn split(&self, idx: usize, axes: &[usize]) -> (usize, usize) {
        let dims = self.dims();
        let strides = self.strides();
        let mut sub = 0usize;
        for &a in axes {
            sub = sub * dims[a] + (idx / strides[a]) % dims[a];
        }
        let mut rest = 0usize;
        for a in 0..4 {
            if !axes.contains(&a) {
                rest = rest * dims[a] + (idx / strides[a]) % dims[a];
            }
        }
        (sub, rest)
    }

    fn sub_dim(&self, axes: &[usize]) -> usize {
        axes.iter().map(|&a| self.dims()[a]).product()
    }
}

/// Conjugate a block by an operator acting on the given axes:
/// `out = (op ⊗ I) m (op ⊗ I)†`.
pub fn conjugate_on(m: &CMatrix, dims: &BlockDims, axes: &[usize], op: &CMatrix) -> CMatrix {
    let total = dims.total();
    debug_assert_eq!(m.nrows(), total);
    let sub_dim = dims.sub_dim(axes);
    debug_assert_eq!(op.nrows(), sub_dim);
    // Precompute index decomposition and the inverse map.
    let mut decomp = vec![(0usize, 0usize); total];
    let mut lookup = vec![0usize; total];
    for idx in 0..total {
        let (sub, rest) = dims.split(idx, axes);
        decomp[idx] = (sub, rest);
        lookup[sub * (total / sub_dim) + rest] = idx;
    }
    // Left application.
    let mut tmp = CMatrix::zeros(total, total);
    for col in 0..total {
        for idx in 0..total {
            let v = m[(idx, col)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let (sub, rest) = decomp[idx];
            for s2 in 0..sub_dim {
                let o = op[(s2, sub)];
                if o.norm_sqr() == 0.0 {
                    continue;
                }
                tmp[(lookup[s2 * (total / sub_dim) + rest], col)] += o * v;
            }
        }
    }
    // Right application of op†.
    let mut out = CMatrix::zeros(total, total);
    for row in 0..total {
        for idx in 0..total {
            let v = tmp[(row, idx)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let (sub, rest) = decomp[idx];
            for s2 in 0..sub_dim {
                let o = op[(s2, sub)].conj();
                if o.norm_sqr() == 0.0 {
                    continue;
                }
                out[(row, lookup[s2 * (total / sub_dim) + rest])] += v * o;
            }
        }
    }
    out
}

/// Partial trace keeping the given axes (in the given order).
pub fn trace_keep(m: &CMatrix, dims: &BlockDims, keep: &[usize]) -> CMatrix {
    let total = dims.total();
    let keep_dim = dims.sub_dim(keep);
    let mut out = CMatrix::zeros(keep_dim, keep_dim);
    let mut decomp = vec![(0usize, 0usize); total];
    for idx in 0..total {
        decomp[idx] = dims.split(idx, keep);
    }
    for i in 0..total {
        let (ki, ri) = decomp[i];
        for j in 0..total {
            let (kj, rj) = decomp[j];
            if ri == rj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// Trace of `pi * m` for equal-dimension square matrices.
pub fn overlap(pi: &CMatrix, m: &CMatrix) -> f64 {
    (pi * m).diagonal().iter().map(|z| z.re).sum()
}

/// Outer product of a shared `(W1, W2)` vector.
pub fn shared_density(shared: &CVector) -> CMatrix {
    shared * shared.adjoint()
}

/// Kronecker helper: `(sigma on Z, Mhat) ⊗ (psi on W1, W2)` in block order.
pub fn base_block(sigma_zm: &CMatrix, psi_w: &CMatrix) -> CMatrix {
    sigma_zm.kronecker(psi_w)
}

/// Maximally entangled density on `(Z, Mhat)` of equal dimension `d`.
pub fn epr_zm(d: usize) -> CMatrix {
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = crate::qmatrix::c(1.0 / (d as f64).sqrt(), 0.0);
    }
    &v * v.adjoint()
}

/// Scale-and-add into an accumulator.
pub fn axpy(acc: &mut CMatrix, w: f64, m: &CMatrix) {
    *acc += m.scale(w);
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

pub fn scalar(z: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}
