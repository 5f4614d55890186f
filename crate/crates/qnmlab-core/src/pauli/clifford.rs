use super::pauli_op::{bits_from_index, index_from_bits, PauliOp, MAX_DENSE_QUBITS};
use crate::qmatrix::{c, CMatrix, CVector};
use crate::{Error, Result};
use num_complex::Complex64;
use once_cell::sync::OnceCell;

/// Clifford operator in tableau form: the exact conjugation images of the
/// generators `X_j` and `Z_j`, with phases tracked mod 4. The dense unitary
/// realization is computed lazily and memoized (twirl sums reuse elements
/// heavily).
#[derive(Debug, Clone)]
pub struct CliffordOp {
    n: usize,
    x_images: Vec<PauliOp>,
    z_images: Vec<PauliOp>,
    dense: OnceCell<CMatrix>,
}

impl PartialEq for CliffordOp {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.x_images == other.x_images && self.z_images == other.z_images
    }
}

impl CliffordOp {
    pub fn identity(n: usize) -> Self {
        let x_images = (0..n).map(|j| PauliOp::hermitian(n, 1 << j, 0)).collect();
        let z_images = (0..n).map(|j| PauliOp::hermitian(n, 0, 1 << j)).collect();
        Self {
            n,
            x_images,
            z_images,
            dense: OnceCell::new(),
        }
    }

    /// Build from generator images, validating that they define a symplectic
    /// (commutation-preserving) map with Hermitian images.
    pub fn from_images(x_images: Vec<PauliOp>, z_images: Vec<PauliOp>) -> Result<Self> {
        let n = x_images.len();
        if z_images.len() != n {
            return Err(Error::InvalidParams("generator image count mismatch".into()));
        }
        let herm_ok = |p: &PauliOp| (p.phase() as u32 & 1) == ((p.x_bits() & p.z_bits()).count_ones() & 1);
        for p in x_images.iter().chain(&z_images) {
            if p.n() != n {
                return Err(Error::InvalidParams("image qubit count mismatch".into()));
            }
            if !herm_ok(p) {
                return Err(Error::InvalidParams("generator image not Hermitian".into()));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !x_images[i].commutes_with(&x_images[j])
                    || !z_images[i].commutes_with(&z_images[j])
                {
                    return Err(Error::InvalidParams(
                        "images do not preserve commutation".into(),
                    ));
                }
                let anti = !x_images[i].commutes_with(&z_images[j]);
                if anti != (i == j) {
                    return Err(Error::InvalidParams(
                        "images do not preserve the symplectic form".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n,
            x_images,
            z_images,
            dense: OnceCell::new(),
        })
    }

    /// Conjugation by a Pauli operator (sign flips on anticommuting
    /// generators).
    pub fn from_pauli(p: &PauliOp) -> Self {
        let n = p.n();
        let flip = |gen: PauliOp| {
            if gen.commutes_with(p) {
                gen
            } else {
                gen.with_phase(gen.phase().wrapping_add(2))
            }
        };
        Self {
            n,
            x_images: (0..n)
                .map(|j| flip(PauliOp::hermitian(n, 1 << j, 0)))
                .collect(),
            z_images: (0..n)
                .map(|j| flip(PauliOp::hermitian(n, 0, 1 << j)))
                .collect(),
            dense: OnceCell::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, j: usize) -> &PauliOp {
        &self.x_images[j]
    }

    pub fn z_image(&self, j: usize) -> &PauliOp {
        &self.z_images[j]
    }

    /// Exact conjugation `C P C†` with phase tracking.
    pub fn conjugate(&self, p: &PauliOp) -> PauliOp {
        debug_assert_eq!(p.n(), self.n);
        let mut acc = PauliOp::identity(self.n).with_phase(p.phase());
        for j in 0..self.n {
            if p.x_bits() >> j & 1 == 1 {
                acc = acc.mul(&self.x_images[j]);
            }
        }
        for j in 0..self.n {
            if p.z_bits() >> j & 1 == 1 {
                acc = acc.mul(&self.z_images[j]);
            }
        }
        acc
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            x_images: (0..self.n)
                .map(|j| self.conjugate(&other.x_images[j]))
                .collect(),
            z_images: (0..self.n)
                .map(|j| self.conjugate(&other.z_images[j]))
                .collect(),
            dense: OnceCell::new(),
        }
    }

    /// Inverse tableau: solves the symplectic system and fixes phases by one
    /// conjugation round-trip per generator.
    pub fn inverse(&self) -> Self {
        let n = self.n;
        // Binary matrix with columns = image labels, as 2n-bit rows.
        let cols: Vec<u64> = self
            .x_images
            .iter()
            .chain(&self.z_images)
            .map(|p| p.label())
            .collect();
        let inv = invert_gf2(&cols, 2 * n);
        let preimage = |target_col: usize, want: PauliOp| -> PauliOp {
            let v = inv[target_col];
            let p0 = PauliOp::from_label(n, v);
            let image = self.conjugate(&p0);
            debug_assert!(image.same_class(&want));
            // image = i^k * want; return i^{-k} p0.
            let k = image.phase().wrapping_sub(want.phase()) & 3;
            p0.with_phase(p0.phase().wrapping_add(4 - k))
        };
        Self {
            n,
            x_images: (0..n)
                .map(|j| preimage(j, PauliOp::hermitian(n, 1 << j, 0)))
                .collect(),
            z_images: (0..n)
                .map(|j| preimage(n + j, PauliOp::hermitian(n, 0, 1 << j)))
                .collect(),
            dense: OnceCell::new(),
        }
    }

    /// Dense unitary realization, unique up to the fixed global-phase
    /// convention (first significant amplitude of the stabilized column made
    /// real positive).
    pub fn dense(&self) -> Result<&CMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::DimensionCap(format!(
                "dense Clifford on {} qubits exceeds the {MAX_DENSE_QUBITS}-qubit cap",
                self.n
            )));
        }
        self.dense.get_or_try_init(|| {
            let n = self.n;
            let dim = 1usize << n;
            // |v0> spans the joint +1 eigenspace of the Z-generator images.
            let mut proj = CMatrix::identity(dim, dim);
            for q in &self.z_images {
                let qd = q.dense()?;
                proj = (&proj + &proj * qd).scale(0.5);
            }
            let (col_idx, _) = (0..dim)
                .map(|i| (i, proj.column(i).norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let col = proj.column(col_idx).into_owned();
            let norm = col.norm();
            if norm < 1e-8 {
                return Err(Error::InvalidState(
                    "stabilizer projector vanished; images inconsistent".into(),
                ));
            }
            let mut v0 = col.scale(1.0 / norm);
            let lead = v0.iter().find(|z| z.norm() > 1e-8).copied().unwrap();
            let correction = lead.conj() / lead.norm();
            v0 *= correction;

            // Column u is (prod_j P_j^{u_j}) |v0> with commuting X-images.
            let mut m = CMatrix::zeros(dim, dim);
            for col in 0..dim {
                let u = bits_from_index(col, n);
                let mut p = PauliOp::identity(n);
                for j in 0..n {
                    if u >> j & 1 == 1 {
                        p = p.mul(&self.x_images[j]);
                    }
                }
                let w = apply_pauli(&p, &v0);
                m.set_column(col, &w);
            }
            Ok(m)
        })
    }
}

/// Apply a Pauli (signed permutation) to a state vector.
pub fn apply_pauli(p: &PauliOp, v: &CVector) -> CVector {
    let n = p.n();
    let dim = v.len();
    let ph = Complex64::i().powu(p.phase() as u32);
    let mut out = CVector::zeros(dim);
    for col in 0..dim {
        if v[col].norm_sqr() == 0.0 {
            continue;
        }
        let u = bits_from_index(col, n);
        let sign = if (p.z_bits() & u).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let row = index_from_bits(u ^ p.x_bits(), n);
        out[row] += ph * c(sign, 0.0) * v[col];
    }
    out
}

/// Two matrices equal up to a global phase.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (mut idx, mut best) = ((0, 0), 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)].norm() > best {
                best = a[(i, j)].norm();
                idx = (i, j);
            }
        }
    }
    if best < tol {
        return crate::qmatrix::max_entry_diff(a, b) < tol;
    }
    if b[idx].norm() < tol {
        return false;
    }
    let phase = b[idx] / a[idx];
    if (phase.norm() - 1.0).abs() > 1e-6 {
        return false;
    }
    crate::qmatrix::max_entry_diff(&a.scale(1.0).map(|z| z * phase), b) < tol
}

/// Invert a binary matrix given as bit-row columns (`cols[j]` holds column j
/// as a bit-packed integer); returns the inverse's columns in the same
/// encoding.
fn invert_gf2(cols: &[u64], size: usize) -> Vec<u64> {
    // rows[i] = (row of [A | I]) packed with A in low `size` bits.
    let mut rows: Vec<u128> = (0..size)
        .map(|i| {
            let mut r: u128 = 0;
            for (j, col) in cols.iter().enumerate() {
                if col >> i & 1 == 1 {
                    r |= 1 << j;
                }
            }
            r | (1u128 << (size + i))
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size)
            .find(|&r| rows[r] >> col & 1 == 1)
            .expect("symplectic matrix is invertible");
        rows.swap(col, pivot);
        for r in 0..size {
            if r != col && rows[r] >> col & 1 == 1 {
                rows[r] ^= rows[col];
            }
        }
    }
    // Extract inverse columns: inv[i][j] = bit j of augmented part of row i;
    // column c of the inverse packs inv[r][c] over r.
    (0..size)
        .map(|cidx| {
            let mut packed = 0u64;
            for r in 0..size {
                if rows[r] >> (size + cidx) & 1 == 1 {
                    packed |= 1 << r;
                }
            }
            packed
        })
        .collect()
}

/// Standard generators, used to build random Cliffords in tests and the
/// adversary zoo.
pub fn hadamard(n: usize, j: usize) -> CliffordOp {
    let mut x_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 1 << i, 0)).collect();
    let mut z_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 0, 1 << i)).collect();
    x_images[j] = PauliOp::hermitian(n, 0, 1 << j);
    z_images[j] = PauliOp::hermitian(n, 1 << j, 0);
    CliffordOp::from_images(x_images, z_images).unwrap()
}

pub fn phase_gate(n: usize, j: usize) -> CliffordOp {
    let mut x_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 1 << i, 0)).collect();
    let z_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 0, 1 << i)).collect();
    x_images[j] = PauliOp::hermitian(n, 1 << j, 1 << j);
    CliffordOp::from_images(x_images, z_images).unwrap()
}

pub fn cnot(n: usize, control: usize, target: usize) -> CliffordOp {
    assert_ne!(control, target);
    let mut x_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 1 << i, 0)).collect();
    let mut z_images: Vec<PauliOp> = (0..n).map(|i| PauliOp::hermitian(n, 0, 1 << i)).collect();
    x_images[control] = PauliOp::hermitian(n, (1 << control) | (1 << target), 0);
    z_images[target] = PauliOp::hermitian(n, 0, (1 << control) | (1 << target));
    CliffordOp::from_images(x_images, z_images).unwrap()
}

/// Seeded random Clifford as a product of elementary gates.
pub fn random_clifford(n: usize, rng: &mut impl rand::Rng) -> CliffordOp {
    let mut acc = CliffordOp::identity(n);
    for _ in 0..(8 * n + 4) {
        let gate = match rng.gen_range(0..3) {
            0 => hadamard(n, rng.gen_range(0..n)),
            1 => phase_gate(n, rng.gen_range(0..n)),
            _ => {
                if n == 1 {
                    hadamard(n, 0)
                } else {
                    let c_ = rng.gen_range(0..n);
                    let mut t = rng.gen_range(0..n);
                    while t == c_ {
                        t = rng.gen_range(0..n);
                    }
                    cnot(n, c_, t)
                }
            }
        };
        acc = gate.compose(&acc);
        // Random Pauli layer.
        if rng.gen_bool(0.5) {
            let p = PauliOp::hermitian(n, rng.gen::<u32>(), rng.gen::<u32>());
            acc = CliffordOp::from_pauli(&p).compose(&acc);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::max_entry_diff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn dense_of_identity_is_identity() {
        let c_ = CliffordOp::identity(2);
        assert!(max_entry_diff(c_.dense().unwrap(), &CMatrix::identity(4, 4)) < 1e-13);
    }

    #[test]
    fn dense_of_hadamard_and_phase() {
        let h = hadamard(1, 0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
        );
        assert!(equal_up_to_phase(h.dense().unwrap(), &expect, 1e-12));

        let p = phase_gate(1, 0);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        );
        assert!(equal_up_to_phase(p.dense().unwrap(), &expect, 1e-12));
    }

    #[test]
    fn symplectic_dense_homomorphism_random_cases() {
        // Composition and conjugation commute with dense realization.
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        for case in 0..200 {
            let n = 1 + (case % 2);
            let a = random_clifford(n, &mut rng);
            let b = random_clifford(n, &mut rng);
            let ab = a.compose(&b);
            let dense_prod = a.dense().unwrap() * b.dense().unwrap();
            assert!(
                equal_up_to_phase(ab.dense().unwrap(), &dense_prod, 1e-11),
                "composition mismatch at case {case}"
            );

            let p = PauliOp::from_label(n, (case as u64) % (1 << (2 * n)));
            let sym = a.conjugate(&p).dense().unwrap();
            let den = a.dense().unwrap() * p.dense().unwrap() * a.dense().unwrap().adjoint();
            assert!(
                max_entry_diff(&sym, &den) < 1e-11,
                "conjugation mismatch at case {case}"
            );
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(67);
        for _ in 0..20 {
            let a = random_clifford(2, &mut rng);
            let inv = a.inverse();
            let id = a.compose(&inv);
            assert_eq!(id, CliffordOp::identity(2));
            let dense_prod = a.dense().unwrap() * inv.dense().unwrap();
            assert!(equal_up_to_phase(&dense_prod, &CMatrix::identity(4, 4), 1e-11));
        }
    }

    #[test]
    fn dense_is_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(71);
        for _ in 0..20 {
            let a = random_clifford(2, &mut rng);
            let d = a.dense().unwrap();
            assert!(max_entry_diff(&(d.adjoint() * d), &CMatrix::identity(4, 4)) < 1e-12);
        }
    }

    #[test]
    fn pauli_conjugation_clifford() {
        let p = PauliOp::parse("XZ").unwrap();
        let cp = CliffordOp::from_pauli(&p);
        for q in PauliOp::enumerate_classes(2) {
            let sym = cp.conjugate(&q).dense().unwrap();
            let pd = p.dense().unwrap();
            let den = &pd * q.dense().unwrap() * pd.adjoint();
            assert!(max_entry_diff(&sym, &den) < 1e-12);
        }
    }
}
