//! Split-state adversaries in "safe" form: classical tamper functions on
//! the classical codeword strings, plus controlled unitaries on the quantum
//! registers. Isometries can be assumed safe on classical registers without
//! loss of power (the adversary copies the string first), and every zoo
//! strategy fits this shape; it is also what keeps desk-scale experiments
//! exactly enumerable.

use crate::qmatrix::{CMatrix, CVector, VALIDITY_TOL};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Classical tamper function on a bit-string register, in enumerable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ClassicalTamper {
    Identity,
    /// Replace by a constant.
    Constant(u64),
    /// Xor with a mask (covers Pauli-X patterns on classical registers).
    Xor(u64),
    /// Seeded random function over the whole domain.
    SeededRandom { seed: u64 },
    /// Explicit truth table (small domains only).
    Table(Vec<u64>),
}

impl ClassicalTamper {
    pub fn apply(&self, v: u64, bits: usize) -> u64 {
        let mask = (1u64 << bits) - 1;
        match self {
            ClassicalTamper::Identity => v,
            ClassicalTamper::Constant(c) => c & mask,
            ClassicalTamper::Xor(m) => (v ^ m) & mask,
            ClassicalTamper::SeededRandom { seed } => {
                // Splitmix-style hash keyed by the seed: deterministic,
                // uniform-ish over the masked domain.
                let mut z = v
                    .wrapping_add(*seed)
                    .wrapping_add(0x9e3779b97f4a7c15);
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                (z ^ (z >> 31)) & mask
            }
            ClassicalTamper::Table(t) => t[v as usize] & mask,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ClassicalTamper::Identity)
            || matches!(self, ClassicalTamper::Xor(0))
    }
}

/// A split-state adversary against the two-part codeword `X | (Y, Z)`:
///
/// - part one: `x -> f(x)` with an `x`-class-controlled unitary on `W1`;
/// - part two: `y -> g(y)` with a `y`-controlled unitary on `(Z, W2)`;
/// - `shared`: the entangled state on `(W1, W2)`.
pub struct SplitAdversary {
    pub name: String,
    /// Tamper function on `X`.
    pub f: ClassicalTamper,
    /// Tamper function on `Y`.
    pub g: ClassicalTamper,
    /// Number of `x`-classes controlling the `W1` unitaries.
    pub x_classes: usize,
    /// Class map: which `W1` unitary fires for a given `x` (values in
    /// `0..x_classes`). Classes use the low bits of `x` so aggregation keys
    /// stay coarse.
    pub x_class_bits: usize,
    /// Unitaries on `W1`, one per class.
    pub w1_ops: Vec<CMatrix>,
    /// Unitaries on `(Z ⊗ W2)`, one per `y` value (or a single shared one).
    pub zw2_ops: Vec<CMatrix>,
    /// Shared entangled state on `(W1, W2)`, dimension `d1 * d2`.
    pub shared: CVector,
    pub d1: usize,
    pub d2: usize,
}

impl SplitAdversary {
    pub fn x_class_of(&self, x: u64) -> usize {
        if self.x_classes <= 1 {
            0
        } else {
            (x & ((1 << self.x_class_bits) - 1)) as usize % self.x_classes
        }
    }

    pub fn zw2_op_for(&self, y: u64) -> &CMatrix {
        if self.zw2_ops.len() == 1 {
            &self.zw2_ops[0]
        } else {
            &self.zw2_ops[y as usize]
        }
    }

    /// Validate unitarity of every component and normalization of the
    /// shared state.
    pub fn validate(&self, z_dim: usize) -> Result<()> {
        let check_unitary = |m: &CMatrix, what: &str| -> Result<()> {
            if m.nrows() != m.ncols() {
                return Err(Error::ShapeMismatch(format!("{what} not square")));
            }
            let err = (m.adjoint() * m - CMatrix::identity(m.nrows(), m.nrows()))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if err > VALIDITY_TOL {
                return Err(Error::ShapeMismatch(format!(
                    "{what} deviates from unitarity by {err:.2e}"
                )));
            }
            Ok(())
        };
        for (i, op) in self.w1_ops.iter().enumerate() {
            if op.nrows() != self.d1 {
                return Err(Error::ShapeMismatch(format!(
                    "W1 op {i} has dimension {} != {}",
                    op.nrows(),
                    self.d1
                )));
            }
            check_unitary(op, &format!("W1 op {i}"))?;
        }
        for (i, op) in self.zw2_ops.iter().enumerate() {
            if op.nrows() != z_dim * self.d2 {
                return Err(Error::ShapeMismatch(format!(
                    "(Z, W2) op {i} has dimension {} != {}",
                    op.nrows(),
                    z_dim * self.d2
                )));
            }
            check_unitary(op, &format!("(Z, W2) op {i}"))?;
        }
        if self.shared.len() != self.d1 * self.d2 {
            return Err(Error::ShapeMismatch("shared state dimension".into()));
        }
        let norm2: f64 = self.shared.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(Error::ShapeMismatch(format!(
                "shared state squared norm {norm2}"
            )));
        }
        Ok(())
    }
}

fn trivial_shared() -> CVector {
    CVector::from_vec(vec![crate::qmatrix::c(1.0, 0.0)])
}

/// Seeded Haar-distributed unitary (QR of a Ginibre matrix).
pub fn haar_unitary_pub(dim: usize, rng: &mut impl Rng) -> CMatrix {
    haar_unitary(dim, rng)
}

fn haar_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    // QR of a Ginibre matrix with phase fixing.
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            // Box-Muller pairs.
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            g[(i, j)] = crate::qmatrix::c(
                r * (2.0 * std::f64::consts::PI * u2).cos(),
                r * (2.0 * std::f64::consts::PI * u2).sin(),
            );
        }
    }
    // Gram-Schmidt.
    let mut q = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut col = g.column(j).into_owned();
        for k in 0..j {
            let qk = q.column(k).into_owned();
            let overlap = (qk.adjoint() * &col)[(0, 0)];
            col -= qk * overlap;
        }
        let norm = col.norm();
        q.set_column(j, &col.scale(1.0 / norm));
    }
    q
}

/// Named adversary specification, ready for configs and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversarySpec {
    Identity,
    /// Replace part one (the classical `X`) by a constant.
    ConstantReplaceX { value: u64 },
    /// Replace part two: constant `y`, and swap `Z` with a fresh ancilla
    /// qubit prepared in `|0>`.
    ConstantReplacePart2 { y_value: u64 },
    /// Pauli on a chosen register: bit flips on classical registers, a
    /// dense Pauli on `Z`.
    PauliX { mask: u64 },
    PauliY { mask: u64 },
    PauliZ { pauli: String },
    /// Swap `Z` with one half of an entangled pair stored in `W2`.
    SwapWithEntangledHalf,
    /// Classical function pair lifted to the codeword.
    Classical {
        f: ClassicalTamper,
        g: ClassicalTamper,
    },
    /// Seeded random adversary: random classical tampering on `X`, `Y`,
    /// Haar unitaries on `(Z, W2)` controlled on `y`, and on `W1` controlled
    /// on the low bit of `x`, with a random entangled `W` state.
    HaarRandom { seed: u64 },
}

impl AdversarySpec {
    pub fn name(&self) -> String {
        match self {
            AdversarySpec::Identity => "identity".into(),
            AdversarySpec::ConstantReplaceX { value } => format!("constant-replace-x({value})"),
            AdversarySpec::ConstantReplacePart2 { y_value } => {
                format!("constant-replace-part2({y_value})")
            }
            AdversarySpec::PauliX { mask } => format!("pauli-x({mask:#x})"),
            AdversarySpec::PauliY { mask } => format!("pauli-y({mask:#x})"),
            AdversarySpec::PauliZ { pauli } => format!("pauli-z({pauli})"),
            AdversarySpec::SwapWithEntangledHalf => "swap-with-entangled-half".into(),
            AdversarySpec::Classical { .. } => "classical(f,g)".into(),
            AdversarySpec::HaarRandom { seed } => format!("haar-random({seed})"),
        }
    }

    /// Materialize against a code with `n_x`-bit `X`, `n_y`-bit `Y`, and a
    /// `b`-qubit `Z`.
    pub fn build(&self, n_x: usize, n_y: usize, b: usize) -> Result<SplitAdversary> {
        let z_dim = 1usize << b;
        let id = |d: usize| CMatrix::identity(d, d);
        let adv = match self {
            AdversarySpec::Identity => SplitAdversary {
                name: self.name(),
                f: ClassicalTamper::Identity,
                g: ClassicalTamper::Identity,
                x_classes: 1,
                x_class_bits: 0,
                w1_ops: vec![id(1)],
                zw2_ops: vec![id(z_dim)],
                shared: trivial_shared(),
                d1: 1,
                d2: 1,
            },
            AdversarySpec::ConstantReplaceX { value } => SplitAdversary {
                name: self.name(),
                f: ClassicalTamper::Constant(*value),
                g: ClassicalTamper::Identity,
                x_classes: 1,
                x_class_bits: 0,
                w1_ops: vec![id(1)],
                zw2_ops: vec![id(z_dim)],
                shared: trivial_shared(),
                d1: 1,
                d2: 1,
            },
            AdversarySpec::ConstantReplacePart2 { y_value } => {
                // W2 = a fresh register of dimension z_dim in |0>; V swaps it
                // with Z.
                let d2 = z_dim;
                let mut swap = CMatrix::zeros(z_dim * d2, z_dim * d2);
                for a in 0..z_dim {
                    for w in 0..d2 {
                        swap[(w * d2 + a, a * d2 + w)] = crate::qmatrix::c(1.0, 0.0);
                    }
                }
                let mut shared = CVector::zeros(d2);
                shared[0] = crate::qmatrix::c(1.0, 0.0);
                SplitAdversary {
                    name: self.name(),
                    f: ClassicalTamper::Identity,
                    g: ClassicalTamper::Constant(*y_value),
                    x_classes: 1,
                    x_class_bits: 0,
                    w1_ops: vec![id(1)],
                    zw2_ops: vec![swap],
                    shared,
                    d1: 1,
                    d2,
                }
            }
            AdversarySpec::PauliX { mask } => SplitAdversary {
                name: self.name(),
                f: ClassicalTamper::Xor(*mask),
                g: ClassicalTamper::Identity,
                x_classes: 1,
                x_class_bits: 0,
                w1_ops: vec![id(1)],
                zw2_ops: vec![id(z_dim)],
                shared: trivial_shared(),
                d1: 1,
                d2: 1,
            },
            AdversarySpec::PauliY { mask } => SplitAdversary {
                name: self.name(),
                f: ClassicalTamper::Identity,
                g: ClassicalTamper::Xor(*mask),
                x_classes: 1,
                x_class_bits: 0,
                w1_ops: vec![id(1)],
                zw2_ops: vec![id(z_dim)],
                shared: trivial_shared(),
                d1: 1,
                d2: 1,
            },
            AdversarySpec::PauliZ { pauli } => {
                let p = crate::pauli::PauliOp::parse(pauli)?;
                if p.n() != b {
                    return Err(Error::ShapeMismatch(format!(
                        "Pauli {pauli} has {} qubits, Z has {b}",
                        p.n()
                    )));
                }
                SplitAdversary {
                    name: self.name(),
                    f: ClassicalTamper::Identity,
                    g: ClassicalTamper::Identity,
                    x_classes: 1,
                    x_class_bits: 0,
                    w1_ops: vec![id(1)],
                    zw2_ops: vec![p.dense()?],
                    shared: trivial_shared(),
                    d1: 1,
                    d2: 1,
                }
            }
            AdversarySpec::SwapWithEntangledHalf => {
                // W2 = (A, B) with |psi> maximally entangled across (A, B);
                // V swaps Z with A, planting half of an entangled pair.
                let d2 = z_dim * z_dim;
                let dim = z_dim * d2;
                let mut swap = CMatrix::zeros(dim, dim);
                for z in 0..z_dim {
                    for a in 0..z_dim {
                        for bb in 0..z_dim {
                            let src = (z * z_dim + a) * z_dim + bb;
                            let dst = (a * z_dim + z) * z_dim + bb;
                            swap[(dst, src)] = crate::qmatrix::c(1.0, 0.0);
                        }
                    }
                }
                let mut shared = CVector::zeros(d2);
                for k in 0..z_dim {
                    shared[k * z_dim + k] = crate::qmatrix::c(1.0 / (z_dim as f64).sqrt(), 0.0);
                }
                SplitAdversary {
                    name: self.name(),
                    f: ClassicalTamper::Identity,
                    g: ClassicalTamper::Identity,
                    x_classes: 1,
                    x_class_bits: 0,
                    w1_ops: vec![id(1)],
                    zw2_ops: vec![swap],
                    shared,
                    d1: 1,
                    d2,
                }
            }
            AdversarySpec::Classical { f, g } => SplitAdversary {
                name: self.name(),
                f: f.clone(),
                g: g.clone(),
                x_classes: 1,
                x_class_bits: 0,
                w1_ops: vec![id(1)],
                zw2_ops: vec![id(z_dim)],
                shared: trivial_shared(),
                d1: 1,
                d2: 1,
            },
            AdversarySpec::HaarRandom { seed } => {
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                let d1 = 2usize;
                let d2 = 2usize;
                let w1_ops = vec![haar_unitary(d1, &mut rng), haar_unitary(d1, &mut rng)];
                let zw2_ops = (0..(1usize << n_y))
                    .map(|_| haar_unitary(z_dim * d2, &mut rng))
                    .collect();
                let mut shared = CVector::zeros(d1 * d2);
                let mut norm2 = 0.0;
                for k in 0..d1 * d2 {
                    let re = rng.gen::<f64>() - 0.5;
                    let im = rng.gen::<f64>() - 0.5;
                    shared[k] = crate::qmatrix::c(re, im);
                    norm2 += re * re + im * im;
                }
                let shared = shared.scale(1.0 / norm2.sqrt());
                SplitAdversary {
                    name: self.name(),
                    f: ClassicalTamper::SeededRandom { seed: *seed },
                    g: ClassicalTamper::SeededRandom {
                        seed: seed.wrapping_add(1),
                    },
                    x_classes: 2,
                    x_class_bits: 1,
                    w1_ops,
                    zw2_ops,
                    shared,
                    d1,
                    d2,
                }
            }
        };
        let _ = n_x;
        adv.validate(z_dim)?;
        Ok(adv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spec_builds_trivially() {
        let adv = AdversarySpec::Identity.build(14, 2, 1).unwrap();
        assert!(adv.f.is_identity() && adv.g.is_identity());
        assert_eq!(adv.d1 * adv.d2, 1);
    }

    #[test]
    fn classical_spec_reproduces_truth_table() {
        // Permutation pair (xor masks): the classical projection of the
        // lifted adversary is exactly (f, g).
        let spec = AdversarySpec::Classical {
            f: ClassicalTamper::Xor(0b1011),
            g: ClassicalTamper::Xor(0b01),
        };
        let adv = spec.build(4, 2, 1).unwrap();
        for x in 0..16u64 {
            assert_eq!(adv.f.apply(x, 4), x ^ 0b1011);
        }
        for y in 0..4u64 {
            assert_eq!(adv.g.apply(y, 2), y ^ 0b01);
        }
    }

    #[test]
    fn haar_spec_is_deterministic_per_seed() {
        let a = AdversarySpec::HaarRandom { seed: 5 }.build(14, 2, 1).unwrap();
        let b = AdversarySpec::HaarRandom { seed: 5 }.build(14, 2, 1).unwrap();
        assert_eq!(a.zw2_ops.len(), b.zw2_ops.len());
        for (x, y) in a.zw2_ops.iter().zip(&b.zw2_ops) {
            assert!(crate::qmatrix::max_entry_diff(x, y) < 1e-15);
        }
        let c_ = AdversarySpec::HaarRandom { seed: 6 }.build(14, 2, 1).unwrap();
        assert!(crate::qmatrix::max_entry_diff(&a.zw2_ops[0], &c_.zw2_ops[0]) > 1e-3);
    }

    #[test]
    fn swap_strategy_is_unitary() {
        let adv = AdversarySpec::SwapWithEntangledHalf.build(14, 2, 1).unwrap();
        adv.validate(2).unwrap();
        assert_eq!(adv.d2, 4);
    }

    #[test]
    fn unknown_pauli_shape_rejected() {
        assert!(AdversarySpec::PauliZ {
            pauli: "XX".into()
        }
        .build(14, 2, 1)
        .is_err());
    }
}
