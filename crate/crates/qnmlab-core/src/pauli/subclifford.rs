//! The special Clifford subgroup `SC(H)` and its keyed sampler.
//!
//! `SC` on `b` qubits is the semidirect product of the Pauli group (4^b
//! phaseless translations) with the linear part `SL(2, GF(2^b))`, embedded
//! into the symplectic group over GF(2) by viewing Pauli labels as pairs
//! `(xi, zeta)` of field elements: the X-part is written in the polynomial
//! basis, the Z-part in its trace-dual basis, so the GF(2) symplectic form
//! becomes `tr(xi * zeta' + xi' * zeta)`. Determinant-one field matrices
//! preserve that form, giving `|SC| = 4^b * |SL(2, 2^b)| = 2^{5b} - 2^{3b}`;
//! `SL(2, q)` acts transitively on nonzero label pairs with uniform fibers,
//! which is exactly the uniform-conjugation property the twirl identities
//! need.
//!
//! Sampler key layout (frozen; `5b` bits, LSB-first integers):
//! - bits `0 .. 2b`: Pauli translation label (x bits low, z bits high);
//! - bits `2b .. 5b`: integer `k`; the linear part is element `k mod N_lin`
//!   of the fixed `SL(2, 2^b)` enumeration (identity first, then lex scan
//!   order), `N_lin = 2^{3b} - 2^b`.
//!
//! The `2^b` wrapped residues of the modular reduction are the sampler's
//! only bias; the induced distribution is within statistical distance
//! `2^{-2b}` of uniform on `SC`, and the all-zero key maps to the identity.

use super::clifford::CliffordOp;
use super::pauli_op::PauliOp;
use crate::extractors::gf::Gf;
use crate::{Error, Result};

/// Largest qubit count for exhaustive subgroup enumeration.
pub const MAX_ENUM_QUBITS: usize = 2;

/// `|SC| = 2^{5b} - 2^{3b}`.
pub fn sc_size(b: usize) -> usize {
    (1 << (5 * b)) - (1 << (3 * b))
}

/// Size of the linear part, `|SL(2, 2^b)| = 2^{3b} - 2^b`.
pub fn sc_linear_size(b: usize) -> usize {
    (1 << (3 * b)) - (1 << b)
}

/// Sampler key: a bit string of length exactly `5b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubCliffordKey {
    bits: Vec<bool>,
}

impl SubCliffordKey {
    pub fn new(bits: Vec<bool>, b: usize) -> Result<Self> {
        if bits.len() != 5 * b {
            return Err(Error::KeyLength {
                expected: 5 * b,
                got: bits.len(),
            });
        }
        Ok(Self { bits })
    }

    pub fn from_int(value: u64, b: usize) -> Self {
        Self {
            bits: (0..5 * b).map(|i| value >> i & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn int_range(&self, lo: usize, hi: usize) -> u64 {
        self.bits[lo..hi]
            .iter()
            .rev()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }
}

/// The fixed enumeration of `SL(2, GF(2^b))`: identity first, then the
/// remaining determinant-one matrices `[[a, b], [c, d]]` in lexicographic
/// scan order of `(a, b, c, d)`.
pub fn sl2_elements(b: usize) -> Vec<[u16; 4]> {
    let f = Gf::new(b as u32).expect("b within field cap");
    let q = f.size();
    let mut out = vec![[1, 0, 0, 1]];
    for a in 0..q {
        for bb in 0..q {
            for cc in 0..q {
                for d in 0..q {
                    if [a, bb, cc, d] == [1, 0, 0, 1] {
                        continue;
                    }
                    if f.add(f.mul(a, d), f.mul(bb, cc)) == 1 {
                        out.push([a, bb, cc, d]);
                    }
                }
            }
        }
    }
    debug_assert_eq!(out.len(), sc_linear_size(b));
    out
}

/// Clifford realizing the symplectic action of an `SL(2, 2^b)` matrix.
///
/// Generator images: `X_j` (label `(e_j, 0)`) maps to the Hermitian Pauli
/// with label `(a e_j, c e_j)`; `Z_j` (label `(0, f_j)` in the dual basis)
/// maps to label `(b f_j, d f_j)`.
pub fn linear_clifford(b: usize, m: &[u16; 4]) -> CliffordOp {
    let f = Gf::new(b as u32).expect("b within field cap");
    let dual = f.dual_basis();
    // X-part coordinates are polynomial-basis bits; Z-part coordinates are
    // dual-basis coefficients, extracted with tr(w * e_i).
    let z_coords = |w: u16| -> u32 {
        let mut bits = 0u32;
        for i in 0..b {
            if f.trace(f.mul(w, 1 << i)) == 1 {
                bits |= 1 << i;
            }
        }
        bits
    };
    let [a, bb, cc, d] = *m;
    let x_images = (0..b)
        .map(|j| {
            let e_j = 1u16 << j;
            PauliOp::hermitian(b, u32::from(f.mul(a, e_j)), z_coords(f.mul(cc, e_j)))
        })
        .collect();
    let z_images = (0..b)
        .map(|j| {
            let f_j = dual[j];
            PauliOp::hermitian(b, u32::from(f.mul(bb, f_j)), z_coords(f.mul(d, f_j)))
        })
        .collect();
    CliffordOp::from_images(x_images, z_images).expect("SL(2,q) embedding is symplectic")
}

/// Subgroup element for (pauli index, linear index).
pub fn sc_element(b: usize, pauli_idx: usize, lin_idx: usize, sl2: &[[u16; 4]]) -> CliffordOp {
    let p = PauliOp::from_label(b, pauli_idx as u64);
    let linear = linear_clifford(b, &sl2[lin_idx]);
    CliffordOp::from_pauli(&p).compose(&linear)
}

/// Exhaustive enumeration of `SC(H)` for `b <= 2` qubits, in the frozen
/// order `index = lin_idx * 4^b + pauli_idx`.
pub fn sc_enumerate(b: usize) -> Result<Vec<CliffordOp>> {
    if b == 0 || b > MAX_ENUM_QUBITS {
        return Err(Error::DimensionCap(format!(
            "subgroup enumeration supported for 1 <= b <= {MAX_ENUM_QUBITS}, got {b}"
        )));
    }
    let sl2 = sl2_elements(b);
    let mut out = Vec::with_capacity(sc_size(b));
    for lin_idx in 0..sl2.len() {
        for pauli_idx in 0..(1usize << (2 * b)) {
            out.push(sc_element(b, pauli_idx, lin_idx, &sl2));
        }
    }
    Ok(out)
}

/// Deterministic sampler: key -> subgroup element.
pub fn sc_samp(key: &SubCliffordKey) -> Result<CliffordOp> {
    let b = key.bits.len() / 5;
    if key.bits.len() != 5 * b || b == 0 {
        return Err(Error::KeyLength {
            expected: 5 * (key.bits.len() / 5).max(1),
            got: key.bits.len(),
        });
    }
    let pauli_idx = key.int_range(0, 2 * b) as usize;
    let k = key.int_range(2 * b, 5 * b) as usize;
    let lin_idx = k % sc_linear_size(b);
    let sl2 = sl2_elements(b);
    Ok(sc_element(b, pauli_idx, lin_idx, &sl2))
}

/// Index into the `sc_enumerate` order for a sampler key (avoids rebuilding
/// tableaux when the enumeration is already in hand).
pub fn sc_samp_index(key_value: u64, b: usize) -> usize {
    let pauli_idx = (key_value & ((1 << (2 * b)) - 1)) as usize;
    let k = (key_value >> (2 * b)) as usize & ((1 << (3 * b)) - 1);
    (k % sc_linear_size(b)) * (1 << (2 * b)) + pauli_idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::clifford::equal_up_to_phase;

    #[test]
    fn subgroup_size_formula() {
        assert_eq!(sc_enumerate(1).unwrap().len(), 24);
        assert_eq!(sc_size(1), 24);
        assert_eq!(sl2_elements(1).len(), 6);
        assert_eq!(sl2_elements(2).len(), 60);
        assert_eq!(sc_size(2), 960);
    }

    #[test]
    fn contains_all_paulis() {
        let sc = sc_enumerate(1).unwrap();
        for p in PauliOp::enumerate_classes(1) {
            let as_clifford = CliffordOp::from_pauli(&p);
            assert!(
                sc.iter().any(|c_| *c_ == as_clifford),
                "Pauli {p:?} missing from SC"
            );
        }
    }

    #[test]
    fn conjugation_orbits_are_uniform() {
        // For every non-identity P, Q: |{C : C† P C = Q up to phase}| =
        // |SC| / (4^b - 1).
        let sc = sc_enumerate(1).unwrap();
        for p in PauliOp::enumerate_classes(1).filter(|p| !p.is_identity_class()) {
            let mut counts = std::collections::HashMap::new();
            for c_ in &sc {
                let image = c_.inverse().conjugate(&p);
                *counts.entry(image.label()).or_insert(0usize) += 1;
            }
            assert_eq!(counts.len(), 3, "orbit of {p:?} misses targets");
            for (label, count) in counts {
                assert_ne!(label, 0, "non-identity Pauli collapsed to identity");
                assert_eq!(count, 24 / 3, "orbit of {p:?} not uniform");
            }
        }
    }

    #[test]
    fn no_identity_collapse_exhaustive_b1() {
        let sc = sc_enumerate(1).unwrap();
        for c_ in &sc {
            for p in PauliOp::enumerate_classes(1).filter(|p| !p.is_identity_class()) {
                assert!(!c_.conjugate(&p).is_identity_class());
            }
        }
    }

    #[test]
    fn group_closure_exhaustive_b1() {
        let sc = sc_enumerate(1).unwrap();
        let denses: Vec<_> = sc.iter().map(|c_| c_.dense().unwrap().clone()).collect();
        for a in &denses {
            for b in &denses {
                let prod = a * b;
                assert!(
                    denses.iter().any(|d| equal_up_to_phase(&prod, d, 1e-9)),
                    "product left the subgroup"
                );
            }
        }
    }

    #[test]
    fn sampler_all_zero_key_is_identity() {
        let key = SubCliffordKey::from_int(0, 1);
        assert_eq!(sc_samp(&key).unwrap(), CliffordOp::identity(1));
        let key = SubCliffordKey::from_int(0, 2);
        assert_eq!(sc_samp(&key).unwrap(), CliffordOp::identity(2));
    }

    #[test]
    fn sampler_key_sweep_covers_subgroup_and_is_near_uniform() {
        // Exhaustive sweep over all 2^5 keys at b=1: every subgroup element
        // hit, statistical distance to uniform <= 2^{-2}.
        let sc = sc_enumerate(1).unwrap();
        let mut counts = vec![0usize; sc.len()];
        for key_value in 0..(1u64 << 5) {
            let el = sc_samp(&SubCliffordKey::from_int(key_value, 1)).unwrap();
            let idx = sc.iter().position(|c_| *c_ == el).expect("image in SC");
            assert_eq!(idx, sc_samp_index(key_value, 1));
            counts[idx] += 1;
        }
        assert!(counts.iter().all(|&c_| c_ > 0), "key sweep missed elements");
        let total = 32.0;
        let sd: f64 = counts
            .iter()
            .map(|&c_| (c_ as f64 / total - 1.0 / 24.0).abs())
            .sum::<f64>()
            / 2.0;
        assert!(sd <= 0.25 + 1e-12, "statistical distance {sd} > 2^-2");
    }

    #[test]
    fn sampler_rejects_wrong_key_length() {
        assert!(SubCliffordKey::new(vec![false; 4], 1).is_err());
    }

    #[test]
    fn linear_part_realizes_its_symplectic_action_b2() {
        // Spot-check at b=2 that conjugation labels follow the field matrix.
        let f = Gf::new(2).unwrap();
        let sl2 = sl2_elements(2);
        for m in sl2.iter().take(12) {
            let c_ = linear_clifford(2, m);
            let dual = f.dual_basis();
            for j in 0..2 {
                let image = c_.conjugate(&PauliOp::hermitian(2, 1 << j, 0));
                // xi' = a e_j in polynomial bits.
                assert_eq!(image.x_bits(), u32::from(f.mul(m[0], 1 << j)));
                // zeta' = c e_j, checked through the dual pairing.
                let mut zeta = 0u16;
                for (i, d) in dual.iter().enumerate() {
                    if image.z_bits() >> i & 1 == 1 {
                        zeta ^= d;
                    }
                }
                assert_eq!(zeta, f.mul(m[2], 1 << j));
            }
        }
    }
}
