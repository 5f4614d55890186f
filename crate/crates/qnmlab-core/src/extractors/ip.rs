//! The finite-field inner-product extractor and uniform preimage sampling.

use super::gf::{FieldVector, Gf};
use crate::{Error, Result};
use rand::Rng;

/// `IP(x, y) = sum_i x_i y_i` over GF(q).
pub fn ip_extract(x: &FieldVector, y: &FieldVector) -> Result<u16> {
    if x.field() != y.field() || x.len() != y.len() {
        return Err(Error::FieldMismatch(
            "inner product needs matching field and length".into(),
        ));
    }
    let f = x.field();
    Ok(x.elems()
        .iter()
        .zip(y.elems())
        .fold(0u16, |acc, (&a, &b)| f.add(acc, f.mul(a, b))))
}

/// Number of pairs with `IP(x, y) = s`: `(q^N - 1) q^{N-1}` for `s != 0`
/// plus the extra `q^N` all-`y` solutions at `x = 0` when `s = 0`.
pub fn ip_preimage_count(q: u64, n: u32, s: u16) -> u64 {
    let qn = q.pow(n);
    let base = (qn - 1) * q.pow(n - 1);
    if s == 0 {
        base + qn
    } else {
        base
    }
}

/// Sample `(x, y)` uniformly from `IP^{-1}(s)`.
///
/// Rejection sampling from uniform pairs: exactly uniform on the preimage
/// (in particular `x = 0` carries weight `q^N / |IP^{-1}(0)|` when `s = 0`,
/// and is resampled when `s != 0`). Expected `q` draws per sample.
pub fn ip_preimage_sample(
    s: u16,
    field: Gf,
    n: usize,
    rng: &mut impl Rng,
) -> Result<(FieldVector, FieldVector)> {
    if n == 0 {
        return Err(Error::InvalidParams("preimage sampling needs N >= 1".into()));
    }
    if !field.contains(s) {
        return Err(Error::FieldMismatch(format!("target {s} outside field")));
    }
    let q = field.size();
    loop {
        let x: Vec<u16> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let y: Vec<u16> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let xv = FieldVector::new(field, x)?;
        let yv = FieldVector::new(field, y)?;
        if ip_extract(&xv, &yv)? == s {
            return Ok((xv, yv));
        }
    }
}

/// Enumerate the full preimage `IP^{-1}(s)` (desk-scale only).
pub fn ip_preimage_enumerate(s: u16, field: Gf, n: usize) -> Vec<(FieldVector, FieldVector)> {
    let q = field.size() as u64;
    let total = q.pow(n as u32);
    let mut out = Vec::new();
    for xi in 0..total {
        for yi in 0..total {
            let decode = |mut v: u64| -> Vec<u16> {
                (0..n)
                    .map(|_| {
                        let e = (v % q) as u16;
                        v /= q;
                        e
                    })
                    .collect()
            };
            let xv = FieldVector::new(field, decode(xi)).unwrap();
            let yv = FieldVector::new(field, decode(yi)).unwrap();
            if ip_extract(&xv, &yv).unwrap() == s {
                out.push((xv, yv));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashMap;

    #[test]
    fn ip_small_cases() {
        let f = Gf::new(1).unwrap();
        let x = FieldVector::new(f, vec![1, 1]).unwrap();
        let y = FieldVector::new(f, vec![1, 0]).unwrap();
        assert_eq!(ip_extract(&x, &y).unwrap(), 1);

        let zero = FieldVector::zero(f, 2);
        for yi in 0..4u16 {
            let y = FieldVector::new(f, vec![yi & 1, yi >> 1]).unwrap();
            assert_eq!(ip_extract(&zero, &y).unwrap(), 0);
        }
    }

    #[test]
    fn ip_matches_schoolbook_gf4() {
        let f = Gf::new(2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(101);
        for _ in 0..50 {
            let x: Vec<u16> = (0..3).map(|_| rng.gen_range(0..4)).collect();
            let y: Vec<u16> = (0..3).map(|_| rng.gen_range(0..4)).collect();
            // Schoolbook oracle: term-by-term table multiply, xor-accumulate.
            let mut acc = 0u16;
            for (&a, &b) in x.iter().zip(&y) {
                acc ^= f.mul(a, b);
            }
            let xv = FieldVector::new(f, x).unwrap();
            let yv = FieldVector::new(f, y).unwrap();
            assert_eq!(ip_extract(&xv, &yv).unwrap(), acc);
        }
    }

    #[test]
    fn ip_bilinear_exhaustive_gf2() {
        let f = Gf::new(1).unwrap();
        let n = 3usize;
        let vecs: Vec<FieldVector> = (0..8u16)
            .map(|v| FieldVector::new(f, (0..n).map(|i| v >> i & 1).collect()).unwrap())
            .collect();
        for x in &vecs {
            for x2 in &vecs {
                for y in &vecs {
                    let sum = FieldVector::new(
                        f,
                        x.elems()
                            .iter()
                            .zip(x2.elems())
                            .map(|(a, b)| a ^ b)
                            .collect(),
                    )
                    .unwrap();
                    let lhs = ip_extract(&sum, y).unwrap();
                    let rhs = ip_extract(x, y).unwrap() ^ ip_extract(x2, y).unwrap();
                    assert_eq!(lhs, rhs);
                    // Symmetry.
                    assert_eq!(ip_extract(x, y).unwrap(), ip_extract(y, x).unwrap());
                }
            }
        }
    }

    #[test]
    fn preimage_counts_q2_n2() {
        assert_eq!(ip_preimage_count(2, 2, 1), 6);
        assert_eq!(ip_preimage_count(2, 2, 0), 10);
        assert_eq!(ip_preimage_enumerate(1, Gf::new(1).unwrap(), 2).len(), 6);
        assert_eq!(ip_preimage_enumerate(0, Gf::new(1).unwrap(), 2).len(), 10);
    }

    #[test]
    fn ip_extraction_with_one_bit_leakage_matches_enumeration() {
        // Independent uniform X, Y over GF(2)^N and a one-bit classical
        // leak g(Y): the exact distance || rho_{Z X W1} - U_Z (x) rho_{X W1} ||_1
        // (Z = IP(X, Y), W1 = g(Y)) computed through the operator layer must
        // equal the purely classical enumeration.
        use crate::qmatrix::{tensor, trace_distance, DensityOperator, RegisterLayout};
        let f = Gf::new(1).unwrap();
        for n in [3usize, 4] {
            let total = 1u64 << n;
            let g_leak = |y: u64| -> usize { (y.count_ones() & 1) as usize };
            // Classical oracle: joint p(z, x, w) by counting.
            let mut joint = vec![0.0f64; 2 * (total as usize) * 2];
            for x in 0..total {
                for y in 0..total {
                    let xv =
                        FieldVector::new(f, (0..n).map(|i| ((x >> i) & 1) as u16).collect())
                            .unwrap();
                    let yv =
                        FieldVector::new(f, (0..n).map(|i| ((y >> i) & 1) as u16).collect())
                            .unwrap();
                    let z = ip_extract(&xv, &yv).unwrap() as usize;
                    let idx = (z * total as usize + x as usize) * 2 + g_leak(y);
                    joint[idx] += 1.0 / (total * total) as f64;
                }
            }
            // Oracle distance.
            let mut marg_xw = vec![0.0f64; (total as usize) * 2];
            for z in 0..2 {
                for xw in 0..(total as usize) * 2 {
                    marg_xw[xw] += joint[z * (total as usize) * 2 + xw];
                }
            }
            let expect: f64 = (0..2)
                .flat_map(|z| (0..(total as usize) * 2).map(move |xw| (z, xw)))
                .map(|(z, xw)| (joint[z * (total as usize) * 2 + xw] - 0.5 * marg_xw[xw]).abs())
                .sum();

            // Operator-layer route.
            let layout = RegisterLayout::new(vec![
                ("Z", 2usize),
                ("X", total as usize),
                ("W1", 2usize),
            ])
            .unwrap();
            let mut m = crate::qmatrix::CMatrix::zeros(layout.total_dim(), layout.total_dim());
            for (idx, &w) in joint.iter().enumerate() {
                m[(idx, idx)] = crate::qmatrix::c(w, 0.0);
            }
            let rho = DensityOperator::new(m, layout.clone()).unwrap();
            let rho_xw = crate::qmatrix::partial_trace(&rho, &["Z"]).unwrap();
            let uniform_z =
                DensityOperator::maximally_mixed(RegisterLayout::single("Z", 2));
            let product = tensor(&uniform_z, &rho_xw).unwrap();
            let got = trace_distance(&rho, &product).unwrap();
            assert!(
                (got - expect).abs() < 1e-12,
                "n={n}: operator route {got} vs oracle {expect}"
            );
        }
    }

    #[test]
    fn preimage_sampling_is_uniform_chi_square() {
        let f = Gf::new(1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(103);
        for s in [0u16, 1] {
            let support = ip_preimage_enumerate(s, f, 2);
            let mut counts: HashMap<(String, String), u64> = HashMap::new();
            let draws = 100_000u64;
            for _ in 0..draws {
                let (x, y) = ip_preimage_sample(s, f, 2, &mut rng).unwrap();
                assert_eq!(ip_extract(&x, &y).unwrap(), s);
                *counts.entry((x.to_hex(), y.to_hex())).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), support.len());
            let expect = draws as f64 / support.len() as f64;
            let chi2: f64 = counts
                .values()
                .map(|&c| {
                    let d = c as f64 - expect;
                    d * d / expect
                })
                .sum();
            // 9 degrees of freedom at s=0, 5 at s=1; 40 is far beyond any
            // sane quantile for either.
            assert!(chi2 < 40.0, "chi2 = {chi2} at s={s}");
        }
    }
}
