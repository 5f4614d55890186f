//! Classical Shamir sharing over a prime field: `f(0)` is the secret,
//! party `i` holds `f(i)`, any `t` shares interpolate.

use super::prime_field::PrimeField;
use crate::{Error, Result};
use rand::Rng;

/// Share `s` into `p` field elements with threshold `t`; requires `q > p`.
pub fn cshamir_share(
    s: u16,
    t: usize,
    p: usize,
    q: u16,
    rng: &mut impl Rng,
) -> Result<Vec<u16>> {
    let f = PrimeField::new(q)?;
    if t == 0 || t > p {
        return Err(Error::InvalidParams(format!("need 1 <= t <= p, got t={t}, p={p}")));
    }
    if q as usize <= p {
        return Err(Error::InvalidParams(format!(
            "need q > p for distinct nonzero points, got q={q}, p={p}"
        )));
    }
    if s >= q {
        return Err(Error::FieldMismatch(format!("secret {s} outside F_{q}")));
    }
    let mut coeffs = vec![s];
    for _ in 1..t {
        coeffs.push(rng.gen_range(0..q));
    }
    Ok((1..=p).map(|i| f.eval_poly(&coeffs, i as u16)).collect())
}

/// Reconstruct from `(party index, value)` pairs; needs at least `t` of
/// them.
pub fn cshamir_rec(shares: &[(usize, u16)], t: usize, q: u16) -> Result<u16> {
    let f = PrimeField::new(q)?;
    if shares.len() < t {
        return Err(Error::Unauthorized {
            need: t,
            got: shares.len(),
        });
    }
    let pts = &shares[..t];
    // Lagrange interpolation at 0.
    let mut s = 0u16;
    for (j, &(pj, vj)) in pts.iter().enumerate() {
        let xj = pj as u16;
        let mut weight = 1u16;
        for (i, &(pi, _)) in pts.iter().enumerate() {
            if i != j {
                let xi = pi as u16;
                weight = f.mul(weight, f.mul(xi % q, f.inv(f.sub(xi % q, xj % q))?));
            }
        }
        s = f.add(s, f.mul(vj, weight));
    }
    Ok(s)
}

/// Exact joint distribution of the shares of `s` (over the uniform
/// coefficient choice); desk-scale enumeration oracle.
pub fn cshamir_distribution(s: u16, t: usize, p: usize, q: u16) -> Result<Vec<(Vec<u16>, f64)>> {
    let f = PrimeField::new(q)?;
    let count = (q as usize).pow((t - 1) as u32);
    let mut out = Vec::with_capacity(count);
    for g in 0..count {
        let mut coeffs = vec![s];
        let mut rest = g;
        for _ in 1..t {
            coeffs.push((rest % q as usize) as u16);
            rest /= q as usize;
        }
        let shares: Vec<u16> = (1..=p).map(|i| f.eval_poly(&coeffs, i as u16)).collect();
        out.push((shares, 1.0 / count as f64));
    }
    Ok(out)
}
