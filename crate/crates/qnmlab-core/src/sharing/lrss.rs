//! Inner-product augmented leakage-resilient secret sharing: the 2-of-2
//! scheme samples `(X, Y)` uniformly from `IP^{-1}(s)`, and the 2-of-p
//! scheme runs an independent 2-of-2 instance for every pair of parties.

use crate::extractors::gf::{FieldVector, Gf};
use crate::extractors::ip::{ip_extract, ip_preimage_enumerate, ip_preimage_sample};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LrssParams {
    /// Message bits; the share alphabet is GF(2^b).
    pub b: usize,
    /// Vector length per share.
    pub n_vec: usize,
    /// Leakage budget in bits per non-colluding share.
    pub ell_leak: usize,
    /// Target leakage-resilience error.
    pub epsilon: f64,
    /// Parties (2 for the bare scheme).
    pub p: usize,
}

impl LrssParams {
    pub fn field(&self) -> Result<Gf> {
        Gf::new(self.b as u32)
    }

    /// Basic well-formedness (desk-scale; no bound enforcement).
    pub fn validate(&self) -> Result<()> {
        self.field()?;
        if self.n_vec == 0 {
            return Err(Error::InvalidParams("need N >= 1".into()));
        }
        if self.p < 2 {
            return Err(Error::InvalidParams("need at least 2 parties".into()));
        }
        Ok(())
    }

    /// Strict-mode share-size bound for the 2-of-2 scheme:
    /// `N b >= 9 b + 2 ell + 8 log2(1/eps) + 40`.
    pub fn validate_strict_2of2(&self) -> Result<()> {
        self.validate()?;
        let need = 9.0 * self.b as f64
            + 2.0 * self.ell_leak as f64
            + 8.0 * (1.0 / self.epsilon).log2()
            + 40.0;
        let have = (self.n_vec * self.b) as f64;
        if have < need {
            return Err(Error::InvalidParams(format!(
                "share size N*b = {have} below the 2-of-2 bound {need:.1}"
            )));
        }
        Ok(())
    }

    /// Strict-mode bound for the 2-of-p scheme: the per-pair share size must
    /// additionally absorb `16 log2(p)`.
    pub fn validate_strict_2ofp(&self) -> Result<()> {
        self.validate()?;
        let need = 9.0 * self.b as f64
            + 2.0 * self.ell_leak as f64
            + 8.0 * (1.0 / self.epsilon).log2()
            + 16.0 * (self.p as f64).log2()
            + 40.0;
        let have = (self.n_vec * self.b) as f64;
        if have < need {
            return Err(Error::InvalidParams(format!(
                "share size N*b = {have} below the 2-of-p bound {need:.1}"
            )));
        }
        Ok(())
    }
}

/// 2-of-2 sharing: uniform preimage pair.
pub fn lrshare2(
    s: u16,
    prm: &LrssParams,
    rng: &mut impl Rng,
) -> Result<(FieldVector, FieldVector)> {
    prm.validate()?;
    ip_preimage_sample(s, prm.field()?, prm.n_vec, rng)
}

/// 2-of-2 reconstruction.
pub fn lrrec2(x: &FieldVector, y: &FieldVector) -> Result<u16> {
    ip_extract(x, y)
}

/// One party's share of the 2-of-p scheme: the sub-share vector for every
/// other party, indexed by that party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share2p {
    pub party: usize,
    pub slots: BTreeMap<usize, FieldVector>,
}

impl Share2p {
    /// Share length in field symbols: `(p - 1) * N`.
    pub fn symbol_len(&self) -> usize {
        self.slots.values().map(|v| v.len()).sum()
    }

    pub fn to_hex_rows(&self) -> Vec<String> {
        self.slots
            .iter()
            .map(|(j, v)| format!("{j}:{}", v.to_hex()))
            .collect()
    }
}

/// 2-of-p sharing: an independent 2-of-2 instance per pair `(i, j)`, with
/// `X^j_i` going to party `i` and `X^i_j` to party `j`.
pub fn lrshare_2p(s: u16, prm: &LrssParams, rng: &mut impl Rng) -> Result<Vec<Share2p>> {
    if prm.p < 3 {
        return Err(Error::InvalidParams(
            "the pairwise construction needs p >= 3".into(),
        ));
    }
    prm.validate()?;
    let mut shares: Vec<Share2p> = (1..=prm.p)
        .map(|party| Share2p {
            party,
            slots: BTreeMap::new(),
        })
        .collect();
    for i in 1..=prm.p {
        for j in (i + 1)..=prm.p {
            let (x_ji, x_ij) = lrshare2(s, prm, rng)?;
            shares[i - 1].slots.insert(j, x_ji);
            shares[j - 1].slots.insert(i, x_ij);
        }
    }
    Ok(shares)
}

/// 2-of-p reconstruction from any two shares: uses the lexicographically
/// lowest pair `(i, j)`.
pub fn lrrec_2p(shares: &[&Share2p]) -> Result<u16> {
    if shares.len() < 2 {
        return Err(Error::Unauthorized {
            need: 2,
            got: shares.len(),
        });
    }
    let mut sorted: Vec<&Share2p> = shares.to_vec();
    sorted.sort_by_key(|s| s.party);
    let (a, b) = (sorted[0], sorted[1]);
    let x_ji = a
        .slots
        .get(&b.party)
        .ok_or_else(|| Error::InvalidParams("missing sub-share slot".into()))?;
    let x_ij = b
        .slots
        .get(&a.party)
        .ok_or_else(|| Error::InvalidParams("missing sub-share slot".into()))?;
    ip_extract(x_ji, x_ij)
}

/// Exact distribution of a 2-of-2 sharing of `s` (enumeration oracle).
pub fn lrshare2_distribution(
    s: u16,
    prm: &LrssParams,
) -> Result<Vec<((FieldVector, FieldVector), f64)>> {
    let support = ip_preimage_enumerate(s, prm.field()?, prm.n_vec);
    let w = 1.0 / support.len() as f64;
    Ok(support.into_iter().map(|pair| (pair, w)).collect())
}
