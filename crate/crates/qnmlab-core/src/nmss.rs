//! Composed threshold non-malleable secret sharing.
//!
//! Quantum variant: the 2-of-2 split-state code produces a classical part
//! `X` and a quantum-containing part `(Y, Z)`; the latter (register `L`)
//! is Shamir-shared among the parties and `X` (register `R`) goes through
//! the 2-of-p leakage-resilient scheme, instantiated bitwise so desk-scale
//! experiments stay exactly enumerable. Party `i` receives
//! `S_i = (L_i, R_i)`.
//!
//! Classical variant: same pipeline with the 2-of-2 slot replaced by a
//! classical scheme (the same `(X, Y)`/extractor layout with the Clifford
//! mask specialized to the one-time pad `c = m xor R[..b]`, which keeps
//! both halves classical) and classical Shamir for `L`; any `t <= p` is
//! allowed there, while the quantum variant is pinned to `t <= p <= 2t-1`
//! by no-cloning.

use crate::extractors::NmExtDescriptor;
use crate::nmc::{CodeContext, CodeParams, KeyMode};
use crate::qmatrix::{CVector, DensityOperator, PureState, RegisterLayout};
use crate::sharing::lrss::{lrrec_2p, lrshare_2p, LrssParams, Share2p};
use crate::sharing::qshamir::{qshare_pure, QShamirParams};
use crate::sharing::{cshamir_rec, cshamir_share};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameters of the composed quantum-message scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmssParams {
    pub t: usize,
    pub p: usize,
    /// The inner 2-of-2 non-malleable code.
    pub inner: CodeParams,
    /// Shamir layer for the `L = (Y, Z)` register.
    pub qshamir: QShamirParams,
    /// Leakage-resilient layer for the `R = X` register (per-bit instances).
    pub lrss: LrssParams,
    /// Enforce the share-size inequalities instead of logging.
    pub strict: bool,
}

impl NmssParams {
    pub fn desk_default(mode: crate::nmc::Mode) -> Self {
        Self {
            t: 3,
            p: 3,
            inner: CodeParams::desk_default(mode),
            qshamir: QShamirParams {
                t: 3,
                p: 3,
                q: 11,
                b: 1,
            },
            lrss: LrssParams {
                b: 1,
                n_vec: 3,
                ell_leak: 4,
                epsilon: 0.25,
                p: 3,
            },
            strict: false,
        }
    }

    /// Dimension of the `L = (Y, Z)` register.
    pub fn l_dim(&self) -> usize {
        (1usize << self.inner.delta_ell()) * (1usize << self.inner.b)
    }

    /// Bits needed to describe one `L` share (the leakage the reduction
    /// charges against the budget).
    pub fn l_share_bits(&self) -> usize {
        let mut bits = 0usize;
        let mut v = (self.qshamir.share_dim() - 1) as u64;
        while v > 0 {
            bits += 1;
            v >>= 1;
        }
        bits
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        self.qshamir.validate()?;
        self.lrss.validate()?;
        if self.t < 3 {
            return Err(Error::InvalidParams(
                "the composed scheme needs t >= 3 (the right part is reconstructed from two shares held by distinct parties)".into(),
            ));
        }
        if self.p < self.t || self.p > 2 * self.t - 1 {
            return Err(Error::InvalidParams(format!(
                "quantum variant needs t <= p <= 2t-1, got t = {}, p = {}",
                self.t, self.p
            )));
        }
        if self.qshamir.t != self.t || self.qshamir.p != self.p {
            return Err(Error::InvalidParams(
                "Shamir layer thresholds must match the scheme".into(),
            ));
        }
        if self.qshamir.message_dim() < self.l_dim() {
            return Err(Error::InvalidParams(format!(
                "L-share capacity {} below the left-part dimension {}",
                self.qshamir.message_dim(),
                self.l_dim()
            )));
        }
        if self.lrss.p != self.p {
            return Err(Error::InvalidParams("LRSS party count mismatch".into()));
        }
        if self.lrss.b != 1 {
            return Err(Error::InvalidParams(
                "the R register is shared bitwise; set lrss.b = 1".into(),
            ));
        }
        if self.lrss.ell_leak < self.l_share_bits() {
            return Err(Error::InvalidParams(format!(
                "leakage budget {} below one L-share description ({} bits)",
                self.lrss.ell_leak,
                self.l_share_bits()
            )));
        }
        if self.strict {
            self.lrss.validate_strict_2ofp()?;
        }
        Ok(())
    }
}

/// One party's share: the Shamir qudit label and its per-bit sub-share
/// vectors.
#[derive(Debug, Clone)]
pub struct NmssShare {
    pub party: usize,
    /// The per-bit 2-of-p sub-shares of `X` held by this party.
    pub r_bits: Vec<Share2p>,
}

/// Output of `nmshare` on a sampled randomness path: the joint quantum
/// state over the `L` share registers (with the message's purification and
/// the dropped-share environments riding along) plus the classical `R`
/// shares.
pub struct NmssShareSet {
    pub params: NmssParams,
    pub l_state: PureState,
    pub shares: Vec<NmssShare>,
    pub ideal_key: Option<u64>,
}

impl NmssShareSet {
    /// Share-set manifest: per-party reduced `L_i` density (dense JSON) and
    /// `R_i` sub-shares as hex rows, plus the parameter block.
    pub fn manifest_json(&self) -> Result<serde_json::Value> {
        let mut parties = Vec::new();
        for share in &self.shares {
            let label = format!("S{}", share.party);
            let others: Vec<&str> = self
                .l_state
                .layout()
                .registers()
                .iter()
                .map(|(l, _)| l.as_str())
                .filter(|l| *l != label.as_str())
                .collect();
            let reduced = crate::qmatrix::pure_state_marginal(&self.l_state, &[label.as_str()])?;
            let _ = others;
            let r_rows: Vec<Vec<String>> =
                share.r_bits.iter().map(|s| s.to_hex_rows()).collect();
            parties.push(serde_json::json!({
                "party": share.party,
                "L": reduced.to_json_matrix(),
                "R": r_rows,
            }));
        }
        Ok(serde_json::json!({
            "params": serde_json::to_value(&self.params)?,
            "parties": parties,
        }))
    }
}

/// Embed `(y, Z)` into the Shamir message qudit: basis `|y, z>` maps to
/// qudit value `y * 2^b + z`.
pub fn embed_l(
    z_state: &PureState,
    z_label: &str,
    y: u64,
    y_bits: usize,
    qudit_dim: usize,
    out_label: &str,
) -> Result<PureState> {
    let layout = z_state.layout();
    let z_slot = layout.index_of(z_label)?;
    let d_z = layout.dim_of(z_label)?;
    let _ = y_bits;
    let out_layout = RegisterLayout::new(
        layout
            .registers()
            .iter()
            .map(|(l, d)| {
                if l == z_label {
                    (out_label.to_string(), qudit_dim)
                } else {
                    (l.clone(), *d)
                }
            })
            .collect(),
    )?;
    let mut v = CVector::zeros(out_layout.total_dim());
    for (idx, amp) in z_state.vector().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut f = layout.unflatten(idx);
        f[z_slot] = (y as usize) * d_z + f[z_slot];
        v[out_layout.flatten(&f)] = *amp;
    }
    PureState::new(v, out_layout)
}

/// Inverse of [`embed_l`] restricted to the code subspace; values outside
/// it have no preimage and are handled by the experiment's total decode
/// convention.
pub fn unembed_value(v: usize, d_z: usize, y_bits: usize) -> (u64, Option<usize>) {
    let code_span = (1usize << y_bits) * d_z;
    if v < code_span {
        ((v / d_z) as u64, Some(v % d_z))
    } else {
        (((v - code_span) as u64) & ((1 << y_bits) - 1), None)
    }
}

/// Share a pure message-with-purification state.
pub fn nmshare(
    sigma: &PureState,
    message_label: &str,
    prm: &NmssParams,
    rng: &mut impl Rng,
) -> Result<NmssShareSet> {
    prm.validate()?;
    let ctx = CodeContext::new(prm.inner.clone())?;
    let ell = prm.inner.ell;
    let n_y = prm.inner.delta_ell();
    let x = rng.gen_range(0..(1u64 << ell));
    let y = rng.gen_range(0..(1u64 << n_y));
    let (kc, ideal_key) = match prm.inner.mode.key {
        KeyMode::Real => (ctx.real_clifford_index(x, y)?, None),
        KeyMode::Ideal => {
            let key = rng.gen_range(0..prm.inner.ideal_key_count() as u64);
            (prm.inner.clifford_index(key), Some(key))
        }
    };
    // Mask M -> Z with the keyed Clifford.
    let masked = sigma.apply_unitary_on(&[message_label], ctx.clifford(kc).dense()?)?;
    let masked = rename_pure(&masked, message_label, "Ztmp")?;
    // Embed (y, Z) into the Shamir qudit and share it.
    let l_plain = embed_l(
        &masked,
        "Ztmp",
        y,
        n_y,
        prm.qshamir.message_dim(),
        "L",
    )?;
    let (l_state, _) = qshare_pure(&l_plain, "L", &prm.qshamir)?;
    // Bitwise leakage-resilient sharing of X.
    let mut per_party: Vec<NmssShare> = (1..=prm.p)
        .map(|party| NmssShare {
            party,
            r_bits: Vec::new(),
        })
        .collect();
    for k in 0..ell {
        let bit = ((x >> k) & 1) as u16;
        let shares = lrshare_2p(bit, &prm.lrss, rng)?;
        for (i, s) in shares.into_iter().enumerate() {
            per_party[i].r_bits.push(s);
        }
    }
    Ok(NmssShareSet {
        params: prm.clone(),
        l_state,
        shares: per_party,
        ideal_key,
    })
}

/// Reconstruct from an authorized set (1-based party indices): Shamir on
/// the chosen `t` L-shares, leakage-resilient reconstruction from the two
/// lowest parties, then the 2-of-2 decode.
pub fn nmrec(set: &NmssShareSet, t_set: &[usize], out_label: &str) -> Result<DensityOperator> {
    let prm = &set.params;
    if t_set.len() < prm.t {
        return Err(Error::Unauthorized {
            need: prm.t,
            got: t_set.len(),
        });
    }
    let ctx = CodeContext::new(prm.inner.clone())?;
    // R side: reconstruct X bit by bit from the two lowest parties.
    let mut sorted = t_set.to_vec();
    sorted.sort_unstable();
    let (i0, j0) = (sorted[0], sorted[1]);
    let mut x = 0u64;
    for k in 0..prm.inner.ell {
        let a = &set.shares[i0 - 1].r_bits[k];
        let b = &set.shares[j0 - 1].r_bits[k];
        let bit = lrrec_2p(&[a, b])?;
        x |= (bit as u64) << k;
    }
    // L side: Shamir reconstruction of the qudit, on the pure state (the
    // joint share state is far too large to hold as a matrix).
    let l_rec = {
        let labels: Vec<String> = sorted[..prm.t].iter().map(|i| format!("S{i}")).collect();
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let perm =
            crate::sharing::qshamir::reconstruction_permutation(&prm.qshamir, &sorted[..prm.t]);
        let permuted = set.l_state.permute_basis_on(&refs, &perm)?;
        // Keep the reconstructed qudit plus everything that is not a share
        // or dropped-share register.
        let mut keep: Vec<String> = vec![labels[0].clone()];
        for (l, _) in permuted.layout().registers() {
            let is_share = l.starts_with('S')
                && l[1..].parse::<usize>().map(|i| i >= 1 && i <= prm.p).unwrap_or(false);
            let is_dropped = l.starts_with('D')
                && l[1..]
                    .parse::<usize>()
                    .map(|i| i > prm.p && i <= prm.qshamir.virtual_p())
                    .unwrap_or(false);
            if !is_share && !is_dropped {
                keep.push(l.clone());
            }
        }
        let keep_refs: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
        let reduced = crate::qmatrix::pure_state_marginal(&permuted, &keep_refs)?;
        crate::nmc::relabel(&reduced, &labels[0], "Lrec")?
    };
    // Un-embed: measure the y' part (classical), keep z' coherent, then
    // apply the candidate unmasking Clifford.
    let d_z = 1usize << prm.inner.b;
    let n_y = prm.inner.delta_ell();
    let (prob_blocks, code_blocks) = split_code_blocks(&l_rec, "Lrec", d_z, n_y)?;
    let mut out_parts: Vec<(f64, DensityOperator)> = Vec::new();
    for (y_prime, weight, block) in code_blocks {
        if weight < 1e-15 {
            continue;
        }
        let kc_prime = match prm.inner.mode.key {
            KeyMode::Real => ctx.real_clifford_index(x, y_prime)?,
            KeyMode::Ideal => {
                let key = set.ideal_key.ok_or_else(|| {
                    Error::InvalidParams("ideal-key share set missing its key".into())
                })?;
                prm.inner.clifford_index(key)
            }
        };
        let decoded = ctx.unmask(&block, "Z", kc_prime, out_label)?;
        out_parts.push((weight, decoded));
    }
    let _ = prob_blocks;
    if out_parts.is_empty() {
        return Err(Error::InvalidState("reconstruction lost all weight".into()));
    }
    let total: f64 = out_parts.iter().map(|(w, _)| w).sum();
    let parts: Vec<(f64, DensityOperator)> = out_parts
        .into_iter()
        .map(|(w, s)| (w / total, s))
        .collect();
    let mixed = DensityOperator::mix(&parts)?;
    Ok(mixed.resymmetrize())
}

/// Outcome of measuring the `(y', code/overflow)` structure of a
/// reconstructed `L` qudit.
pub struct CodeBlockSplit {
    /// Per-`y'` conditioned blocks `(y', weight, state on [Z, rest...])`.
    pub blocks: Vec<(u64, f64, DensityOperator)>,
    pub overflow_weight: f64,
    /// Marginal of the non-`L` registers on the overflow branch
    /// (unnormalized by `overflow_weight`).
    pub overflow_rest: crate::qmatrix::CMatrix,
}

/// Split a state holding a reconstructed `Lrec` qudit into per-`y'` blocks
/// on a proper `Z` qubit register (code subspace only); returns the total
/// overflow weight alongside.
fn split_code_blocks(
    state: &DensityOperator,
    l_label: &str,
    d_z: usize,
    y_bits: usize,
) -> Result<(f64, Vec<(u64, f64, DensityOperator)>)> {
    let split = split_code_blocks_full(state, l_label, d_z, y_bits)?;
    Ok((split.overflow_weight, split.blocks))
}

/// Full split including the overflow branch's residual marginal.
pub fn split_code_blocks_full(
    state: &DensityOperator,
    l_label: &str,
    d_z: usize,
    y_bits: usize,
) -> Result<CodeBlockSplit> {
    let layout = state.layout();
    let l_slot = layout.index_of(l_label)?;
    let q_dim = layout.dim_of(l_label)?;
    let code_span = (1usize << y_bits) * d_z;
    let out_layout = RegisterLayout::new(
        layout
            .registers()
            .iter()
            .map(|(l, d)| {
                if l == l_label {
                    ("Z".to_string(), d_z)
                } else {
                    (l.clone(), *d)
                }
            })
            .collect(),
    )?;
    let dim = state.dim();
    let mut blocks = Vec::new();
    let mut overflow = 0.0;
    for y_prime in 0..(1u64 << y_bits) {
        let mut m = crate::qmatrix::CMatrix::zeros(out_layout.total_dim(), out_layout.total_dim());
        let mut weight = 0.0;
        for i in 0..dim {
            let fi = layout.unflatten(i);
            let vi = fi[l_slot];
            if vi / d_z != y_prime as usize || vi >= code_span {
                continue;
            }
            for j in 0..dim {
                let fj = layout.unflatten(j);
                let vj = fj[l_slot];
                if vj / d_z != y_prime as usize || vj >= code_span {
                    continue;
                }
                let mut oi = fi.clone();
                oi[l_slot] = vi % d_z;
                let mut oj = fj.clone();
                oj[l_slot] = vj % d_z;
                m[(out_layout.flatten(&oi), out_layout.flatten(&oj))] = state.matrix()[(i, j)];
            }
            weight += state.matrix()[(i, i)].re;
        }
        if weight > 1e-15 {
            blocks.push((
                y_prime,
                weight,
                DensityOperator::new_unchecked(m.scale(1.0 / weight), out_layout.clone())?,
            ));
        }
    }
    let rest_dim = layout.total_dim() / q_dim;
    let mut overflow_rest = crate::qmatrix::CMatrix::zeros(rest_dim, rest_dim);
    let rest_index = |f: &[usize]| -> usize {
        let mut r = 0usize;
        for (s, &v) in f.iter().enumerate() {
            if s != l_slot {
                r = r * layout.registers()[s].1 + v;
            }
        }
        r
    };
    for i in 0..dim {
        let fi = layout.unflatten(i);
        let vi = fi[l_slot];
        if vi < code_span || vi >= q_dim {
            continue;
        }
        overflow += state.matrix()[(i, i)].re;
        for j in 0..dim {
            let fj = layout.unflatten(j);
            if fj[l_slot] != vi {
                continue;
            }
            overflow_rest[(rest_index(&fi), rest_index(&fj))] += state.matrix()[(i, j)];
        }
    }
    Ok(CodeBlockSplit {
        blocks,
        overflow_weight: overflow,
        overflow_rest,
    })
}

/// Rename one register of a pure state.
pub fn rename_pure_pub(psi: &PureState, from: &str, to: &str) -> Result<PureState> {
    rename_pure(psi, from, to)
}

fn rename_pure(psi: &PureState, from: &str, to: &str) -> Result<PureState> {
    let layout = RegisterLayout::new(
        psi.layout()
            .registers()
            .iter()
            .map(|(l, d)| {
                if l == from {
                    (to.to_string(), *d)
                } else {
                    (l.clone(), *d)
                }
            })
            .collect(),
    )?;
    PureState::new(psi.vector().clone(), layout)
}

// ---------------------------------------------------------------------
// Quantum-secure classical variant.
// ---------------------------------------------------------------------

/// Inner classical 2-of-2 scheme: `X`, `Y` strings feed the extractor and
/// the message is one-time-padded with the key's low bits. Left part
/// `L = (Y, c)`, right part `R = X`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalInnerParams {
    /// Message bits.
    pub b: usize,
    /// `X` bits.
    pub n1: usize,
    /// `Y` bits.
    pub n2: usize,
    /// Extractor output bits, at least `b`.
    pub r: usize,
    /// Extractor table seed.
    pub nmext_seed: u64,
}

impl ClassicalInnerParams {
    pub fn validate(&self) -> Result<()> {
        if self.r < self.b {
            return Err(Error::InvalidParams(
                "key shorter than the message pad".into(),
            ));
        }
        if self.n1 + self.n2 > 20 {
            return Err(Error::DimensionCap("inner scheme beyond desk scale".into()));
        }
        Ok(())
    }

    pub fn descriptor(&self) -> Result<NmExtDescriptor> {
        NmExtDescriptor::random_table(self.n1, self.n2, self.r, self.nmext_seed)
    }

    /// `L = (Y, c)` in bits.
    pub fn l_bits(&self) -> usize {
        self.n2 + self.b
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalNmssParams {
    pub t: usize,
    pub p: usize,
    pub inner: ClassicalInnerParams,
    /// Prime field for the classical Shamir layer; must exceed both `p` and
    /// the `L` alphabet.
    pub shamir_q: u16,
    pub lrss: LrssParams,
    pub strict: bool,
}

impl ClassicalNmssParams {
    pub fn desk_default() -> Self {
        Self {
            t: 3,
            p: 5,
            inner: ClassicalInnerParams {
                b: 1,
                n1: 4,
                n2: 2,
                r: 2,
                nmext_seed: 0x636c,
            },
            shamir_q: 11,
            lrss: LrssParams {
                b: 1,
                n_vec: 3,
                ell_leak: 4,
                epsilon: 0.25,
                p: 5,
            },
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        self.lrss.validate()?;
        if self.t < 3 || self.t > self.p {
            return Err(Error::InvalidParams(format!(
                "classical variant needs 3 <= t <= p, got t = {}, p = {}",
                self.t, self.p
            )));
        }
        if (self.shamir_q as usize) <= self.p
            || (self.shamir_q as usize) < (1usize << self.inner.l_bits())
        {
            return Err(Error::InvalidParams(format!(
                "Shamir field {} must exceed p = {} and hold the 2^{} L values",
                self.shamir_q,
                self.p,
                self.inner.l_bits()
            )));
        }
        if self.lrss.p != self.p {
            return Err(Error::InvalidParams("LRSS party count mismatch".into()));
        }
        if self.strict {
            self.lrss.validate_strict_2ofp()?;
        }
        Ok(())
    }
}

/// One party's classical share.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalShare {
    pub party: usize,
    pub l_value: u16,
    pub r_bits: Vec<Share2p>,
}

/// Share a classical message.
pub fn nmshare_classical(
    m: u64,
    prm: &ClassicalNmssParams,
    rng: &mut impl Rng,
) -> Result<Vec<ClassicalShare>> {
    prm.validate()?;
    if m >= 1 << prm.inner.b {
        return Err(Error::InvalidParams("message out of range".into()));
    }
    let d = prm.inner.descriptor()?;
    let x = rng.gen_range(0..(1u64 << prm.inner.n1));
    let y = rng.gen_range(0..(1u64 << prm.inner.n2));
    let key = d.eval(x, y)?;
    let c = (m ^ key) & ((1 << prm.inner.b) - 1);
    let l_value = ((y << prm.inner.b) | c) as u16;
    let l_shares = cshamir_share(l_value, prm.t, prm.p, prm.shamir_q, rng)?;
    let mut out: Vec<ClassicalShare> = l_shares
        .into_iter()
        .enumerate()
        .map(|(i, l)| ClassicalShare {
            party: i + 1,
            l_value: l,
            r_bits: Vec::new(),
        })
        .collect();
    for k in 0..prm.inner.n1 {
        let bit = ((x >> k) & 1) as u16;
        let shares = lrshare_2p(bit, &prm.lrss, rng)?;
        for (i, s) in shares.into_iter().enumerate() {
            out[i].r_bits.push(s);
        }
    }
    Ok(out)
}

/// Reconstruct from an authorized set of classical shares.
pub fn nmrec_classical(
    shares: &[&ClassicalShare],
    prm: &ClassicalNmssParams,
) -> Result<u64> {
    if shares.len() < prm.t {
        return Err(Error::Unauthorized {
            need: prm.t,
            got: shares.len(),
        });
    }
    let mut sorted: Vec<&ClassicalShare> = shares.to_vec();
    sorted.sort_by_key(|s| s.party);
    let points: Vec<(usize, u16)> = sorted[..prm.t]
        .iter()
        .map(|s| (s.party, s.l_value))
        .collect();
    let l_value = cshamir_rec(&points, prm.t, prm.shamir_q)? as u64;
    let y = l_value >> prm.inner.b;
    let c = l_value & ((1 << prm.inner.b) - 1);
    let mut x = 0u64;
    for k in 0..prm.inner.n1 {
        let a = &sorted[0].r_bits[k];
        let b = &sorted[1].r_bits[k];
        x |= (lrrec_2p(&[a, b])? as u64) << k;
    }
    let d = prm.inner.descriptor()?;
    let key = d.eval(x, y)?;
    Ok((c ^ key) & ((1 << prm.inner.b) - 1))
}
