//! Quantum Shamir sharing over prime-dimension qudits: the secret is the
//! leading coefficient of a degree-`< t` polynomial superposed over all
//! lower-order coefficients, with party `i` holding the evaluation at
//! `alpha_i = i mod q`.
//!
//! The base case is `p' = 2t - 1` parties, where tracing any `t` shares
//! fully decoheres the rest (a degree-`< t` polynomial is pinned by `t`
//! values), which is what makes every `<= t-1` marginal exactly uniform.
//! For `p < 2t - 1` the scheme shares among `p' = 2t - 1` virtual parties
//! and drops the last `p' - p` shares; the dropped registers stay in the
//! returned state as environment registers `D{i}` so pure-state pipelines
//! can keep propagating vectors, and are ignored by reconstruction.
//!
//! Encoding the secret in the top coefficient keeps every evaluation point
//! usable (including 0), so a prime `q >= max(2t - 1, message dim)` always
//! suffices. Reconstruction from `t` shares is the reversible linear map
//! `(values on T) -> (secret, values at the t-1 points outside T)`; the
//! residual registers pair up with the untouched and dropped shares in a
//! state independent of the secret, so discarding them is safe for
//! entangled messages.

use super::prime_field::PrimeField;
use crate::qmatrix::{CMatrix, CVector, DensityOperator, PureState, RegisterLayout};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QShamirParams {
    /// Threshold.
    pub t: usize,
    /// Party count; no-cloning forces `p/2 < t <= p`.
    pub p: usize,
    /// Prime share dimension, `q >= 2t - 1`.
    pub q: u16,
    /// Message qudits (each shared independently).
    pub b: usize,
}

impl QShamirParams {
    pub fn validate(&self) -> Result<()> {
        PrimeField::new(self.q)?;
        if self.t == 0 || self.t > self.p || 2 * self.t <= self.p {
            return Err(Error::InvalidParams(format!(
                "need p/2 < t <= p, got t = {}, p = {}",
                self.t, self.p
            )));
        }
        if (self.q as usize) < 2 * self.t - 1 {
            return Err(Error::InvalidParams(format!(
                "share dimension q = {} must be at least 2t-1 = {}",
                self.q,
                2 * self.t - 1
            )));
        }
        if self.b == 0 {
            return Err(Error::InvalidParams("need at least one message qudit".into()));
        }
        Ok(())
    }

    /// Virtual party count of the base scheme.
    pub fn virtual_p(&self) -> usize {
        2 * self.t - 1
    }

    /// Message dimension `q^b`.
    pub fn message_dim(&self) -> usize {
        (self.q as usize).pow(self.b as u32)
    }

    /// Per-party share dimension `q^b`.
    pub fn share_dim(&self) -> usize {
        self.message_dim()
    }

    /// Evaluation point of virtual party `i` (1-based): `i mod q`.
    pub fn alpha(&self, i: usize) -> u16 {
        (i as u16) % self.q
    }
}

/// Joint state over the `p` share registers `S1..Sp`, any dropped-share
/// environment registers `D{p+1}..`, and whatever externals ride along.
#[derive(Debug, Clone)]
pub struct QuantumShareSet {
    pub state: DensityOperator,
    pub params: QShamirParams,
}

impl QuantumShareSet {
    pub fn share_label(i: usize) -> String {
        format!("S{i}")
    }

    pub fn dropped_labels(&self) -> Vec<String> {
        (self.params.p + 1..=self.params.virtual_p())
            .map(|i| format!("D{i}"))
            .collect()
    }

    /// The state with dropped-share environments traced out.
    pub fn without_dropped(&self) -> Result<DensityOperator> {
        let dropped = self.dropped_labels();
        if dropped.is_empty() {
            return Ok(self.state.clone());
        }
        let refs: Vec<&str> = dropped.iter().map(|s| s.as_str()).collect();
        crate::qmatrix::partial_trace(&self.state, &refs)
    }
}

/// Sparse share isometry over the virtual parties: for each message basis
/// index, the share basis indices receiving amplitude `q^{-b(t-1)/2}`.
fn share_columns(prm: &QShamirParams) -> Vec<Vec<usize>> {
    let f = PrimeField::new(prm.q).expect("validated");
    let q = prm.q as usize;
    let vp = prm.virtual_p();
    let rand_count = q.pow((prm.t - 1) as u32);
    let mut columns = Vec::with_capacity(prm.message_dim());
    for m in 0..prm.message_dim() {
        let secrets: Vec<u16> = digits(m, q, prm.b);
        let mut round_values: Vec<Vec<Vec<u16>>> = Vec::with_capacity(prm.b);
        for &s in &secrets {
            let mut per_round = Vec::with_capacity(rand_count);
            for g in 0..rand_count {
                // Coefficients: constant term first, secret on x^{t-1}.
                let mut coeffs: Vec<u16> = digits_lsb(g, q, prm.t - 1);
                coeffs.push(s);
                let values: Vec<u16> =
                    (1..=vp).map(|i| f.eval_poly(&coeffs, prm.alpha(i))).collect();
                per_round.push(values);
            }
            round_values.push(per_round);
        }
        let mut indices = Vec::with_capacity(rand_count.pow(prm.b as u32));
        let mut choice = vec![0usize; prm.b];
        loop {
            let mut idx = 0usize;
            for i in 0..vp {
                for (round, &ch) in choice.iter().enumerate() {
                    idx = idx * q + round_values[round][ch][i] as usize;
                }
            }
            indices.push(idx);
            let mut k = prm.b;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < rand_count {
                    break;
                }
                choice[k] = 0;
            }
            if choice.iter().all(|&c_| c_ == 0) {
                break;
            }
        }
        columns.push(indices);
    }
    columns
}

/// Most-significant digit first.
fn digits(mut v: usize, q: usize, count: usize) -> Vec<u16> {
    let mut out = vec![0u16; count];
    for slot in (0..count).rev() {
        out[slot] = (v % q) as u16;
        v /= q;
    }
    out
}

/// Least-significant digit first (coefficient enumeration order).
fn digits_lsb(mut v: usize, q: usize, count: usize) -> Vec<u16> {
    let mut out = vec![0u16; count];
    for slot in out.iter_mut() {
        *slot = (v % q) as u16;
        v /= q;
    }
    out
}

fn undigits(ds: &[u16], q: usize) -> usize {
    ds.iter().fold(0usize, |acc, &d| acc * q + d as usize)
}

/// Output layout: the message register replaced by the kept share registers
/// and the dropped-share environments (in party order), externals unchanged.
fn output_layout(
    layout: &RegisterLayout,
    message_label: &str,
    prm: &QShamirParams,
) -> Result<(usize, RegisterLayout)> {
    let m_slot = layout.index_of(message_label)?;
    if layout.dim_of(message_label)? != prm.message_dim() {
        return Err(Error::InvalidParams(format!(
            "message register dimension {} != q^b = {}",
            layout.dim_of(message_label)?,
            prm.message_dim()
        )));
    }
    let mut regs: Vec<(String, usize)> = Vec::new();
    for (slot, (l, d)) in layout.registers().iter().enumerate() {
        if slot == m_slot {
            for i in 1..=prm.virtual_p() {
                let label = if i <= prm.p {
                    format!("S{i}")
                } else {
                    format!("D{i}")
                };
                regs.push((label, prm.share_dim()));
            }
        } else {
            regs.push((l.clone(), *d));
        }
    }
    Ok((m_slot, RegisterLayout::new(regs)?))
}

/// Apply the share isometry to a raw vector over `layout`.
fn share_vector(
    vector: &CVector,
    layout: &RegisterLayout,
    m_slot: usize,
    out_layout: &RegisterLayout,
    columns: &[Vec<usize>],
    prm: &QShamirParams,
) -> CVector {
    let amp = 1.0 / ((prm.q as f64).powi((prm.b * (prm.t - 1)) as i32)).sqrt();
    let mut v = CVector::zeros(out_layout.total_dim());
    for (in_idx, z) in vector.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let in_f = layout.unflatten(in_idx);
        let m = in_f[m_slot];
        for &share_idx in &columns[m] {
            let mut out_f = Vec::with_capacity(out_layout.registers().len());
            for (slot, &val) in in_f.iter().enumerate() {
                if slot == m_slot {
                    let mut per_party = vec![0usize; prm.virtual_p()];
                    let mut rest = share_idx;
                    for i in (0..prm.virtual_p()).rev() {
                        per_party[i] = rest % prm.share_dim();
                        rest /= prm.share_dim();
                    }
                    out_f.extend(per_party);
                } else {
                    out_f.push(val);
                }
            }
            v[out_layout.flatten(&out_f)] += z * crate::qmatrix::c(amp, 0.0);
        }
    }
    v
}

/// Share a pure state; externals ride along and the dropped-share
/// environments keep the output pure.
pub fn qshare_pure(
    psi: &PureState,
    message_label: &str,
    prm: &QShamirParams,
) -> Result<(PureState, QShamirParams)> {
    prm.validate()?;
    let layout = psi.layout();
    let (m_slot, out_layout) = output_layout(layout, message_label, prm)?;
    let columns = share_columns(prm);
    let v = share_vector(psi.vector(), layout, m_slot, &out_layout, &columns, prm);
    Ok((PureState::new(v, out_layout)?, *prm))
}

/// Share a Hermitian operator (a state, or a traceless observable for the
/// hiding checks) living on `layout`; dropped-share environments are traced
/// out. Works one eigenvector at a time so the virtual-share space is never
/// materialized as a matrix.
fn qshare_hermitian(
    op: &CMatrix,
    layout: &RegisterLayout,
    message_label: &str,
    prm: &QShamirParams,
) -> Result<DensityOperator> {
    prm.validate()?;
    let (m_slot, out_layout) = output_layout(layout, message_label, prm)?;
    let columns = share_columns(prm);
    let dropped: Vec<String> = (prm.p + 1..=prm.virtual_p())
        .map(|i| format!("D{i}"))
        .collect();
    let kept_labels: Vec<&str> = out_layout
        .registers()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| !dropped.iter().any(|d| d == l))
        .collect();
    let kept_layout = RegisterLayout::new(
        kept_labels
            .iter()
            .map(|l| Ok((l.to_string(), out_layout.dim_of(l)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let kept_dim = kept_layout.total_dim();
    let (vals, vecs) = crate::qmatrix::hermitian_eigen(op);
    let mut accum = CMatrix::zeros(kept_dim, kept_dim);
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda.abs() < 1e-14 {
            continue;
        }
        let col = vecs.column(k).into_owned();
        let shared = share_vector(&col, layout, m_slot, &out_layout, &columns, prm);
        let psi = PureState::new(shared, out_layout.clone())?;
        let marg = crate::qmatrix::pure_state_marginal(&psi, &kept_labels)?;
        accum += marg.matrix().scale(lambda);
    }
    DensityOperator::new_unchecked(accum, kept_layout)
}

/// Share a density operator; the dropped-share environments are traced out.
pub fn qshare(
    sigma: &DensityOperator,
    message_label: &str,
    prm: &QShamirParams,
) -> Result<QuantumShareSet> {
    Ok(QuantumShareSet {
        state: qshare_hermitian(sigma.matrix(), sigma.layout(), message_label, prm)?,
        params: *prm,
    })
}

/// Share an arbitrary operator on the bare message space (no externals);
/// used for the traceless-operator hiding checks. Non-Hermitian inputs are
/// split as `A = H1 + i H2` and shared by linearity.
pub fn qshare_operator(op: &CMatrix, prm: &QShamirParams) -> Result<DensityOperator> {
    let layout = RegisterLayout::single("M", prm.message_dim());
    let h1 = (op + op.adjoint()).scale(0.5);
    let h2 = ((op - op.adjoint()) * crate::qmatrix::c(0.0, -0.5)).clone();
    let s1 = qshare_hermitian(&h1, &layout, "M", prm)?;
    let s2 = qshare_hermitian(&h2, &layout, "M", prm)?;
    DensityOperator::new_unchecked(
        s1.matrix() + s2.matrix() * crate::qmatrix::c(0.0, 1.0),
        s1.layout().clone(),
    )
}

/// Reconstruction permutation on the joint basis of the `t` chosen share
/// registers: per round, maps values at the `T` points to (secret digit,
/// values at the `t-1` virtual points outside `T`).
pub fn reconstruction_permutation(prm: &QShamirParams, t_set: &[usize]) -> Vec<usize> {
    let f = PrimeField::new(prm.q).expect("validated");
    let q = prm.q as usize;
    let points: Vec<u16> = t_set.iter().map(|&i| prm.alpha(i)).collect();
    let residuals: Vec<u16> = (1..=prm.virtual_p())
        .filter(|i| !t_set.contains(i))
        .map(|i| prm.alpha(i))
        .collect();
    let t = prm.t;
    debug_assert_eq!(residuals.len(), t - 1);
    // Lagrange data: leading coefficient weight and residual-point values of
    // each basis polynomial.
    let mut lead = vec![0u16; t];
    let mut res_vals = vec![vec![0u16; residuals.len()]; t];
    for j in 0..t {
        let mut denom = 1u16;
        for i in 0..t {
            if i != j {
                denom = f.mul(denom, f.sub(points[j], points[i]));
            }
        }
        let denom_inv = f.inv(denom).expect("distinct points");
        lead[j] = denom_inv;
        for (ri, &rp) in residuals.iter().enumerate() {
            let mut num = 1u16;
            for i in 0..t {
                if i != j {
                    num = f.mul(num, f.sub(rp, points[i]));
                }
            }
            res_vals[j][ri] = f.mul(num, denom_inv);
        }
    }
    let round_map = |vals: &[u16]| -> Vec<u16> {
        let mut out = Vec::with_capacity(t);
        let mut s = 0u16;
        for j in 0..t {
            s = f.add(s, f.mul(lead[j], vals[j]));
        }
        out.push(s);
        for ri in 0..residuals.len() {
            let mut rv = 0u16;
            for j in 0..t {
                rv = f.add(rv, f.mul(res_vals[j][ri], vals[j]));
            }
            out.push(rv);
        }
        out
    };
    let dim = prm.share_dim().pow(t as u32);
    let mut perm = vec![0usize; dim];
    for idx in 0..dim {
        let mut rest = idx;
        let mut party_digits = vec![vec![0u16; prm.b]; t];
        for pi in (0..t).rev() {
            let share_val = rest % prm.share_dim();
            rest /= prm.share_dim();
            party_digits[pi] = digits(share_val, q, prm.b);
        }
        let mut out_digit_groups = vec![vec![0u16; prm.b]; t];
        for round in 0..prm.b {
            let vals: Vec<u16> = (0..t).map(|pi| party_digits[pi][round]).collect();
            let mapped = round_map(&vals);
            for (k, &mv) in mapped.iter().enumerate() {
                out_digit_groups[k][round] = mv;
            }
        }
        let mut out_idx = 0usize;
        for group in &out_digit_groups {
            out_idx = out_idx * prm.share_dim() + undigits(group, q);
        }
        perm[idx] = out_idx;
    }
    perm
}

/// Reconstruct from an authorized subset `t_set` (1-based party indices):
/// applies the reconstruction permutation on the chosen `t` share registers,
/// relabels the first as the output, and traces out everything else the
/// scheme created.
pub fn qrec(
    shares: &QuantumShareSet,
    t_set: &[usize],
    out_label: &str,
) -> Result<DensityOperator> {
    let prm = &shares.params;
    if t_set.len() < prm.t {
        return Err(Error::Unauthorized {
            need: prm.t,
            got: t_set.len(),
        });
    }
    let t_set = &t_set[..prm.t];
    let labels: Vec<String> = t_set.iter().map(|i| format!("S{i}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let perm = reconstruction_permutation(prm, t_set);
    let dim = prm.share_dim().pow(prm.t as u32);
    let mut u = CMatrix::zeros(dim, dim);
    for (src, &dst) in perm.iter().enumerate() {
        u[(dst, src)] = crate::qmatrix::c(1.0, 0.0);
    }
    let applied = shares.state.apply_unitary_on(&label_refs, &u)?;
    let renamed = crate::nmc::relabel(&applied, &labels[0], out_label)?;
    let mut to_trace: Vec<String> = labels[1..].to_vec();
    for i in 1..=prm.p {
        let l = format!("S{i}");
        if !labels.contains(&l) && renamed.layout().contains(&l) {
            to_trace.push(l);
        }
    }
    for l in (prm.p + 1..=prm.virtual_p()).map(|i| format!("D{i}")) {
        if renamed.layout().contains(&l) {
            to_trace.push(l);
        }
    }
    let trace_refs: Vec<&str> = to_trace.iter().map(|s| s.as_str()).collect();
    crate::qmatrix::partial_trace(&renamed, &trace_refs)
}
