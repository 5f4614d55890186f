//! Exact leakage experiments against the inner-product leakage-resilient
//! schemes: bounded quantum leakage channels act on the non-colluding
//! shares (with entangled side registers), and the colluders' view is
//! compared against an independent uniform-message run.

use crate::extractors::ip::ip_preimage_enumerate;
use crate::extractors::FieldVector;
use crate::qmatrix::{CMatrix, CVector, Channel};
use crate::sharing::lrss::LrssParams;
use crate::{Error, Result};
use std::collections::HashMap;

/// A bounded local leakage adversary for a threshold scheme: the colluding
/// set `t_set` keeps its shares and `W` registers; every other party's
/// share passes through a leakage channel into a `Z_j` register.
pub struct LeakageAdversary {
    pub name: String,
    /// Colluding parties (the unauthorized set `T`).
    pub t_set: Vec<usize>,
    /// `(party j, channel on (S_j ⊗ W_j) -> Z_j)` for every `j` not in `T`.
    pub channels: Vec<(usize, Channel)>,
    /// `W_i` dimension per party `1..=p`.
    pub w_dims: Vec<usize>,
    /// Shared entangled state over `W_1 ⊗ ... ⊗ W_p`.
    pub shared: CVector,
}

impl LeakageAdversary {
    /// Constant leakage: every channel traces its input and emits `|0>`.
    pub fn trivial(p: usize, t_set: Vec<usize>, share_dim: usize) -> Self {
        let channels = (1..=p)
            .filter(|j| !t_set.contains(j))
            .map(|j| (j, constant_channel(share_dim, 1)))
            .collect();
        Self {
            name: "trivial".into(),
            t_set,
            channels,
            w_dims: vec![1; p],
            shared: CVector::from_vec(vec![crate::qmatrix::c(1.0, 0.0)]),
        }
    }

    /// Classical function leakage on one party's share (identity-constant on
    /// the others).
    pub fn classical_fn(
        p: usize,
        t_set: Vec<usize>,
        share_dim: usize,
        target: usize,
        f: impl Fn(usize) -> usize,
        out_dim: usize,
        name: &str,
    ) -> Self {
        let channels = (1..=p)
            .filter(|j| !t_set.contains(j))
            .map(|j| {
                if j == target {
                    (j, classical_channel(share_dim, out_dim, &f))
                } else {
                    (j, constant_channel(share_dim, 1))
                }
            })
            .collect();
        Self {
            name: name.into(),
            t_set,
            channels,
            w_dims: vec![1; p],
            shared: CVector::from_vec(vec![crate::qmatrix::c(1.0, 0.0)]),
        }
    }

    /// Entangled strategy: the target party's channel outputs its `W_j`
    /// qubit (entangled with the colluders' `W`) after a share-controlled
    /// phase flip.
    pub fn entangled_phase(p: usize, t_set: Vec<usize>, share_dim: usize, target: usize) -> Self {
        let mut w_dims = vec![1; p];
        w_dims[target - 1] = 2;
        let colluder = t_set[0];
        w_dims[colluder - 1] = 2;
        // |psi> maximally entangled between W_colluder and W_target.
        let w_total: usize = w_dims.iter().product();
        let mut shared = CVector::zeros(w_total);
        // Both relevant registers are qubits; the rest are trivial, so the
        // flat index is (w_first * 2 + w_second) in party order.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        shared[0] = crate::qmatrix::c(s, 0.0);
        shared[3] = crate::qmatrix::c(s, 0.0);
        // Channel: on (S_target ⊗ W_target): phase (-1)^{low bit of share}
        // on W, then emit W as Z, tracing the share.
        let mut kraus = Vec::new();
        for v in 0..share_dim {
            let mut k = CMatrix::zeros(2, share_dim * 2);
            let sign = if v & 1 == 1 { -1.0 } else { 1.0 };
            for w in 0..2 {
                let phase = if w == 1 { sign } else { 1.0 };
                k[(w, v * 2 + w)] = crate::qmatrix::c(phase, 0.0);
            }
            kraus.push(k);
        }
        let channel = Channel::new(
            kraus,
            crate::qmatrix::RegisterLayout::new(vec![("S", share_dim), ("W", 2)]).unwrap(),
            crate::qmatrix::RegisterLayout::single("Z", 2),
        )
        .expect("share-controlled phase leak is CPTP");
        let channels = (1..=p)
            .filter(|j| !t_set.contains(j))
            .map(|j| {
                if j == target {
                    (j, channel.clone())
                } else {
                    (j, constant_channel(share_dim, 1))
                }
            })
            .collect();
        Self {
            name: "entangled-phase".into(),
            t_set,
            channels,
            w_dims,
            shared,
        }
    }

    fn validate(&self, share_dim: usize, budget_bits: usize) -> Result<()> {
        for (j, ch) in &self.channels {
            let out_dim = ch.output_layout().total_dim();
            if out_dim > 1 << budget_bits {
                return Err(Error::LeakageBudget(format!(
                    "Z_{j} has dimension {out_dim} > 2^{budget_bits}"
                )));
            }
            let expect_in = share_dim * self.w_dims[j - 1];
            if ch.input_layout().total_dim() != expect_in {
                return Err(Error::ShapeMismatch(format!(
                    "channel for party {j} expects input dimension {expect_in}"
                )));
            }
        }
        Ok(())
    }
}

/// Serializable leakage-adversary specification.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeakageSpec {
    Trivial,
    /// One parity bit of the target party's packed share.
    Parity { target: usize },
    /// One selected bit of the target party's packed share.
    ShareBit { target: usize, bit: usize },
    /// Share-controlled phase on an entangled qubit handed to the leaker.
    EntangledPhase { target: usize },
}

impl LeakageSpec {
    pub fn name(&self) -> String {
        match self {
            LeakageSpec::Trivial => "trivial".into(),
            LeakageSpec::Parity { target } => format!("parity(S{target})"),
            LeakageSpec::ShareBit { target, bit } => format!("bit{bit}(S{target})"),
            LeakageSpec::EntangledPhase { target } => format!("entangled-phase(S{target})"),
        }
    }

    pub fn build(&self, p: usize, t_set: Vec<usize>, share_dim: usize) -> LeakageAdversary {
        match self {
            LeakageSpec::Trivial => LeakageAdversary::trivial(p, t_set, share_dim),
            LeakageSpec::Parity { target } => LeakageAdversary::classical_fn(
                p,
                t_set,
                share_dim,
                *target,
                |v| (v.count_ones() & 1) as usize,
                2,
                &self.name(),
            ),
            LeakageSpec::ShareBit { target, bit } => {
                let b = *bit;
                LeakageAdversary::classical_fn(
                    p,
                    t_set,
                    share_dim,
                    *target,
                    move |v| (v >> b) & 1,
                    2,
                    &self.name(),
                )
            }
            LeakageSpec::EntangledPhase { target } => {
                LeakageAdversary::entangled_phase(p, t_set, share_dim, *target)
            }
        }
    }
}

fn constant_channel(in_dim: usize, out_dim: usize) -> Channel {
    let kraus = (0..in_dim)
        .map(|v| {
            let mut k = CMatrix::zeros(out_dim, in_dim);
            k[(0, v)] = crate::qmatrix::c(1.0, 0.0);
            k
        })
        .collect();
    Channel::new(
        kraus,
        crate::qmatrix::RegisterLayout::single("S", in_dim),
        crate::qmatrix::RegisterLayout::single("Z", out_dim),
    )
    .expect("constant channel is CPTP")
}

fn classical_channel(in_dim: usize, out_dim: usize, f: &impl Fn(usize) -> usize) -> Channel {
    let kraus = (0..in_dim)
        .map(|v| {
            let mut k = CMatrix::zeros(out_dim, in_dim);
            k[(f(v) % out_dim, v)] = crate::qmatrix::c(1.0, 0.0);
            k
        })
        .collect();
    Channel::new(
        kraus,
        crate::qmatrix::RegisterLayout::single("S", in_dim),
        crate::qmatrix::RegisterLayout::single("Z", out_dim),
    )
    .expect("classical channel is CPTP")
}

fn pack(v: &FieldVector) -> usize {
    v.elems()
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &e)| acc | ((e as usize) << (i * v.field().k() as usize)))
}

/// The colluders' exact view for one fixed message: a map from visible
/// classical share values to the (unnormalized) joint block over
/// `(W_T, Z_j...)`.
type View = HashMap<Vec<usize>, CMatrix>;

/// Apply a set of Kraus slices (`out_dim x d_axis` each) on one register of
/// a dense state: the consumed axis is removed and the output register is
/// appended last.
fn kraus_on_axis(state: &CMatrix, dims: &[usize], axis: usize, slices: &[CMatrix]) -> CMatrix {
    let d_axis = dims[axis];
    let out_dim = slices.first().map(|s| s.nrows()).unwrap_or(1);
    let total = state.nrows();
    let rest = total / d_axis;
    // Flat index -> (axis component, rest index with remaining axes in
    // order).
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let split = |idx: usize| -> (usize, usize) {
        let w = (idx / strides[axis]) % d_axis;
        let mut r = 0usize;
        for (s, &d) in dims.iter().enumerate() {
            if s != axis {
                r = r * d + (idx / strides[s]) % d;
            }
        }
        (w, r)
    };
    let mut decomp = vec![(0usize, 0usize); total];
    let mut lookup = vec![0usize; total];
    for idx in 0..total {
        let (w, r) = split(idx);
        decomp[idx] = (w, r);
        lookup[w * rest + r] = idx;
    }
    let mut out = CMatrix::zeros(rest * out_dim, rest * out_dim);
    for eff in slices {
        for ri in 0..rest {
            for rj in 0..rest {
                for zi in 0..out_dim {
                    for zj in 0..out_dim {
                        let mut acc = crate::qmatrix::c(0.0, 0.0);
                        for wi in 0..d_axis {
                            if eff[(zi, wi)].norm_sqr() == 0.0 {
                                continue;
                            }
                            for wj in 0..d_axis {
                                if eff[(zj, wj)].norm_sqr() == 0.0 {
                                    continue;
                                }
                                acc += eff[(zi, wi)]
                                    * state[(lookup[wi * rest + ri], lookup[wj * rest + rj])]
                                    * eff[(zj, wj)].conj();
                            }
                        }
                        out[(ri * out_dim + zi, rj * out_dim + zj)] += acc;
                    }
                }
            }
        }
    }
    out
}

fn apply_leakage(
    adv: &LeakageAdversary,
    share_of: &dyn Fn(usize) -> usize,
    _p: usize,
) -> Result<CMatrix> {
    // Start from the shared W state; per leaked party, contract its share
    // basis state through the channel, consuming W_j and appending Z_j.
    let mut state = &adv.shared * adv.shared.adjoint();
    // Register dims of the evolving state: the remaining W registers (in
    // party order) followed by the produced Z registers.
    let mut dims: Vec<(usize, usize)> = adv
        .w_dims
        .iter()
        .enumerate()
        .map(|(i, &d)| (i + 1, d))
        .collect();
    let mut z_count = 0usize;
    for (j, ch) in &adv.channels {
        let v = share_of(*j);
        let d_w = adv.w_dims[*j - 1];
        let out_dim = ch.output_layout().total_dim();
        let axis = dims
            .iter()
            .position(|(party, _)| *party == *j)
            .expect("W_j still present");
        let slices: Vec<CMatrix> = ch
            .kraus_operators()
            .iter()
            .map(|k| {
                let mut eff = CMatrix::zeros(out_dim, d_w);
                for z in 0..out_dim {
                    for w in 0..d_w {
                        eff[(z, w)] = k[(z, v * d_w + w)];
                    }
                }
                eff
            })
            .collect();
        let dim_list: Vec<usize> = dims.iter().map(|(_, d)| *d).collect();
        state = kraus_on_axis(&state, &dim_list, axis, &slices);
        dims.remove(axis);
        z_count += 1;
        dims.push((usize::MAX - z_count, out_dim));
    }
    Ok(state)
}

/// Exact leakage distance for the 2-of-2 scheme: colluder holds share
/// `t_set[0]`, the other share leaks. Returns
/// `|| tau(s) - gamma ||_1` with `gamma` the uniform-message view.
pub fn leakage_2of2(adv: &LeakageAdversary, s: u16, prm: &LrssParams) -> Result<f64> {
    let share_dim = (prm.field()?.size() as usize).pow(prm.n_vec as u32);
    adv.validate(share_dim, prm.ell_leak)?;
    let field = prm.field()?;
    let q = field.size();
    let view_for = |secret: u16| -> Result<View> {
        let mut out: View = HashMap::new();
        let pre = ip_preimage_enumerate(secret, field, prm.n_vec);
        let w = 1.0 / pre.len() as f64;
        for (x, y) in &pre {
            let shares = [pack(x), pack(y)];
            let visible: Vec<usize> = adv.t_set.iter().map(|&i| shares[i - 1]).collect();
            let block = apply_leakage(adv, &|j| shares[j - 1], 2)?;
            let entry = out
                .entry(visible)
                .or_insert_with(|| CMatrix::zeros(block.nrows(), block.ncols()));
            *entry += block.scale(w);
        }
        Ok(out)
    };
    let tau = view_for(s)?;
    // Uniform-message reference.
    let mut gamma: View = HashMap::new();
    for s2 in 0..q {
        for (k, m) in view_for(s2)? {
            let entry = gamma
                .entry(k)
                .or_insert_with(|| CMatrix::zeros(m.nrows(), m.ncols()));
            *entry += m.scale(1.0 / q as f64);
        }
    }
    Ok(view_distance(&tau, &gamma))
}

/// Exact leakage distance for the 2-of-p pairwise scheme with a single
/// colluder.
pub fn leakage_2ofp(adv: &LeakageAdversary, s: u16, prm: &LrssParams) -> Result<f64> {
    if adv.t_set.len() != 1 {
        return Err(Error::InvalidParams(
            "desk-scale 2-of-p leakage runs with a single colluder".into(),
        ));
    }
    let field = prm.field()?;
    let q = field.size();
    let sub_dim = (q as usize).pow(prm.n_vec as u32);
    // Party j's share is the tuple of its sub-share vectors; the channels
    // see the packed tuple.
    let share_dim = sub_dim.pow((prm.p - 1) as u32);
    adv.validate(share_dim, prm.ell_leak)?;

    let pairs: Vec<(usize, usize)> = (1..=prm.p)
        .flat_map(|i| ((i + 1)..=prm.p).map(move |j| (i, j)))
        .collect();
    let view_for = |secret: u16| -> Result<View> {
        let pre = ip_preimage_enumerate(secret, field, prm.n_vec);
        let w_each = 1.0 / (pre.len() as f64).powi(pairs.len() as i32);
        let mut out: View = HashMap::new();
        // Odometer over one preimage choice per pair.
        let mut choice = vec![0usize; pairs.len()];
        loop {
            // Assemble per-party packed shares (slots in sorted other-party
            // order, each sub_dim wide).
            let mut party_share = vec![0usize; prm.p];
            for (pi, &(a, b)) in pairs.iter().enumerate() {
                let (xa, xb) = &pre[choice[pi]];
                let (pa, pb) = (pack(xa), pack(xb));
                let slot_a = (1..=prm.p)
                    .filter(|&k| k != a)
                    .position(|k| k == b)
                    .unwrap();
                let slot_b = (1..=prm.p)
                    .filter(|&k| k != b)
                    .position(|k| k == a)
                    .unwrap();
                party_share[a - 1] += pa * sub_dim.pow(slot_a as u32);
                party_share[b - 1] += pb * sub_dim.pow(slot_b as u32);
            }
            let visible: Vec<usize> = adv.t_set.iter().map(|&i| party_share[i - 1]).collect();
            let block = apply_leakage(adv, &|j| party_share[j - 1], prm.p)?;
            let entry = out
                .entry(visible)
                .or_insert_with(|| CMatrix::zeros(block.nrows(), block.ncols()));
            *entry += block.scale(w_each);

            let mut k = pairs.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < pre.len() {
                    break;
                }
                choice[k] = 0;
            }
            if choice.iter().all(|&c_| c_ == 0) {
                break;
            }
        }
        Ok(out)
    };
    let tau = view_for(s)?;
    let mut gamma: View = HashMap::new();
    for s2 in 0..q {
        for (k, m) in view_for(s2)? {
            let entry = gamma
                .entry(k)
                .or_insert_with(|| CMatrix::zeros(m.nrows(), m.ncols()));
            *entry += m.scale(1.0 / q as f64);
        }
    }
    Ok(view_distance(&tau, &gamma))
}

fn view_distance(a: &View, b: &View) -> f64 {
    let mut total = 0.0;
    let keys: std::collections::BTreeSet<Vec<usize>> =
        a.keys().chain(b.keys()).cloned().collect();
    for k in keys {
        match (a.get(&k), b.get(&k)) {
            (Some(x), Some(y)) => {
                total += crate::qmatrix::hermitian_trace_norm(&(x - y));
            }
            (Some(x), None) | (None, Some(x)) => {
                total += crate::qmatrix::hermitian_trace_norm(x);
            }
            (None, None) => {}
        }
    }
    total
}
