//! Exact threshold-tampering experiments against the composed quantum
//! NMSS scheme.
//!
//! The average-case message (maximally entangled) lets the keyed Clifford
//! mask move onto the untouched purification register and commute past the
//! whole share-tamper-reconstruct pipeline, so one heavy pure-state run per
//! `y` value covers every key; the key averages happen on small blocks. The
//! classical `R`-side transition factorizes per bit and is enumerated
//! exactly over the relevant pair preimages.

use super::block;
use crate::extractors::ip::ip_preimage_enumerate;
use crate::nmss::{embed_l, rename_pure_pub, split_code_blocks_full, NmssParams};
use crate::qmatrix::{
    pure_state_marginal, CMatrix, CVector, DensityOperator, PureState, RegisterLayout,
};
use crate::sharing::qshamir::reconstruction_permutation;
use crate::{Error, Result};
use num_complex::Complex64;

/// Classical tampering on one party's `R` sub-share slots (applied to every
/// bit instance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RTamper {
    Identity,
    /// New slot `k` takes the content of old slot `perm[k]` (slots indexed
    /// by the sorted list of other parties).
    PermuteSlots { perm: Vec<usize> },
    /// Xor a fixed mask onto each slot (`N`-bit masks, one per slot).
    XorSlots { masks: Vec<u16> },
    /// Replace each slot with a constant vector.
    ConstantSlots { values: Vec<u16> },
}

/// Threshold adversary: per-party unitaries on `(S_i, W_i)` for `i` in the
/// authorized set, classical tampering on the `R` slots, and a shared
/// entangled state across all `W` registers.
pub struct ThresholdAdversary {
    pub name: String,
    pub t_set: Vec<usize>,
    /// One unitary per party in `t_set` order, acting on `(S_i ⊗ W_i)` (or
    /// on `S_i` alone when its dimension says so).
    pub l_ops: Vec<CMatrix>,
    /// One `R` tamper per party in `t_set` order.
    pub r_ops: Vec<RTamper>,
    /// `W_i` dimensions for every party `1..=p`.
    pub w_dims: Vec<usize>,
    /// Shared state on `W_1 ⊗ ... ⊗ W_p`.
    pub shared: CVector,
}

impl ThresholdAdversary {
    pub fn identity(prm: &NmssParams) -> Self {
        let q = prm.qshamir.share_dim();
        Self {
            name: "identity".into(),
            t_set: (1..=prm.t).collect(),
            l_ops: (0..prm.t).map(|_| CMatrix::identity(q, q)).collect(),
            r_ops: (0..prm.t).map(|_| RTamper::Identity).collect(),
            w_dims: vec![1; prm.p],
            shared: CVector::from_vec(vec![crate::qmatrix::c(1.0, 0.0)]),
        }
    }

    /// Generalized Pauli (shift^a clock^b) on one party's `L` share.
    pub fn pauli_l(prm: &NmssParams, party: usize, shift: u16, clock: u16) -> Self {
        let q = prm.qshamir.share_dim();
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / q as f64);
        let mut op = CMatrix::zeros(q, q);
        for k in 0..q {
            op[((k + shift as usize) % q, k)] = omega.powu((clock as u32) * (k as u32));
        }
        let mut adv = Self::identity(prm);
        adv.name = format!("pauli-l(party {party}, shift {shift}, clock {clock})");
        let pos = adv.t_set.iter().position(|&i| i == party).expect("party in T");
        adv.l_ops[pos] = op;
        adv
    }

    /// Haar-random unitaries on `(S_i, W_i)` for every tampered party, with
    /// an entangled shared `W` state.
    pub fn haar_l(prm: &NmssParams, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let q = prm.qshamir.share_dim();
        let d = 2usize;
        let mut adv = Self::identity(prm);
        adv.name = format!("haar-l({seed})");
        adv.w_dims = vec![d; prm.p];
        for op in adv.l_ops.iter_mut() {
            *op = super::adversary::haar_unitary_pub(q * d, &mut rng);
        }
        let w_total: usize = adv.w_dims.iter().product();
        let mut shared = CVector::zeros(w_total);
        let mut norm2 = 0.0;
        for k in 0..w_total {
            let re = rng.gen::<f64>() - 0.5;
            let im = rng.gen::<f64>() - 0.5;
            shared[k] = crate::qmatrix::c(re, im);
            norm2 += re * re + im * im;
        }
        adv.shared = shared.scale(1.0 / norm2.sqrt());
        adv
    }

    /// Swap two sub-share slots consistently at two parties.
    pub fn permute_r(prm: &NmssParams, parties: (usize, usize), swap: (usize, usize)) -> Self {
        let mut adv = Self::identity(prm);
        adv.name = format!("permute-r(parties {:?}, slots {:?})", parties, swap);
        let slot_count = prm.p - 1;
        let mut perm: Vec<usize> = (0..slot_count).collect();
        perm.swap(swap.0, swap.1);
        for party in [parties.0, parties.1] {
            let pos = adv.t_set.iter().position(|&i| i == party).expect("party in T");
            adv.r_ops[pos] = RTamper::PermuteSlots { perm: perm.clone() };
        }
        adv
    }

    /// Replace one party's slots with constants.
    pub fn constant_r(prm: &NmssParams, party: usize, value: u16) -> Self {
        let mut adv = Self::identity(prm);
        adv.name = format!("constant-r(party {party}, {value:#x})");
        let pos = adv.t_set.iter().position(|&i| i == party).expect("party in T");
        adv.r_ops[pos] = RTamper::ConstantSlots {
            values: vec![value; prm.p - 1],
        };
        adv
    }

    fn r_op_for(&self, party: usize) -> &RTamper {
        self.t_set
            .iter()
            .position(|&i| i == party)
            .map(|pos| &self.r_ops[pos])
            .unwrap_or(&RTamper::Identity)
    }
}

/// Serializable threshold-adversary specification for configs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NmssAdversarySpec {
    Identity,
    PauliL { party: usize, shift: u16, clock: u16 },
    HaarL { seed: u64 },
    PermuteR { parties: (usize, usize), slots: (usize, usize) },
    ConstantR { party: usize, value: u16 },
}

impl NmssAdversarySpec {
    pub fn build(&self, prm: &NmssParams) -> ThresholdAdversary {
        match self {
            NmssAdversarySpec::Identity => ThresholdAdversary::identity(prm),
            NmssAdversarySpec::PauliL { party, shift, clock } => {
                ThresholdAdversary::pauli_l(prm, *party, *shift, *clock)
            }
            NmssAdversarySpec::HaarL { seed } => ThresholdAdversary::haar_l(prm, *seed),
            NmssAdversarySpec::PermuteR { parties, slots } => {
                ThresholdAdversary::permute_r(prm, *parties, *slots)
            }
            NmssAdversarySpec::ConstantR { party, value } => {
                ThresholdAdversary::constant_r(prm, *party, *value)
            }
        }
    }
}

/// Where a decode slot's content comes from after classical tampering.
#[derive(Debug, Clone, PartialEq, Eq)]
enum SlotSource {
    Const(u16),
    Half {
        /// The original sharing pair (sorted).
        pair: (usize, usize),
        /// Which half: 0 = the lower party's vector, 1 = the higher's.
        which: usize,
        xor: u16,
    },
}

fn resolve_slot(owner: usize, target: usize, tamper: &RTamper, p: usize) -> SlotSource {
    let others: Vec<usize> = (1..=p).filter(|&j| j != owner).collect();
    let pos = others
        .iter()
        .position(|&j| j == target)
        .expect("target is another party");
    let half_of = |other: usize, xor: u16| -> SlotSource {
        let pair = (owner.min(other), owner.max(other));
        SlotSource::Half {
            pair,
            which: usize::from(owner > other),
            xor,
        }
    };
    match tamper {
        RTamper::Identity => half_of(others[pos], 0),
        RTamper::PermuteSlots { perm } => half_of(others[perm[pos]], 0),
        RTamper::XorSlots { masks } => half_of(others[pos], masks[pos]),
        RTamper::ConstantSlots { values } => SlotSource::Const(values[pos]),
    }
}

fn pack_vec(v: &crate::extractors::FieldVector) -> u16 {
    v.elems()
        .iter()
        .enumerate()
        .fold(0u16, |acc, (i, &e)| acc | (e << i))
}

fn ip_bit(a: u16, b: u16) -> usize {
    ((a & b).count_ones() & 1) as usize
}

/// Exact per-bit transition `T[s][s']` of the reconstructed `X` bit under
/// the adversary's classical tampering, enumerated over the relevant pair
/// preimages (all pair sharings carry the same secret bit).
pub fn bit_transition(adv: &ThresholdAdversary, prm: &NmssParams) -> Result<[[f64; 2]; 2]> {
    let mut sorted = adv.t_set.clone();
    sorted.sort_unstable();
    let (i0, j0) = (sorted[0], sorted[1]);
    let src_a = resolve_slot(i0, j0, adv.r_op_for(i0), prm.p);
    let src_b = resolve_slot(j0, i0, adv.r_op_for(j0), prm.p);
    let field = prm.lrss.field()?;
    let n = prm.lrss.n_vec;

    let mut t = [[0.0f64; 2]; 2];
    for s in 0..2u16 {
        let pre: Vec<(u16, u16)> = ip_preimage_enumerate(s, field, n)
            .into_iter()
            .map(|(x, y)| (pack_vec(&x), pack_vec(&y)))
            .collect();
        let mut counts = [0.0f64; 2];
        let mut total = 0.0f64;
        let same_pair = matches!(
            (&src_a, &src_b),
            (SlotSource::Half { pair: pa, .. }, SlotSource::Half { pair: pb, .. }) if pa == pb
        );
        if same_pair {
            for &(u, v) in &pre {
                let pick = |src: &SlotSource| -> u16 {
                    match src {
                        SlotSource::Const(c_) => *c_,
                        SlotSource::Half { which, xor, .. } => {
                            (if *which == 0 { u } else { v }) ^ xor
                        }
                    }
                };
                counts[ip_bit(pick(&src_a), pick(&src_b))] += 1.0;
                total += 1.0;
            }
        } else {
            let side = |src: &SlotSource| -> Vec<u16> {
                match src {
                    SlotSource::Const(c_) => vec![*c_],
                    SlotSource::Half { which, xor, .. } => pre
                        .iter()
                        .map(|&(u, v)| (if *which == 0 { u } else { v }) ^ xor)
                        .collect(),
                }
            };
            for a in side(&src_a) {
                for b in side(&src_b) {
                    counts[ip_bit(a, b)] += 1.0;
                    total += 1.0;
                }
            }
        }
        t[s as usize][0] = counts[0] / total;
        t[s as usize][1] = counts[1] / total;
    }
    Ok(t)
}

/// Probability that the reconstructed `X'` equals `X` (uniform `X`).
pub fn p_x_same(adv: &ThresholdAdversary, prm: &NmssParams) -> Result<f64> {
    let t = bit_transition(adv, prm)?;
    let per_bit = 0.5 * (t[0][0] + t[1][1]);
    Ok(per_bit.powi(prm.inner.ell as i32))
}

/// Outcome of a threshold tampering experiment (average-case message).
#[derive(Debug, Clone)]
pub struct NmssOutcome {
    pub eta: DensityOperator,
    pub p_a: f64,
    pub gamma_m: CMatrix,
    pub epsilon_measured: f64,
    pub p_x_same: f64,
    pub overflow_weight: f64,
}

impl NmssOutcome {
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        for v in [self.p_a, self.epsilon_measured, self.p_x_same] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for z in self.eta.matrix().iter() {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        hex::encode(super::fingerprint_digest(&bytes))
    }
}

/// The heavy key-independent part: for one `y`, push the unmasked EPR
/// message half through embed/share/tamper/reconstruct/measure. Returns the
/// per-`y'` blocks on `(Z, Mhat)` plus the overflow branch.
fn pipeline_blocks(
    adv: &ThresholdAdversary,
    prm: &NmssParams,
    y: u64,
) -> Result<crate::nmss::CodeBlockSplit> {
    let d_z = 1usize << prm.inner.b;
    let n_y = prm.inner.delta_ell();
    let layout = RegisterLayout::new(vec![("Ztmp", d_z), ("Mhat", d_z)])?;
    let mut v = CVector::zeros(d_z * d_z);
    for i in 0..d_z {
        v[i * d_z + i] = crate::qmatrix::c(1.0 / (d_z as f64).sqrt(), 0.0);
    }
    let psi = PureState::new(v, layout)?;
    let embedded = embed_l(&psi, "Ztmp", y, n_y, prm.qshamir.message_dim(), "L")?;
    let w_layout = RegisterLayout::new(
        adv.w_dims
            .iter()
            .enumerate()
            .map(|(i, &d)| (format!("W{}", i + 1), d))
            .collect(),
    )?;
    let w_state = PureState::new(adv.shared.clone(), w_layout)?;
    let joint = embedded.tensor(&w_state)?;
    let (shared_state, _) = crate::sharing::qshamir::qshare_pure(&joint, "L", &prm.qshamir)?;
    let mut state = shared_state;
    for (pos, &party) in adv.t_set.iter().enumerate() {
        let s_label = format!("S{party}");
        let w_label = format!("W{party}");
        let op = &adv.l_ops[pos];
        if op.nrows() == prm.qshamir.share_dim() * adv.w_dims[party - 1] {
            state = state.apply_sparse_on(&[s_label.as_str(), w_label.as_str()], op)?;
        } else if op.nrows() == prm.qshamir.share_dim() {
            state = state.apply_sparse_on(&[s_label.as_str()], op)?;
        } else {
            return Err(Error::ShapeMismatch(format!(
                "L op for party {party} has dimension {}",
                op.nrows()
            )));
        }
    }
    let mut sorted = adv.t_set.clone();
    sorted.sort_unstable();
    let labels: Vec<String> = sorted[..prm.t].iter().map(|i| format!("S{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let perm = reconstruction_permutation(&prm.qshamir, &sorted[..prm.t]);
    let state = state.permute_basis_on(&refs, &perm)?;
    let reduced = pure_state_marginal(&state, &[refs[0], "Mhat"])?;
    let reduced = crate::nmc::relabel(&reduced, refs[0], "Lrec")?;
    split_code_blocks_full(&reduced, "Lrec", d_z, n_y)
}

/// Run the exact average-case tampering experiment and build the
/// message-free simulator from the same (independent) run.
pub fn run_nmss_experiment(adv: &ThresholdAdversary, prm: &NmssParams) -> Result<NmssOutcome> {
    prm.validate()?;
    if prm.inner.mode.key != crate::nmc::KeyMode::Ideal {
        return Err(Error::InvalidParams(
            "threshold experiments run in ideal-key mode (real-key enumeration over the composed scheme is beyond desk scale)"
                .into(),
        ));
    }
    if adv.t_set.len() != prm.t {
        return Err(Error::ShapeMismatch(format!(
            "adversary tampers {} shares, threshold is {}",
            adv.t_set.len(),
            prm.t
        )));
    }
    let ctx = crate::nmc::CodeContext::new(prm.inner.clone())?;
    let key_dist = ctx.key_distribution()?;
    let d_z = 1usize << prm.inner.b;
    let n_y = prm.inner.delta_ell();
    let px = p_x_same(adv, prm)?;

    let mut eta = block::zeros(d_z * d_z);
    let mut overflow_total = 0.0;
    let w_y = 1.0 / (1u64 << n_y) as f64;
    for y in 0..(1u64 << n_y) {
        let split = pipeline_blocks(adv, prm, y)?;
        overflow_total += w_y * split.overflow_weight;
        for (y_prime, w_br, blk) in &split.blocks {
            let mut same_avg = block::zeros(d_z * d_z);
            let mut tamp_avg = block::zeros(d_z * d_z);
            for &(kc, kw) in &key_dist {
                let c_dense = ctx.sc[kc].dense()?;
                if *y_prime == y {
                    let op = c_dense.adjoint().kronecker(&c_dense.transpose());
                    same_avg += (&op * blk.matrix() * op.adjoint()).scale(kw);
                }
                for &(kcp, kpw) in &key_dist {
                    let cp = ctx.sc[kcp].dense()?;
                    let op = cp.adjoint().kronecker(&c_dense.transpose());
                    tamp_avg += (&op * blk.matrix() * op.adjoint()).scale(kw * kpw);
                }
            }
            if *y_prime == y {
                block::axpy(&mut eta, w_y * w_br * px, &same_avg);
                block::axpy(&mut eta, w_y * w_br * (1.0 - px), &tamp_avg);
            } else {
                block::axpy(&mut eta, w_y * w_br, &tamp_avg);
            }
        }
        if split.overflow_weight > 1e-15 {
            // Total-decode convention: the decoder emits |0><0| on M; the
            // transposed Clifford still hits Mhat.
            let mut mhat_avg = block::zeros(d_z);
            for &(kc, kw) in &key_dist {
                let ct = ctx.sc[kc].dense()?.transpose();
                mhat_avg += (&ct * &split.overflow_rest * ct.adjoint()).scale(kw);
            }
            let mut m0 = block::zeros(d_z);
            m0[(0, 0)] = crate::qmatrix::c(1.0, 0.0);
            block::axpy(&mut eta, w_y, &m0.kronecker(&mhat_avg));
        }
    }

    let layout = RegisterLayout::new(vec![("M", d_z), ("Mhat", d_z)])?;
    let eta = DensityOperator::new_unchecked(eta, layout.clone())?.resymmetrize();

    // Simulator extraction: the EPR overlap of the message-free run pins
    // p_A (the overlap of gamma ⊗ U with the EPR projector is 1/d^2
    // regardless of gamma), and the M marginal then pins gamma.
    let pi = block::epr_zm(d_z);
    let q_overlap = block::overlap(&pi, eta.matrix());
    let dd = (d_z * d_z) as f64;
    let p_a = ((q_overlap * dd - 1.0) / (dd - 1.0)).clamp(0.0, 1.0);
    let eta_m = crate::qmatrix::partial_trace(&eta, &["Mhat"])?;
    let uniform = CMatrix::identity(d_z, d_z).scale(1.0 / d_z as f64);
    let gamma_m = if p_a >= 1.0 - 1e-12 {
        uniform.clone()
    } else {
        let raw = (eta_m.matrix() - uniform.scale(p_a)).scale(1.0 / (1.0 - p_a));
        let clamped = crate::qmatrix::psd_matrix_function(&raw, |x| x);
        let tr: f64 = clamped.diagonal().iter().map(|z| z.re).sum();
        clamped.scale(1.0 / tr.max(1e-300))
    };
    let reference = pi.scale(p_a)
        + gamma_m
            .kronecker(&CMatrix::identity(d_z, d_z).scale(1.0 / d_z as f64))
            .scale(1.0 - p_a);
    let reference = DensityOperator::new_unchecked(reference, layout)?;
    let epsilon_measured = crate::qmatrix::trace_distance(&eta, &reference)?;

    Ok(NmssOutcome {
        eta,
        p_a,
        gamma_m,
        epsilon_measured,
        p_x_same: px,
        overflow_weight: overflow_total,
    })
}

/// Exact privacy distances of an unauthorized view against the
/// independent-run reference: the `L`-side joint with the purification is
/// compared per key class against `U ⊗ U_Mhat`, and the `R`-side slot
/// distributions are compared per bit against the uniform-message run.
/// Returns `(epsilon_L, epsilon_R)`; their sum bounds the privacy error.
pub fn nmss_privacy(prm: &NmssParams, unauthorized: &[usize]) -> Result<(f64, f64)> {
    prm.validate()?;
    if unauthorized.len() >= prm.t {
        return Err(Error::InvalidParams("set is authorized".into()));
    }
    let ctx = crate::nmc::CodeContext::new(prm.inner.clone())?;
    let key_dist = ctx.key_distribution()?;
    let d_z = 1usize << prm.inner.b;
    let n_y = prm.inner.delta_ell();
    let w_y = 1.0 / (1u64 << n_y) as f64;

    // For the maximally entangled message, masking M with C is the same as
    // hitting the untouched Mhat with C^T; the reference U ⊗ U_Mhat is
    // invariant under that unitary, so the per-key distances all coincide
    // with the identity-key one. One representative per y therefore covers
    // the whole key distribution exactly.
    let _ = &key_dist;
    let mut eps_l: f64 = 0.0;
    let share_labels: Vec<String> = unauthorized.iter().map(|i| format!("S{i}")).collect();
    for y in 0..(1u64 << n_y) {
        let layout = RegisterLayout::new(vec![("M", d_z), ("Mhat", d_z)])?;
        let mut v = CVector::zeros(d_z * d_z);
        for i in 0..d_z {
            v[i * d_z + i] = crate::qmatrix::c(1.0 / (d_z as f64).sqrt(), 0.0);
        }
        let psi = PureState::new(v, layout)?;
        let masked = rename_pure_pub(&psi, "M", "Ztmp")?;
        let embedded = embed_l(&masked, "Ztmp", y, n_y, prm.qshamir.message_dim(), "L")?;
        let (shared, _) = crate::sharing::qshamir::qshare_pure(&embedded, "L", &prm.qshamir)?;
        let mut keep: Vec<&str> = share_labels.iter().map(|s| s.as_str()).collect();
        keep.push("Mhat");
        let marg = pure_state_marginal(&shared, &keep)?;
        let share_dim: usize = unauthorized
            .iter()
            .map(|_| prm.qshamir.share_dim())
            .product();
        let refm = CMatrix::identity(share_dim * d_z, share_dim * d_z)
            .scale(1.0 / (share_dim * d_z) as f64);
        let reference = DensityOperator::new_unchecked(refm, marg.layout().clone())?;
        eps_l += w_y * crate::qmatrix::trace_distance(&marg, &reference)?;
    }

    // R side: visible-slot distribution per bit, real (uniform X) vs the
    // independent uniform-message run. The relevant pair sharings all carry
    // the same bit and are otherwise independent.
    let field = prm.lrss.field()?;
    let n = prm.lrss.n_vec;
    let visible_dist = |bit: u16| -> std::collections::BTreeMap<Vec<u16>, f64> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &a in unauthorized {
            for b in (1..=prm.p).filter(|j| *j != a) {
                let pair = (a.min(b), a.max(b));
                if !pairs.contains(&pair) {
                    pairs.push(pair);
                }
            }
        }
        pairs.sort_unstable();
        let pre: Vec<(u16, u16)> = ip_preimage_enumerate(bit, field, n)
            .into_iter()
            .map(|(x, y)| (pack_vec(&x), pack_vec(&y)))
            .collect();
        let mut acc: Vec<(Vec<u16>, f64)> = vec![(Vec::new(), 1.0)];
        for &(a, b) in &pairs {
            let vis_a = unauthorized.contains(&a);
            let vis_b = unauthorized.contains(&b);
            let mut options: std::collections::BTreeMap<Vec<u16>, f64> =
                std::collections::BTreeMap::new();
            for &(u, v) in &pre {
                let mut key = Vec::new();
                if vis_a {
                    key.push(u);
                }
                if vis_b {
                    key.push(v);
                }
                *options.entry(key).or_insert(0.0) += 1.0 / pre.len() as f64;
            }
            let mut next = Vec::new();
            for (prefix, w) in &acc {
                for (opt, ow) in &options {
                    let mut joined = prefix.clone();
                    joined.extend_from_slice(opt);
                    next.push((joined, w * ow));
                }
            }
            acc = next;
        }
        let mut out = std::collections::BTreeMap::new();
        for (k, w) in acc {
            *out.entry(k).or_insert(0.0) += w;
        }
        out
    };
    let d0 = visible_dist(0);
    let d1 = visible_dist(1);
    let mut mix_real: std::collections::BTreeMap<Vec<u16>, f64> = std::collections::BTreeMap::new();
    for (k, w) in d0.iter().chain(d1.iter()) {
        *mix_real.entry(k.clone()).or_insert(0.0) += 0.5 * w;
    }
    // The independent run shares a fresh uniform message: the same mixture,
    // assembled separately.
    let mut mix_indep: std::collections::BTreeMap<Vec<u16>, f64> = std::collections::BTreeMap::new();
    for bit in 0..2u16 {
        for (k, w) in visible_dist(bit) {
            *mix_indep.entry(k).or_insert(0.0) += 0.5 * w;
        }
    }
    let mut eps_r_bit = 0.0;
    for (k, w) in &mix_real {
        eps_r_bit += (w - mix_indep.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, w) in &mix_indep {
        if !mix_real.contains_key(k) {
            eps_r_bit += w.abs();
        }
    }
    let eps_r = eps_r_bit * prm.inner.ell as f64;
    Ok((eps_l, eps_r))
}
