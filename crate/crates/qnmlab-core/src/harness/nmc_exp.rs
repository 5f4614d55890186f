//! Exact split-state tampering experiments against the non-malleable code:
//! the classical strings are enumerated and aggregated into equivalence
//! classes, the quantum registers evolve as small dense blocks, so every
//! final state is a closed-form mixture.

use super::adversary::SplitAdversary;
use super::block::{self, BlockDims};
use crate::nmc::{CodeContext, KeyMode};
use crate::qmatrix::{CMatrix, DensityOperator, RegisterLayout};
use crate::{Error, Result};
use std::collections::HashMap;

/// Axis indices in block order (Z, Mhat, W1, W2).
const AX_Z: usize = 0;
const AX_M: usize = 1;
const AX_W1: usize = 2;
const AX_W2: usize = 3;

/// Which experiment wiring to run: the original pipeline, the transposed
/// one (Clifford moved onto the purification register at encode time), or
/// the transposed-and-delayed one (key generation and the transposed
/// Clifford pushed past the adversary and decoder).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wiring {
    Standard,
    Transposed,
    Delayed,
}

/// One aggregated classical configuration: everything the quantum pipeline
/// needs to know about `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct ClassKey {
    /// Clifford index of the encode key (real mode only; ideal mode loops).
    kc: u16,
    /// Clifford index of the decode key (real mode only).
    kc_prime: u16,
    y: u8,
    x_class: u8,
    same: bool,
}

/// Exact experiment runner for one adversary against one code context.
pub struct NmcExperiment<'a> {
    pub ctx: &'a CodeContext,
    pub adv: &'a SplitAdversary,
    dims: BlockDims,
    psi_w: CMatrix,
    /// Aggregated classical classes with probabilities (real mode holds the
    /// key indices; ideal mode sets them to 0 and loops over keys).
    classes: Vec<(ClassKey, f64)>,
    /// Clifford index distribution for ideal keys.
    key_dist: Vec<(usize, f64)>,
    /// Exact probability that `(X', Y') = (X, Y)`.
    pub p_same: f64,
}

impl<'a> NmcExperiment<'a> {
    pub fn new(ctx: &'a CodeContext, adv: &'a SplitAdversary) -> Result<Self> {
        let b = ctx.params.b;
        let d_z = 1usize << b;
        adv.validate(d_z)?;
        let dims = BlockDims {
            d_z,
            d_m: d_z,
            d1: adv.d1,
            d2: adv.d2,
        };
        let psi_w = block::shared_density(&adv.shared);
        let ell = ctx.params.ell;
        let n_y = ctx.params.delta_ell();
        let total = ((1u64 << ell) * (1u64 << n_y)) as f64;
        let w_each = 1.0 / total;

        let mut agg: HashMap<ClassKey, f64> = HashMap::new();
        let mut p_same = 0.0;
        match ctx.params.mode.key {
            KeyMode::Real => {
                for y in 0..(1u64 << n_y) {
                    let y2 = adv.g.apply(y, n_y);
                    for x in 0..(1u64 << ell) {
                        let x2 = adv.f.apply(x, ell);
                        let same = x2 == x && y2 == y;
                        let kc = ctx.real_clifford_index(x, y)? as u16;
                        let kc_prime = ctx.real_clifford_index(x2, y2)? as u16;
                        let key = ClassKey {
                            kc,
                            kc_prime,
                            y: y as u8,
                            x_class: adv.x_class_of(x) as u8,
                            same,
                        };
                        *agg.entry(key).or_insert(0.0) += w_each;
                        if same {
                            p_same += w_each;
                        }
                    }
                }
            }
            KeyMode::Ideal => {
                for y in 0..(1u64 << n_y) {
                    let y2 = adv.g.apply(y, n_y);
                    for x in 0..(1u64 << ell) {
                        let x2 = adv.f.apply(x, ell);
                        let same = x2 == x && y2 == y;
                        let key = ClassKey {
                            kc: 0,
                            kc_prime: 0,
                            y: y as u8,
                            x_class: adv.x_class_of(x) as u8,
                            same,
                        };
                        *agg.entry(key).or_insert(0.0) += w_each;
                        if same {
                            p_same += w_each;
                        }
                    }
                }
            }
        }
        // Fixed summation order for bit-reproducible accumulation.
        let mut classes: Vec<(ClassKey, f64)> = agg.into_iter().collect();
        classes.sort_by_key(|(k, _)| *k);
        Ok(Self {
            ctx,
            adv,
            dims,
            psi_w,
            classes,
            key_dist: ctx.key_distribution()?,
            p_same,
        })
    }

    fn sc_dense(&self, idx: usize) -> Result<&CMatrix> {
        self.ctx.sc[idx].dense()
    }

    /// The pre-adversary block for a Clifford index under a wiring:
    /// standard wiring masks `Z`, the transposed wirings touch `Mhat` (at
    /// the end for `Delayed`, so nothing here).
    fn encode_block(&self, sigma_zm: &CMatrix, wiring: Wiring, kc: usize) -> Result<CMatrix> {
        let base = block::base_block(sigma_zm, &self.psi_w);
        Ok(match wiring {
            Wiring::Standard => {
                block::conjugate_on(&base, &self.dims, &[AX_Z], self.sc_dense(kc)?)
            }
            Wiring::Transposed => block::conjugate_on(
                &base,
                &self.dims,
                &[AX_M],
                &self.sc_dense(kc)?.transpose(),
            ),
            Wiring::Delayed => base,
        })
    }

    /// Adversary action on an encoded block for a given `(y, x_class)`.
    fn tamper_block(&self, encoded: &CMatrix, y: u64, x_class: usize) -> CMatrix {
        let mut out = block::conjugate_on(
            encoded,
            &self.dims,
            &[AX_Z, AX_W2],
            self.adv.zw2_op_for(y),
        );
        if self.dims.d1 > 1 || self.adv.w1_ops.len() > 1 {
            out = block::conjugate_on(&out, &self.dims, &[AX_W1], &self.adv.w1_ops[x_class]);
        }
        out
    }

    /// Decode a tampered block with decode-Clifford index `kc_prime` (and
    /// for the delayed wiring, the transposed encode Clifford on `Mhat`).
    fn decode_block(
        &self,
        tampered: &CMatrix,
        wiring: Wiring,
        kc: usize,
        kc_prime: usize,
    ) -> Result<CMatrix> {
        let c_prime = self.sc_dense(kc_prime)?;
        let mut out = block::conjugate_on(
            tampered,
            &self.dims,
            &[AX_Z],
            &c_prime.adjoint(),
        );
        if wiring == Wiring::Delayed {
            out = block::conjugate_on(&out, &self.dims, &[AX_M], &self.sc_dense(kc)?.transpose());
        }
        Ok(out)
    }

    /// Run the experiment: returns the final state on `(M, Mhat)`.
    ///
    /// The message is a state on `[M, Mhat]`; any other layout errors. The
    /// transposed wirings assume the maximally entangled message and are
    /// used by the stage-equality checks.
    pub fn run(&self, sigma: &DensityOperator, wiring: Wiring) -> Result<DensityOperator> {
        let sigma_zm = message_matrix(sigma, self.dims.d_z)?;
        let mut eta = block::zeros(self.dims.d_z * self.dims.d_m);
        // Cache tampered blocks per (kc, y, x_class).
        let mut tampered: HashMap<(usize, u8, u8), CMatrix> = HashMap::new();
        for &(key, w) in &self.classes {
            match self.ctx.params.mode.key {
                KeyMode::Real => {
                    let t = tampered
                        .entry((key.kc as usize, key.y, key.x_class))
                        .or_insert_with(|| {
                            let enc = self
                                .encode_block(&sigma_zm, wiring, key.kc as usize)
                                .expect("encode");
                            self.tamper_block(&enc, key.y as u64, key.x_class as usize)
                        })
                        .clone();
                    let dec = self.decode_block(&t, wiring, key.kc as usize, key.kc_prime as usize)?;
                    block::axpy(&mut eta, w, &block::trace_keep(&dec, &self.dims, &[AX_Z, AX_M]));
                }
                KeyMode::Ideal => {
                    for &(kc, kw) in &self.key_dist {
                        let t = tampered
                            .entry((kc, key.y, key.x_class))
                            .or_insert_with(|| {
                                let enc =
                                    self.encode_block(&sigma_zm, wiring, kc).expect("encode");
                                self.tamper_block(&enc, key.y as u64, key.x_class as usize)
                            })
                            .clone();
                        if key.same {
                            let dec = self.decode_block(&t, wiring, kc, kc)?;
                            block::axpy(
                                &mut eta,
                                w * kw,
                                &block::trace_keep(&dec, &self.dims, &[AX_Z, AX_M]),
                            );
                        } else {
                            // Fresh decode key, averaged over its exact
                            // distribution.
                            for &(kcp, kpw) in &self.key_dist {
                                let dec = self.decode_block(&t, wiring, kc, kcp)?;
                                block::axpy(
                                    &mut eta,
                                    w * kw * kpw,
                                    &block::trace_keep(&dec, &self.dims, &[AX_Z, AX_M]),
                                );
                            }
                        }
                    }
                }
            }
        }
        let layout = RegisterLayout::new(vec![
            ("M".to_string(), self.dims.d_z),
            ("Mhat".to_string(), self.dims.d_m),
        ])?;
        DensityOperator::new_unchecked(eta, layout)
    }

    /// Entrywise agreement of the three wirings, stage by stage, on the
    /// maximally entangled message: returns the maximum entry difference
    /// over (encoded, tampered, final) stages across all classical classes.
    pub fn stage_differences(&self) -> Result<StageDiffs> {
        let epr = block::epr_zm(self.dims.d_z);
        let mut enc_diff: f64 = 0.0;
        let mut tamper_diff: f64 = 0.0;
        let mut final_diff: f64 = 0.0;

        // Per Clifford index: encoded-stage agreement between the standard
        // and transposed wirings (the delayed wiring intentionally differs
        // until the end).
        for &(kc, _) in &self.key_dist {
            let a = self.encode_block(&epr, Wiring::Standard, kc)?;
            let b = self.encode_block(&epr, Wiring::Transposed, kc)?;
            enc_diff = enc_diff.max(crate::qmatrix::max_entry_diff(&a, &b));
            for y in 0..(1u64 << self.ctx.params.delta_ell()) {
                for x_class in 0..self.adv.x_classes {
                    let ta = self.tamper_block(&a, y, x_class);
                    let tb = self.tamper_block(&b, y, x_class);
                    tamper_diff = tamper_diff.max(crate::qmatrix::max_entry_diff(&ta, &tb));
                }
            }
        }

        // Final stage: all three wirings agree state-by-state; compare the
        // fully decoded blocks per class and key assignment.
        let sigma = DensityOperator::new_unchecked(
            epr.clone(),
            RegisterLayout::new(vec![
                ("M".to_string(), self.dims.d_z),
                ("Mhat".to_string(), self.dims.d_m),
            ])?,
        )?;
        let runs = [
            self.run(&sigma, Wiring::Standard)?,
            self.run(&sigma, Wiring::Transposed)?,
            self.run(&sigma, Wiring::Delayed)?,
        ];
        for pair in runs.windows(2) {
            final_diff = final_diff.max(crate::qmatrix::max_entry_diff(
                pair[0].matrix(),
                pair[1].matrix(),
            ));
        }
        Ok(StageDiffs {
            encoded: enc_diff,
            tampered: tamper_diff,
            final_state: final_diff,
        })
    }

    /// Simulator `(p_same, p_epr, p_A, gamma_A)`, built message-free from
    /// independent runs on internal maximally entangled states via the
    /// delayed wiring.
    pub fn simulator(&self) -> Result<Simulator> {
        let epr = block::epr_zm(self.dims.d_z);
        let d_zm = self.dims.d_z * self.dims.d_m;
        let pi = block::epr_zm(self.dims.d_z);

        // theta_3^same on (Z, Mhat): delayed wiring, pre-decode, conditioned
        // on the same branch. No Clifford is involved yet, so this is
        // key-independent.
        let mut theta3_same = block::zeros(d_zm);
        let mut same_weight = 0.0;
        // (theta_4^tamp)_M: decoded tamp branch, marginal on M.
        let mut tamp_m = block::zeros(self.dims.d_z);
        let mut tamp_weight = 0.0;

        let base = block::base_block(&epr, &self.psi_w);
        let mut tampered_cache: HashMap<(u8, u8), CMatrix> = HashMap::new();
        for &(key, w) in &self.classes {
            let t = tampered_cache
                .entry((key.y, key.x_class))
                .or_insert_with(|| self.tamper_block(&base, key.y as u64, key.x_class as usize))
                .clone();
            if key.same {
                same_weight += w;
                block::axpy(
                    &mut theta3_same,
                    w,
                    &block::trace_keep(&t, &self.dims, &[AX_Z, AX_M]),
                );
            } else {
                tamp_weight += w;
                match self.ctx.params.mode.key {
                    KeyMode::Real => {
                        let dec =
                            self.decode_block(&t, Wiring::Delayed, key.kc as usize, key.kc_prime as usize)?;
                        block::axpy(&mut tamp_m, w, &block::trace_keep(&dec, &self.dims, &[AX_Z]));
                    }
                    KeyMode::Ideal => {
                        // Key-independent marginal on M after averaging over
                        // the fresh decode key.
                        for &(kcp, kpw) in &self.key_dist {
                            let dec = self.decode_block(&t, Wiring::Delayed, 0, kcp)?;
                            block::axpy(
                                &mut tamp_m,
                                w * kpw,
                                &block::trace_keep(&dec, &self.dims, &[AX_Z]),
                            );
                        }
                    }
                }
            }
        }

        let p_same = self.p_same;
        debug_assert!((same_weight - p_same).abs() < 1e-12);
        let p_epr = if p_same > 1e-15 {
            block::overlap(&pi, &theta3_same.scale(1.0 / p_same)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let p_a = p_same * p_epr;

        let uniform_m = CMatrix::identity(self.dims.d_z, self.dims.d_z)
            .scale(1.0 / self.dims.d_z as f64);
        let gamma = if p_a >= 1.0 - 1e-15 {
            uniform_m.clone()
        } else {
            let tamp_part = if tamp_weight > 1e-15 {
                tamp_m.scale(1.0 / tamp_weight)
            } else {
                uniform_m.clone()
            };
            (uniform_m.scale(p_same * (1.0 - p_epr)) + tamp_part.scale(1.0 - p_same))
                .scale(1.0 / (1.0 - p_a))
        };
        Ok(Simulator {
            p_same,
            p_epr,
            p_a,
            gamma_m: gamma,
        })
    }

    /// Full non-malleability check: run the experiment on `sigma`, build
    /// the message-free simulator, report the measured distance.
    pub fn nm_check(&self, sigma: &DensityOperator) -> Result<NmOutcome> {
        let eta = self.run(sigma, Wiring::Standard)?;
        let sim = self.simulator()?;
        let reference = sim.reference_state(sigma)?;
        let epsilon = crate::qmatrix::trace_distance(&eta, &reference)?;
        Ok(NmOutcome {
            eta,
            simulator: sim,
            epsilon_measured: epsilon,
        })
    }
}

/// Extract the `(M, Mhat)`-ordered matrix of a message state.
fn message_matrix(sigma: &DensityOperator, d: usize) -> Result<CMatrix> {
    let regs = sigma.layout().registers();
    if regs.len() != 2 || regs[0].1 != d || regs[1].1 != d {
        return Err(Error::ShapeMismatch(format!(
            "expected a [M({d}), Mhat({d})] message, got {:?}",
            regs
        )));
    }
    Ok(sigma.matrix().clone())
}

/// Stage-by-stage wiring differences.
#[derive(Debug, Clone, Copy)]
pub struct StageDiffs {
    pub encoded: f64,
    pub tampered: f64,
    pub final_state: f64,
}

impl StageDiffs {
    pub fn max(&self) -> f64 {
        self.encoded.max(self.tampered).max(self.final_state)
    }
}

/// The message-free simulator pair `(p_A, gamma_A)` with its factors.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub p_same: f64,
    pub p_epr: f64,
    pub p_a: f64,
    pub gamma_m: CMatrix,
}

impl Simulator {
    /// `p_A sigma_{M Mhat} + (1 - p_A) gamma_A ⊗ sigma_Mhat`.
    pub fn reference_state(&self, sigma: &DensityOperator) -> Result<DensityOperator> {
        let d = self.gamma_m.nrows();
        let sigma_zm = message_matrix(sigma, d)?;
        let sigma_mhat = {
            // Marginal on Mhat.
            let mut out = CMatrix::zeros(d, d);
            for m in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        out[(i, j)] += sigma_zm[(m * d + i, m * d + j)];
                    }
                }
            }
            out
        };
        let mix = sigma_zm.scale(self.p_a)
            + self.gamma_m.kronecker(&sigma_mhat).scale(1.0 - self.p_a);
        DensityOperator::new_unchecked(mix, sigma.layout().clone())
    }

    /// Byte-exact fingerprint for determinism checks.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        for v in [self.p_same, self.p_epr, self.p_a] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for z in self.gamma_m.iter() {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        hex::encode(crate::harness::fingerprint_digest(&bytes))
    }
}

/// Outcome of a non-malleability check.
#[derive(Debug, Clone)]
pub struct NmOutcome {
    pub eta: DensityOperator,
    pub simulator: Simulator,
    pub epsilon_measured: f64,
}

/// Rejection-sampling conditioning: applies the success Kraus of the
/// measurement that converts the maximally-entangled-run final state into
/// the `sigma_target` worst-case run, entirely on the purification register.
///
/// Returns `(success probability, conditioned state)`; the probability is
/// exactly `2^{-dmax(sigma_target || U_M)}`.
pub fn rejection_condition(
    sigma_target: &DensityOperator,
    avg_final: &DensityOperator,
) -> Result<(f64, DensityOperator)> {
    let d = sigma_target.dim();
    let regs = avg_final.layout().registers();
    if regs.len() != 2 || regs[0].1 != d || regs[1].1 != d {
        return Err(Error::ShapeMismatch(
            "final state must be [M, Mhat] with matching dimension".into(),
        ));
    }
    let uniform = DensityOperator::maximally_mixed(sigma_target.layout().clone());
    let k = crate::qmatrix::dmax(sigma_target, &uniform)?;
    if k.is_infinite() {
        return Err(Error::SupportViolation(
            "target not dominated by the uniform message".into(),
        ));
    }
    // Kraus on Mhat: B = (2^b sigma^T / 2^k)^{1/2}; B†B <= I.
    let scaled = sigma_target
        .matrix()
        .transpose()
        .scale(d as f64 / 2f64.powf(k));
    let b_op = crate::qmatrix::psd_sqrt(&scaled);
    let full = CMatrix::identity(d, d).kronecker(&b_op);
    let conditioned = &full * avg_final.matrix() * full.adjoint();
    let prob: f64 = conditioned.diagonal().iter().map(|z| z.re).sum();
    if prob < 1e-15 {
        return Err(Error::ZeroProbability);
    }
    Ok((
        prob,
        DensityOperator::new_unchecked(conditioned.scale(1.0 / prob), avg_final.layout().clone())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::adversary::{AdversarySpec, ClassicalTamper};
    use super::*;
    use crate::nmc::{CodeContext, CodeParams, Mode};
    use crate::qmatrix::{canonical_purification, trace_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn epr_message(b: usize) -> DensityOperator {
        let mixed =
            DensityOperator::maximally_mixed(RegisterLayout::single("M", 1 << b));
        canonical_purification(&mixed, "Mhat").unwrap().to_density()
    }

    fn random_message(rng: &mut ChaCha20Rng) -> DensityOperator {
        let mut g = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                g[(i, j)] = crate::qmatrix::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let psd = &g * g.adjoint();
        let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
        let m = DensityOperator::new(
            psd.scale(1.0 / tr),
            RegisterLayout::single("M", 2),
        )
        .unwrap();
        canonical_purification(&m, "Mhat").unwrap().to_density()
    }

    #[test]
    fn identity_adversary_returns_message() {
        let mut rng = ChaCha20Rng::seed_from_u64(193);
        for mode in [Mode::REAL, Mode::IDEAL_EXACT] {
            let ctx = CodeContext::new(CodeParams::desk_default(mode)).unwrap();
            let adv = AdversarySpec::Identity.build(14, 2, 1).unwrap();
            let exp = NmcExperiment::new(&ctx, &adv).unwrap();
            let sigma = random_message(&mut rng);
            let eta = exp.run(&sigma, Wiring::Standard).unwrap();
            assert!(trace_distance(&eta, &sigma).unwrap() < 1e-10);
            let outcome = exp.nm_check(&sigma).unwrap();
            assert!((outcome.simulator.p_same - 1.0).abs() < 1e-12);
            assert!((outcome.simulator.p_epr - 1.0).abs() < 1e-9);
            assert!(outcome.epsilon_measured < 1e-8);
        }
    }

    #[test]
    fn z_replacement_keeps_mhat_uniform() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let adv = AdversarySpec::SwapWithEntangledHalf.build(14, 2, 1).unwrap();
        let exp = NmcExperiment::new(&ctx, &adv).unwrap();
        let eta = exp.run(&epr_message(1), Wiring::Standard).unwrap();
        let mhat = crate::qmatrix::partial_trace(&eta, &["M"]).unwrap();
        let uniform = DensityOperator::maximally_mixed(RegisterLayout::single("Mhat", 2));
        assert!(trace_distance(&mhat, &uniform).unwrap() < 1e-10);
    }

    #[test]
    fn pauli_on_z_matches_twirl_closed_form() {
        // Ideal-key + exact-uniform mode, Pauli X on Z, trivial W, maximally
        // entangled message: eta = (4 (U ⊗ U) - psi_epr) / 3, the closed
        // form of the exhaustive 24-element Clifford sum.
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let adv = AdversarySpec::PauliZ {
            pauli: "X".into(),
        }
        .build(14, 2, 1)
        .unwrap();
        let exp = NmcExperiment::new(&ctx, &adv).unwrap();
        let eta = exp.run(&epr_message(1), Wiring::Standard).unwrap();

        // Exhaustive oracle: (1/24) sum_C (C† X C ⊗ I) psi (C† X C ⊗ I)†.
        let x = crate::pauli::PauliOp::parse("X").unwrap();
        let mut oracle = block::zeros(4);
        for c_ in &ctx.sc {
            let cd = c_.dense().unwrap();
            let conj = cd.adjoint() * x.dense().unwrap() * cd;
            let op = conj.kronecker(&CMatrix::identity(2, 2));
            oracle += &op * block::epr_zm(2) * op.adjoint();
        }
        oracle = oracle.scale(1.0 / ctx.sc.len() as f64);
        assert!(crate::qmatrix::max_entry_diff(eta.matrix(), &oracle) < 1e-10);

        // Closed form.
        let closed = (CMatrix::identity(4, 4).scale(0.25 * 4.0) - block::epr_zm(2)).scale(1.0 / 3.0);
        assert!(crate::qmatrix::max_entry_diff(eta.matrix(), &closed) < 1e-10);

        // The simulator sees p_same = 1, p_epr = 0, and the measured epsilon
        // saturates the 2/4^b residual exactly.
        let outcome = exp.nm_check(&epr_message(1)).unwrap();
        assert!((outcome.simulator.p_same - 1.0).abs() < 1e-12);
        assert!(outcome.simulator.p_epr.abs() < 1e-12);
        assert!((outcome.epsilon_measured - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_replace_both_has_single_coincidence() {
        // f == 37, g == 2: p_same = 2^{-(ell + delta ell)}.
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let adv = AdversarySpec::Classical {
            f: ClassicalTamper::Constant(37),
            g: ClassicalTamper::Constant(2),
        }
        .build(14, 2, 1)
        .unwrap();
        let exp = NmcExperiment::new(&ctx, &adv).unwrap();
        let expect = 1.0 / (1u64 << 16) as f64;
        assert!((exp.p_same - expect).abs() < 1e-18);
        let sim = exp.simulator().unwrap();
        assert!((sim.p_same - expect).abs() < 1e-18);
    }

    #[test]
    fn classical_adversaries_have_zero_epsilon_in_ideal_mode() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        for spec in [
            AdversarySpec::Classical {
                f: ClassicalTamper::Xor(0b1101),
                g: ClassicalTamper::Identity,
            },
            AdversarySpec::Classical {
                f: ClassicalTamper::SeededRandom { seed: 3 },
                g: ClassicalTamper::Xor(0b10),
            },
            AdversarySpec::ConstantReplaceX { value: 99 },
        ] {
            let adv = spec.build(14, 2, 1).unwrap();
            let exp = NmcExperiment::new(&ctx, &adv).unwrap();
            let outcome = exp.nm_check(&epr_message(1)).unwrap();
            assert!(
                outcome.epsilon_measured < 2.0 * 0.25 + 1e-8,
                "{}: {}",
                adv.name,
                outcome.epsilon_measured
            );
        }
    }

    #[test]
    fn simulator_is_message_free_and_deterministic() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let adv = AdversarySpec::HaarRandom { seed: 11 }.build(14, 2, 1).unwrap();
        let exp = NmcExperiment::new(&ctx, &adv).unwrap();
        let a = exp.simulator().unwrap();
        let b = exp.simulator().unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn transpose_and_delay_wirings_agree() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        for seed in [1u64, 2] {
            let adv = AdversarySpec::HaarRandom { seed }.build(14, 2, 1).unwrap();
            let exp = NmcExperiment::new(&ctx, &adv).unwrap();
            let diffs = exp.stage_differences().unwrap();
            assert!(diffs.max() < 1e-10, "stage diffs {diffs:?}");
        }
    }

    #[test]
    fn mhat_marginal_invariant_under_any_adversary() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(197);
        let sigma = random_message(&mut rng);
        let sigma_mhat = crate::qmatrix::partial_trace(&sigma, &["M"]).unwrap();
        for spec in [
            AdversarySpec::HaarRandom { seed: 21 },
            AdversarySpec::SwapWithEntangledHalf,
            AdversarySpec::PauliX { mask: 0b111 },
        ] {
            let adv = spec.build(14, 2, 1).unwrap();
            let exp = NmcExperiment::new(&ctx, &adv).unwrap();
            let eta = exp.run(&sigma, Wiring::Standard).unwrap();
            let mhat = crate::qmatrix::partial_trace(&eta, &["M"]).unwrap();
            assert!(trace_distance(&mhat, &sigma_mhat).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rejection_conditioning_reproduces_worst_case_run() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(199);
        let adv = AdversarySpec::HaarRandom { seed: 31 }.build(14, 2, 1).unwrap();
        let exp = NmcExperiment::new(&ctx, &adv).unwrap();
        let eta_avg = exp.run(&epr_message(1), Wiring::Standard).unwrap();

        // Uniform target: probability 1, state unchanged.
        let uniform = DensityOperator::maximally_mixed(RegisterLayout::single("M", 2));
        let (p, cond) = rejection_condition(&uniform, &eta_avg).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        assert!(trace_distance(&cond, &eta_avg).unwrap() < 1e-10);

        // Pure target: probability exactly 1/2 and the conditioned state
        // equals the direct worst-case run.
        let pure = DensityOperator::basis_state(RegisterLayout::single("M", 2), 0);
        let (p, cond) = rejection_condition(&pure, &eta_avg).unwrap();
        assert!((p - 0.5).abs() < 1e-10);
        let direct = exp
            .run(
                &canonical_purification(&pure, "Mhat").unwrap().to_density(),
                Wiring::Standard,
            )
            .unwrap();
        assert!(trace_distance(&cond, &direct).unwrap() < 1e-9);

        // Random mixed target.
        let msg = {
            let mut g = CMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    g[(i, j)] = crate::qmatrix::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            let psd = &g * g.adjoint();
            let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
            DensityOperator::new(psd.scale(1.0 / tr), RegisterLayout::single("M", 2)).unwrap()
        };
        let (p, cond) = rejection_condition(&msg, &eta_avg).unwrap();
        let uniform2 = DensityOperator::maximally_mixed(RegisterLayout::single("M", 2));
        let dmax = crate::qmatrix::dmax(&msg, &uniform2).unwrap();
        assert!((p - 2f64.powf(-dmax)).abs() < 1e-9);
        assert!(p >= 0.5 - 1e-9, "success probability at least 2^-b");
        let direct = exp
            .run(
                &canonical_purification(&msg, "Mhat").unwrap().to_density(),
                Wiring::Standard,
            )
            .unwrap();
        assert!(trace_distance(&cond, &direct).unwrap() < 1e-9);
    }

    #[test]
    fn avg_to_worst_factor_holds() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(211);
        for seed in 0..3u64 {
            let adv = AdversarySpec::HaarRandom { seed: 41 + seed }.build(14, 2, 1).unwrap();
            let exp = NmcExperiment::new(&ctx, &adv).unwrap();
            let avg = exp.nm_check(&epr_message(1)).unwrap();
            for _ in 0..2 {
                // Random pure message.
                let theta: f64 = rng.gen::<f64>() * std::f64::consts::PI;
                let phi: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                let mut v = crate::qmatrix::CVector::zeros(2);
                v[0] = crate::qmatrix::c((theta / 2.0).cos(), 0.0);
                v[1] = crate::qmatrix::c(
                    (theta / 2.0).sin() * phi.cos(),
                    (theta / 2.0).sin() * phi.sin(),
                );
                let pure = &v * v.adjoint();
                let msg =
                    DensityOperator::new(pure, RegisterLayout::single("M", 2)).unwrap();
                let worst = exp
                    .nm_check(&canonical_purification(&msg, "Mhat").unwrap().to_density())
                    .unwrap();
                assert!(
                    worst.epsilon_measured <= 2.0 * avg.epsilon_measured + 1e-8,
                    "worst {} vs avg {}",
                    worst.epsilon_measured,
                    avg.epsilon_measured
                );
            }
        }
    }
}
