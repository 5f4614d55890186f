//! Group-averaged conjugations (twirls) and the exact identities they
//! satisfy, evaluated by exhaustive sums over the subgroup.

use super::pauli_op::PauliOp;
use crate::qmatrix::{
    embed_operator, kron, CMatrix, CVector, DensityOperator, RegisterLayout,
};
use crate::{Error, Result};

/// Average `(1/|G|) sum_G (G ⊗ I) M (G† ⊗ I)` with the group acting on the
/// named registers of `rho`, identity elsewhere.
pub fn group_twirl(
    rho: &DensityOperator,
    labels: &[&str],
    group: &[CMatrix],
) -> Result<DensityOperator> {
    if group.is_empty() {
        return Err(Error::InvalidParams("empty twirl group".into()));
    }
    let dim = rho.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    // Fixed summation order for bit-reproducibility.
    for g in group {
        let full = embed_operator(rho.layout(), labels, g)?;
        acc += &full * rho.matrix() * full.adjoint();
    }
    DensityOperator::new_unchecked(acc.scale(1.0 / group.len() as f64), rho.layout().clone())
}

/// Which group a cross-term twirl sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwirlGroup {
    /// All 4^n phaseless Paulis.
    Pauli,
    /// The special Clifford subgroup.
    SubClifford,
}

fn group_elements(group: TwirlGroup, n: usize) -> Result<Vec<CMatrix>> {
    Ok(match group {
        TwirlGroup::Pauli => PauliOp::enumerate_classes(n)
            .map(|p| p.dense())
            .collect::<Result<_>>()?,
        TwirlGroup::SubClifford => super::subclifford::sc_enumerate(n)?
            .iter()
            .map(|c_| c_.dense().map(|m| m.clone()))
            .collect::<Result<_>>()?,
    })
}

/// Cross-term twirl `sum_C (C† P C) rho (C† Q† C)`, normalized by the group
/// size. Zero whenever `P != Q` (as Pauli classes).
pub fn twirl_cross_term(
    p: &PauliOp,
    q: &PauliOp,
    rho: &CMatrix,
    group: TwirlGroup,
) -> Result<CMatrix> {
    let n = p.n();
    let dim = 1usize << n;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::ShapeMismatch("state dimension vs Pauli size".into()));
    }
    let elements = group_elements(group, n)?;
    let (pd, qd) = (p.dense()?, q.dense()?);
    let mut acc = CMatrix::zeros(dim, dim);
    for g in &elements {
        let left = g.adjoint() * &pd * g;
        let right = g.adjoint() * qd.adjoint() * g;
        acc += left * rho * right;
    }
    Ok(acc.scale(1.0 / elements.len() as f64))
}

/// Modified cross-term twirl
/// `sum_C (I ⊗ C† P C) rho_{AhatA} (I ⊗ C† Q C)`, normalized.
/// Zero whenever `P != Q` and `rho` is a canonical purification on
/// `(Ahat, A)`.
pub fn twirl_cross_term_modified(
    p: &PauliOp,
    q: &PauliOp,
    rho_hat_a: &CMatrix,
    group: TwirlGroup,
) -> Result<CMatrix> {
    let n = p.n();
    let dim = 1usize << n;
    if rho_hat_a.nrows() != dim * dim {
        return Err(Error::ShapeMismatch("expected a two-register state".into()));
    }
    let elements = group_elements(group, n)?;
    let (pd, qd) = (p.dense()?, q.dense()?);
    let id = CMatrix::identity(dim, dim);
    let mut acc = CMatrix::zeros(dim * dim, dim * dim);
    for g in &elements {
        let left = kron(&id, &(g.adjoint() * &pd * g));
        let right = kron(&id, &(g.adjoint() * &qd * g));
        acc += left * rho_hat_a * right;
    }
    Ok(acc.scale(1.0 / elements.len() as f64))
}

/// Maximally entangled projector `|psi><psi|` on `(Ahat, A)` with
/// `|psi> = 2^{-b/2} sum_i |i>|i>`.
pub fn epr_projector(dim: usize) -> CMatrix {
    let mut v = CVector::zeros(dim * dim);
    for i in 0..dim {
        v[i * dim + i] = crate::qmatrix::c(1.0 / (dim as f64).sqrt(), 0.0);
    }
    &v * v.adjoint()
}

/// Result of the EPR twirl `(1/|SC|) sum_C (C^T ⊗ C†) rho (C^T ⊗ C†)†`
/// on a two-register state `rho_{AhatA}` of equal dimensions.
#[derive(Debug, Clone)]
pub struct EprTwirl {
    /// `Tr(Pi rho)` with `Pi` the maximally entangled projector.
    pub p_epr: f64,
    /// The exact twirled state.
    pub twirled: DensityOperator,
    /// Residual of the twirled state against the closed form
    /// `p_epr psi + (1 - p_epr)(4^b (U ⊗ U) - psi) / (4^b - 1)`
    /// (max entry difference).
    pub closed_form_residual: f64,
    /// Trace distance of the twirled state to
    /// `p_epr psi + (1 - p_epr)(U ⊗ U)`, bounded by `2 / 4^b`.
    pub product_mix_distance: f64,
}

/// Twirl a `(Ahat, A)` state by `{C^T ⊗ C† : C in SC}` and decompose it
/// against the maximally entangled projector.
pub fn epr_twirl_decomposition(rho: &DensityOperator) -> Result<EprTwirl> {
    let regs = rho.layout().registers();
    if regs.len() != 2 || regs[0].1 != regs[1].1 {
        return Err(Error::LayoutMismatch(
            "EPR twirl needs two equal-dimension registers".into(),
        ));
    }
    let dim = regs[0].1;
    if !dim.is_power_of_two() {
        return Err(Error::InvalidParams("register dimension must be 2^b".into()));
    }
    let b = dim.trailing_zeros() as usize;
    let sc = super::subclifford::sc_enumerate(b)?;
    let total = dim * dim;
    let mut acc = CMatrix::zeros(total, total);
    for c_ in &sc {
        let cd = c_.dense()?;
        let op = kron(&cd.transpose(), &cd.adjoint());
        acc += &op * rho.matrix() * op.adjoint();
    }
    let twirled =
        DensityOperator::new_unchecked(acc.scale(1.0 / sc.len() as f64), rho.layout().clone())?;

    let pi = epr_projector(dim);
    let p_epr = (&pi * rho.matrix()).diagonal().iter().map(|z| z.re).sum::<f64>();

    let pauli_count = (dim * dim) as f64;
    let uu = CMatrix::identity(total, total).scale(1.0 / total as f64);
    let complement = (uu.scale(pauli_count) - &pi).scale(1.0 / (pauli_count - 1.0));
    let closed_form = pi.scale(p_epr) + complement.scale(1.0 - p_epr);
    let closed_form_residual = crate::qmatrix::max_entry_diff(twirled.matrix(), &closed_form);

    let product_mix = DensityOperator::new_unchecked(
        pi.scale(p_epr) + uu.scale(1.0 - p_epr),
        rho.layout().clone(),
    )?;
    let product_mix_distance = crate::qmatrix::trace_distance(&twirled, &product_mix)?;

    Ok(EprTwirl {
        p_epr,
        twirled,
        closed_form_residual,
        product_mix_distance,
    })
}

/// Verification report for the full algebraic identity suite at a given
/// qubit count; every residual is a Frobenius or max-entry norm that must
/// sit below `1e-9`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AlgebraReport {
    pub qubits: usize,
    pub subgroup_size: usize,
    pub pauli_twirl_residual: f64,
    pub clifford_twirl_residual: f64,
    pub modified_twirl_residual: f64,
    pub pauli_conjugation_residual: f64,
    pub clifford_conjugation_residual: f64,
    pub pauli_one_design_residual: f64,
    pub clifford_one_design_residual: f64,
    pub epr_twirl_closed_form_residual: f64,
    pub epr_twirl_product_bound_ok: bool,
    pub orbit_counts_ok: bool,
    pub sampler_distance: f64,
}

impl AlgebraReport {
    pub fn all_pass(&self) -> bool {
        let tol = 1e-9;
        self.pauli_twirl_residual < tol
            && self.clifford_twirl_residual < tol
            && self.modified_twirl_residual < tol
            && self.pauli_conjugation_residual < tol
            && self.clifford_conjugation_residual < tol
            && self.pauli_one_design_residual < tol
            && self.clifford_one_design_residual < tol
            && self.epr_twirl_closed_form_residual < tol
            && self.epr_twirl_product_bound_ok
            && self.orbit_counts_ok
            && self.sampler_distance <= 0.25 + 1e-12
    }
}

/// Run the whole identity suite by exhaustive group sums.
pub fn verify_algebra(b: usize, rng: &mut impl rand::Rng) -> Result<AlgebraReport> {
    use crate::qmatrix::frobenius_norm;
    let dim = 1usize << b;
    let sc = super::subclifford::sc_enumerate(b)?;

    let random_density = |rng: &mut dyn rand::RngCore, d: usize| -> CMatrix {
        let mut g = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = crate::qmatrix::c(
                    rand::Rng::gen::<f64>(rng) - 0.5,
                    rand::Rng::gen::<f64>(rng) - 0.5,
                );
            }
        }
        let psd = &g * g.adjoint();
        let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
        psd.scale(1.0 / tr)
    };

    // Cross-term twirls over all P != Q pairs.
    let mut pauli_twirl_residual: f64 = 0.0;
    let mut clifford_twirl_residual: f64 = 0.0;
    let mut modified_twirl_residual: f64 = 0.0;
    let rho = random_density(rng, dim);
    let pure = {
        // Random two-register pure state for the modified twirl.
        let mut v = CVector::zeros(dim * dim);
        for i in 0..dim * dim {
            v[i] = crate::qmatrix::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let n = v.norm();
        let v = v.scale(1.0 / n);
        &v * v.adjoint()
    };
    // The modified twirl statement is for canonical purifications; a random
    // pure state on (Ahat, A) is one (of its own A-marginal).
    for p in PauliOp::enumerate_classes(b) {
        for q in PauliOp::enumerate_classes(b) {
            if p.same_class(&q) {
                continue;
            }
            pauli_twirl_residual = pauli_twirl_residual
                .max(frobenius_norm(&twirl_cross_term(&p, &q, &rho, TwirlGroup::Pauli)?));
            clifford_twirl_residual = clifford_twirl_residual.max(frobenius_norm(
                &twirl_cross_term(&p, &q, &rho, TwirlGroup::SubClifford)?,
            ));
            modified_twirl_residual = modified_twirl_residual.max(frobenius_norm(
                &twirl_cross_term_modified(&p, &q, &pure, TwirlGroup::SubClifford)?,
            ));
        }
    }

    // Uniform conjugation: identity input stays identity, non-identity
    // averages to zero, for both groups.
    let mut pauli_conjugation_residual: f64 = 0.0;
    let mut clifford_conjugation_residual: f64 = 0.0;
    for p in PauliOp::enumerate_classes(b) {
        let pd = p.dense()?;
        let mut pauli_avg = CMatrix::zeros(dim, dim);
        for q in PauliOp::enumerate_classes(b) {
            let qd = q.dense()?;
            pauli_avg += &qd * &pd * qd.adjoint();
        }
        pauli_avg = pauli_avg.scale(1.0 / (dim * dim) as f64);
        let mut sc_avg = CMatrix::zeros(dim, dim);
        for c_ in &sc {
            let cd = c_.dense()?;
            sc_avg += cd * &pd * cd.adjoint();
        }
        sc_avg = sc_avg.scale(1.0 / sc.len() as f64);
        let expect = if p.is_identity_class() {
            CMatrix::identity(dim, dim)
        } else {
            CMatrix::zeros(dim, dim)
        };
        pauli_conjugation_residual =
            pauli_conjugation_residual.max(frobenius_norm(&(pauli_avg - &expect)));
        clifford_conjugation_residual =
            clifford_conjugation_residual.max(frobenius_norm(&(sc_avg - &expect)));
    }

    // 1-design statements on a random two-register state, plus the fixed
    // point U ⊗ rho_B.
    let layout = RegisterLayout::new(vec![("A", dim), ("B", dim)])?;
    let rho_ab = {
        let m = random_density(rng, dim * dim);
        DensityOperator::new_unchecked(m, layout.clone())?
    };
    let pauli_group: Vec<CMatrix> = PauliOp::enumerate_classes(b)
        .map(|p| p.dense())
        .collect::<Result<_>>()?;
    let sc_group: Vec<CMatrix> = sc.iter().map(|c_| c_.dense().map(|m| m.clone())).collect::<Result<_>>()?;
    let rho_b = crate::qmatrix::partial_trace(&rho_ab, &["A"])?;
    let target = crate::qmatrix::tensor(
        &DensityOperator::maximally_mixed(RegisterLayout::single("A", dim)),
        &rho_b,
    )?;
    let pauli_twirled = group_twirl(&rho_ab, &["A"], &pauli_group)?;
    let sc_twirled = group_twirl(&rho_ab, &["A"], &sc_group)?;
    let pauli_one_design_residual =
        crate::qmatrix::max_entry_diff(pauli_twirled.matrix(), target.matrix());
    let mut clifford_one_design_residual =
        crate::qmatrix::max_entry_diff(sc_twirled.matrix(), target.matrix());
    // Fixed point check.
    let fixed = group_twirl(&target, &["A"], &sc_group)?;
    clifford_one_design_residual = clifford_one_design_residual
        .max(crate::qmatrix::max_entry_diff(fixed.matrix(), target.matrix()));

    // EPR twirl decomposition on a random (Ahat, A) state.
    let epr_layout = RegisterLayout::new(vec![("Ahat", dim), ("A", dim)])?;
    let epr_in = DensityOperator::new_unchecked(random_density(rng, dim * dim), epr_layout)?;
    let epr = epr_twirl_decomposition(&epr_in)?;
    let epr_bound_ok = epr.product_mix_distance <= 2.0 / (dim * dim) as f64 + 1e-9;

    // Orbit uniformity and sampler distance.
    let orbit_counts_ok = {
        let mut ok = true;
        for p in PauliOp::enumerate_classes(b).filter(|p| !p.is_identity_class()) {
            let mut counts = std::collections::HashMap::new();
            for c_ in &sc {
                *counts
                    .entry(c_.inverse().conjugate(&p).label())
                    .or_insert(0usize) += 1;
            }
            ok &= counts.len() == dim * dim - 1
                && counts.values().all(|&v| v == sc.len() / (dim * dim - 1));
        }
        ok
    };
    let sampler_distance = {
        let mut counts = vec![0usize; sc.len()];
        for key in 0..(1u64 << (5 * b)) {
            counts[super::subclifford::sc_samp_index(key, b)] += 1;
        }
        let total = (1u64 << (5 * b)) as f64;
        counts
            .iter()
            .map(|&c_| (c_ as f64 / total - 1.0 / sc.len() as f64).abs())
            .sum::<f64>()
            / 2.0
    };

    Ok(AlgebraReport {
        qubits: b,
        subgroup_size: sc.len(),
        pauli_twirl_residual,
        clifford_twirl_residual,
        modified_twirl_residual,
        pauli_conjugation_residual,
        clifford_conjugation_residual,
        pauli_one_design_residual,
        clifford_one_design_residual,
        epr_twirl_closed_form_residual: epr.closed_form_residual,
        epr_twirl_product_bound_ok: epr_bound_ok,
        orbit_counts_ok,
        sampler_distance,
    })
}
