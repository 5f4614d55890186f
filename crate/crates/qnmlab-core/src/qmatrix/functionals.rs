use super::{
    c, hermitian_eigen, hermitian_trace_norm, nuclear_norm, psd_sqrt, CMatrix, CVector,
    DensityOperator, PureState, RegisterLayout,
};
use crate::{Error, Result};

fn check_same_layout(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.layout() != b.layout() {
        return Err(Error::LayoutMismatch(
            "states live on different layouts".into(),
        ));
    }
    Ok(())
}

/// Trace distance `||rho - sigma||_1` (the un-halved 1-norm, so
/// orthogonal pure states sit at distance 2).
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    Ok(hermitian_trace_norm(&(rho.matrix() - sigma.matrix())))
}

/// Fidelity `F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    let prod = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
    Ok(nuclear_norm(&prod).clamp(0.0, 1.0))
}

/// Bures distance `sqrt(1 - F(rho, sigma))`.
pub fn bures_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Canonical purification `(rho^{1/2} ⊗ I) Σ_i |i>|i>` with the purifying
/// register appended under `new_label`.
pub fn canonical_purification(rho: &DensityOperator, new_label: &str) -> Result<PureState> {
    let dim = rho.dim();
    let layout = rho
        .layout()
        .concat(&RegisterLayout::single(new_label, dim))?;
    let root = psd_sqrt(rho.matrix());
    // (root ⊗ I) Σ_i |i>|i> has amplitude root[j, i] on |j>|i>.
    let mut v = CVector::zeros(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            v[j * dim + i] = root[(j, i)];
        }
    }
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    // Renormalize away the O(eps) drift from the matrix square root.
    let v = v.scale(1.0 / norm2.sqrt());
    PureState::new(v, layout)
}

/// Max-divergence `D_max(rho || sigma)`: log2 of the largest generalized
/// eigenvalue of `rho` on the support of `sigma`, or `+inf` when the support
/// of `rho` is not contained in the support of `sigma`.
pub fn dmax(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    let (vals, vecs) = hermitian_eigen(sigma.matrix());
    let dim = sigma.dim();
    let support_tol = 1e-12;
    // Inverse square root of sigma on its support, projector on the kernel.
    let mut inv_root = CMatrix::zeros(dim, dim);
    let mut kernel_proj = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let col = vecs.column(k);
        let outer = col * col.adjoint();
        if vals[k] > support_tol {
            inv_root += outer.scale(1.0 / vals[k].sqrt());
        } else {
            kernel_proj += outer;
        }
    }
    let leak = (&kernel_proj * rho.matrix() * &kernel_proj)
        .diagonal()
        .iter()
        .map(|z| z.re)
        .sum::<f64>();
    if leak > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let pinched = &inv_root * rho.matrix() * &inv_root;
    let max_eig = hermitian_eigen(&pinched)
        .0
        .into_iter()
        .fold(0.0_f64, f64::max);
    Ok(max_eig.max(1e-300).log2())
}

/// Two-sided bracket on the conditional min-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HminBracket {
    /// Certified lower bound (from a feasible operator `S` with
    /// `rho_XE <= I ⊗ S`).
    pub lower: f64,
    /// Certified upper bound (from a feasible guessing POVM).
    pub upper: f64,
}

impl HminBracket {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Exact conditional min-entropy for a classical-classical distribution:
/// `-log2 Σ_e max_x p(x, e)`.
pub fn hmin_classical(joint: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    if joint.is_empty() {
        return 0.0;
    }
    for e in 0..joint[0].len() {
        total += joint.iter().map(|row| row[e]).fold(0.0, f64::max);
    }
    -total.log2()
}

/// Conditional min-entropy `H_min(X|E)` of a c-q state, `X` classical.
///
/// When `E` is also classical in the computational basis the exact closed
/// form is used and the bracket is tight. Otherwise the value is bracketed:
/// the lower bound comes from a feasible `S` in `rho <= I_X ⊗ S`, the upper
/// bound from an explicit guessing measurement, both refined by alternating
/// updates until the gap falls below `tol` or the iteration cap is hit.
pub fn hmin(rho: &DensityOperator, x_label: &str, tol: f64) -> Result<HminBracket> {
    if !rho.is_classical_on(x_label, 1e-9)? {
        return Err(Error::NotClassical(x_label.to_string()));
    }
    let x_dim = rho.layout().dim_of(x_label)?;
    let side_layout = rho.layout().without(&[x_label])?;
    let e_dim = side_layout.total_dim();

    // Extract the ensemble {p(x) rho^x_E} by conditioning on X = x.
    let x_slot = rho.layout().index_of(x_label)?;
    let mut blocks: Vec<CMatrix> = vec![CMatrix::zeros(e_dim, e_dim); x_dim];
    let dim = rho.dim();
    let kept_slots: Vec<usize> = (0..rho.layout().registers().len())
        .filter(|&s| s != x_slot)
        .collect();
    for i in 0..dim {
        let fi = rho.layout().unflatten(i);
        let ei: Vec<usize> = kept_slots.iter().map(|&s| fi[s]).collect();
        let oi = side_layout.flatten(&ei);
        for j in 0..dim {
            let fj = rho.layout().unflatten(j);
            if fj[x_slot] != fi[x_slot] {
                continue;
            }
            let ej: Vec<usize> = kept_slots.iter().map(|&s| fj[s]).collect();
            blocks[fi[x_slot]][(oi, side_layout.flatten(&ej))] += rho.matrix()[(i, j)];
        }
    }

    // Classical side information: exact closed form.
    let e_classical = blocks.iter().all(|b| {
        (0..e_dim).all(|i| (0..e_dim).all(|j| i == j || b[(i, j)].norm() < 1e-11))
    });
    if e_classical {
        let joint: Vec<Vec<f64>> = blocks
            .iter()
            .map(|b| (0..e_dim).map(|i| b[(i, i)].re.max(0.0)).collect())
            .collect();
        let h = hmin_classical(&joint);
        return Ok(HminBracket { lower: h, upper: h });
    }

    // Quantum side information: bracket 2^{-Hmin} = min{Tr S : p(x) rho^x <= S}
    // = max guessing probability over POVMs (the dual). The measurement is
    // refined by the minimum-error discrimination fixed point
    //     W_x <- N^{-1/2} (A_x W_x A_x) N^{-1/2},  N = sum_y A_y W_y A_y,
    // which preserves completeness; the primal certificate comes from the
    // complementary-slackness candidate S = sym(sum_x W_x A_x), inflated to
    // feasibility.
    let eps = 1e-13;
    let inv_root_of = |m: &CMatrix| -> CMatrix {
        let (vals, vecs) = hermitian_eigen(m);
        let mut out = CMatrix::zeros(e_dim, e_dim);
        for k in 0..e_dim {
            let col = vecs.column(k);
            out += (col * col.adjoint()).scale(1.0 / vals[k].max(eps).sqrt());
        }
        out
    };
    // Inflation factor making `s` feasible: max_x lambda_max of A_x pinched
    // by s (operator domination on the joint support).
    let feasibility_inflation = |s: &CMatrix, blocks: &[CMatrix]| -> f64 {
        let padded = s + CMatrix::identity(e_dim, e_dim).scale(eps);
        let ir = inv_root_of(&padded);
        blocks
            .iter()
            .map(|b| {
                hermitian_eigen(&(&ir * b * &ir))
                    .0
                    .into_iter()
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };

    // Start from the pretty good measurement.
    let gram: CMatrix = blocks.iter().fold(CMatrix::zeros(e_dim, e_dim), |a, b| a + b)
        + CMatrix::identity(e_dim, e_dim).scale(eps);
    let gram_ir = inv_root_of(&gram);
    let mut povm: Vec<CMatrix> = blocks.iter().map(|b| &gram_ir * b * &gram_ir).collect();

    let mut best_guess: f64 = 0.0;
    let mut best_trace_s = f64::INFINITY;
    for _ in 0..300 {
        let guess: f64 = povm
            .iter()
            .zip(&blocks)
            .map(|(w_x, b)| (w_x * b).diagonal().iter().map(|z| z.re).sum::<f64>())
            .sum();
        best_guess = best_guess.max(guess);

        let mut s_cand = CMatrix::zeros(e_dim, e_dim);
        for (w_x, b) in povm.iter().zip(&blocks) {
            s_cand += w_x * b;
        }
        let s_cand = (&s_cand + s_cand.adjoint()).scale(0.5);
        let tr_cand: f64 = s_cand.diagonal().iter().map(|z| z.re).sum();
        let nu = feasibility_inflation(&s_cand, &blocks);
        best_trace_s = best_trace_s.min(nu * tr_cand);
        // The trivial feasible point sum_x A_x (trace 1) caps the bound.
        best_trace_s = best_trace_s.min(feasibility_inflation(
            &blocks.iter().fold(CMatrix::zeros(e_dim, e_dim), |a, b| a + b),
            &blocks,
        ));

        if best_trace_s - best_guess < tol * best_guess.max(1e-12) {
            break;
        }

        // Fixed-point measurement update.
        let mut n = CMatrix::zeros(e_dim, e_dim);
        for (w_x, b) in povm.iter().zip(&blocks) {
            n += b * w_x * b;
        }
        let n_ir = inv_root_of(&(n + CMatrix::identity(e_dim, e_dim).scale(eps)));
        povm = povm
            .iter()
            .zip(&blocks)
            .map(|(w_x, b)| &n_ir * (b * w_x * b) * &n_ir)
            .collect();
    }
    Ok(HminBracket {
        lower: -best_trace_s.log2(),
        upper: -best_guess.max(1e-300).log2(),
    })
}

/// Upper bound on the max-information `I_max(A:B)` via a documented trial
/// set of `sigma_B` candidates: the marginal `rho_B`, the maximally mixed
/// state, their midpoint, per-register `rho ⊗ U` factorizations of `rho_B`,
/// and `trial_count` seeded random perturbations of `rho_B`.
pub fn imax_upper(
    rho: &DensityOperator,
    a_labels: &[&str],
    trial_count: usize,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let b_labels: Vec<&str> = rho
        .layout()
        .registers()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| !a_labels.contains(l))
        .collect();
    let rho_a = super::partial_trace(rho, &b_labels)?;
    let rho_b = super::partial_trace(rho, a_labels)?;
    let b_layout = rho_b.layout().clone();

    let mut trials: Vec<DensityOperator> = vec![
        rho_b.clone(),
        DensityOperator::maximally_mixed(b_layout.clone()),
        DensityOperator::mix(&[
            (0.5, rho_b.clone()),
            (0.5, DensityOperator::maximally_mixed(b_layout.clone())),
        ])?,
    ];
    // Per-register factorizations: marginal on one B register ⊗ uniform rest.
    for (label, _) in b_layout.registers() {
        let others: Vec<&str> = b_layout
            .registers()
            .iter()
            .map(|(l, _)| l.as_str())
            .filter(|l| l != &label.as_str())
            .collect();
        if others.is_empty() {
            continue;
        }
        let marg = super::partial_trace(&rho_b, &others)?;
        let rest = DensityOperator::maximally_mixed(b_layout.without(&[label.as_str()])?);
        let prod = super::tensor(&marg, &rest)?.reorder(
            &b_layout
                .registers()
                .iter()
                .map(|(l, _)| l.as_str())
                .collect::<Vec<_>>(),
        )?;
        trials.push(prod);
    }
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x1a2b3c4d);
    let b_dim = b_layout.total_dim();
    for _ in 0..trial_count {
        let mut m = CMatrix::zeros(b_dim, b_dim);
        for i in 0..b_dim {
            for j in 0..b_dim {
                m[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let psd = &m * m.adjoint();
        let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
        let noise = DensityOperator::new_unchecked(psd.scale(1.0 / tr), b_layout.clone())?;
        trials.push(DensityOperator::mix(&[(0.7, rho_b.clone()), (0.3, noise)])?);
    }

    let mut best = f64::INFINITY;
    for sigma_b in &trials {
        let prod = super::tensor(&rho_a, sigma_b)?;
        // Align register order with rho's layout.
        let order: Vec<&str> = rho
            .layout()
            .registers()
            .iter()
            .map(|(l, _)| l.as_str())
            .collect();
        let prod = prod.reorder(&order)?;
        let d = dmax(rho, &prod)?;
        best = best.min(d);
    }
    Ok(best)
}

/// Uhlmann isometry: given purifications `|rho>_{AB}` and `|sigma>_{AC}`,
/// returns the isometry `V : C -> B` (as a `dim(B) x dim(C)` matrix) that
/// maximizes the overlap of `(I_A ⊗ V)|sigma>` with `|rho>`, achieving
/// `Delta_B((I⊗V)|sigma>, |rho>) = Delta_B(rho_A, sigma_A)`.
///
/// Built from the polar decomposition (via SVD) of the cross-overlap of the
/// two purifications. Errors when `dim(C) < rank(sigma_A)` would make the
/// isometry condition unsatisfiable, i.e. when `dim(C) > dim(B)`.
pub fn uhlmann_isometry(
    rho_ab: &PureState,
    a_labels: &[&str],
    sigma_ac: &PureState,
) -> Result<CMatrix> {
    // Reshape both purifications as matrices with the A system first.
    let reshape = |psi: &PureState| -> Result<(CMatrix, usize)> {
        let a_dim: usize = a_labels
            .iter()
            .map(|l| psi.layout().dim_of(l))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .product();
        let rest_dim = psi.layout().total_dim() / a_dim;
        // Reorder so A registers come first in the given order.
        let mut order: Vec<&str> = a_labels.to_vec();
        for (l, _) in psi.layout().registers() {
            if !a_labels.contains(&l.as_str()) {
                order.push(l);
            }
        }
        let rho = psi.to_density().reorder(&order)?;
        // Recover the state vector of the reordered pure state.
        let m = rho.matrix();
        let dim = m.nrows();
        let mut col = 0;
        let mut best = 0.0;
        for i in 0..dim {
            if m[(i, i)].re > best {
                best = m[(i, i)].re;
                col = i;
            }
        }
        let norm = m[(col, col)].re.sqrt();
        let v = CVector::from_iterator(dim, (0..dim).map(|i| m[(i, col)] / norm));
        let mut mat = CMatrix::zeros(a_dim, rest_dim);
        for a in 0..a_dim {
            for r in 0..rest_dim {
                mat[(a, r)] = v[a * rest_dim + r];
            }
        }
        Ok((mat, rest_dim))
    };
    let (r_mat, b_dim) = reshape(rho_ab)?;
    let (s_mat, c_dim) = reshape(sigma_ac)?;
    if c_dim > b_dim {
        return Err(Error::DimensionCap(format!(
            "purifying register C (dim {c_dim}) larger than B (dim {b_dim})"
        )));
    }
    // Cross overlap O: C -> B with O = R^T conj(S); optimal V = W_B W_C†
    // from the SVD of O (the unitary part of the polar decomposition).
    let overlap = r_mat.transpose() * s_mat.map(|z| z.conj());
    let svd = overlap.svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    Ok(u * vt)
}
