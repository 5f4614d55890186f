use super::{c, hermitian_eigen, kron, CMatrix, CVector, RegisterLayout, VALIDITY_TOL};
use crate::{Error, Result};
use num_complex::Complex64;

/// Density operator over a labeled register layout.
///
/// Validity (Hermitian, unit trace, PSD up to `1e-10`) is checked on
/// construction; use [`DensityOperator::new_unchecked`] for intermediate
/// states inside long pipelines.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
    layout: RegisterLayout,
}

/// Pure state over a labeled register layout (unit vector to `1e-12`).
#[derive(Debug, Clone)]
pub struct PureState {
    vector: CVector,
    layout: RegisterLayout,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, layout: RegisterLayout) -> Result<Self> {
        let state = Self::new_unchecked(matrix, layout)?;
        state.validate()?;
        Ok(state)
    }

    /// Construct checking only the dimension, not positivity.
    pub fn new_unchecked(matrix: CMatrix, layout: RegisterLayout) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != layout.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "matrix is {}x{}, layout dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.total_dim()
            )));
        }
        Ok(Self { matrix, layout })
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        let herm_err = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > VALIDITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |M - M†| = {herm_err:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > VALIDITY_TOL || tr.im.abs() > VALIDITY_TOL {
            return Err(Error::InvalidState(format!("trace = {tr} != 1")));
        }
        let min_eig = hermitian_eigen(m).0.into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -VALIDITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Computational basis state |index><index|.
    pub fn basis_state(layout: RegisterLayout, index: usize) -> Self {
        let dim = layout.total_dim();
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = c(1.0, 0.0);
        Self { matrix: m, layout }
    }

    /// Maximally mixed state on the layout.
    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let dim = layout.total_dim();
        let m = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self { matrix: m, layout }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diagonal().iter().sum()
    }

    /// Restore exact Hermiticity after a long channel chain.
    pub fn resymmetrize(&self) -> Self {
        Self {
            matrix: (&self.matrix + self.matrix.adjoint()).scale(0.5),
            layout: self.layout.clone(),
        }
    }

    /// Conjugate by a unitary acting on the named registers (in the order
    /// given), identity elsewhere.
    pub fn apply_unitary_on(&self, labels: &[&str], u: &CMatrix) -> Result<Self> {
        let full = embed_operator(&self.layout, labels, u)?;
        Ok(Self {
            matrix: &full * &self.matrix * full.adjoint(),
            layout: self.layout.clone(),
        })
    }

    /// Convex mixture of states over a shared layout.
    pub fn mix(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParams("empty mixture".into()))?;
        let mut m = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (p, rho) in parts {
            if rho.layout != first.1.layout {
                return Err(Error::LayoutMismatch("mixture layout mismatch".into()));
            }
            m += rho.matrix.scale(*p);
        }
        Ok(Self {
            matrix: m,
            layout: first.1.layout.clone(),
        })
    }

    /// Reorder registers to the given label order (must be a permutation of
    /// the current labels).
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        let perm = reorder_permutation(&self.layout, order)?;
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(perm[i], perm[j])] = self.matrix[(i, j)];
            }
        }
        let new_layout = RegisterLayout::new(
            order
                .iter()
                .map(|l| (l.to_string(), self.layout.dim_of(l).unwrap()))
                .collect(),
        )?;
        Ok(Self {
            matrix: m,
            layout: new_layout,
        })
    }

    /// Dephase (measure without reading) the named register in the
    /// computational basis.
    pub fn measure_register(&self, label: &str) -> Result<Self> {
        let slot = self.layout.index_of(label)?;
        let dim = self.dim();
        let mut m = self.matrix.clone();
        for i in 0..dim {
            for j in 0..dim {
                if self.layout.unflatten(i)[slot] != self.layout.unflatten(j)[slot] {
                    m[(i, j)] = c(0.0, 0.0);
                }
            }
        }
        Ok(Self {
            matrix: m,
            layout: self.layout.clone(),
        })
    }

    /// Whether the named register is classical (diagonal blocks only) to the
    /// given tolerance.
    pub fn is_classical_on(&self, label: &str, tol: f64) -> Result<bool> {
        let slot = self.layout.index_of(label)?;
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if self.layout.unflatten(i)[slot] != self.layout.unflatten(j)[slot]
                    && self.matrix[(i, j)].norm() > tol
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Debug dump as row-major JSON arrays of `[re, im]` pairs.
    pub fn to_json_matrix(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im])
                    .collect()
            })
            .collect();
        serde_json::json!(rows)
    }
}

impl PureState {
    pub fn new(vector: CVector, layout: RegisterLayout) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "vector length {} vs layout dimension {}",
                vector.len(),
                layout.total_dim()
            )));
        }
        let norm2: f64 = vector.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("squared norm {norm2} != 1")));
        }
        Ok(Self { vector, layout })
    }

    pub fn basis_state(layout: RegisterLayout, index: usize) -> Self {
        let dim = layout.total_dim();
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self { vector: v, layout }
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.vector * self.vector.adjoint(),
            layout: self.layout.clone(),
        }
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(PureState {
            vector: self.vector.kronecker(&other.vector),
            layout,
        })
    }

    pub fn apply_unitary_on(&self, labels: &[&str], u: &CMatrix) -> Result<PureState> {
        let full = embed_operator(&self.layout, labels, u)?;
        Ok(PureState {
            vector: &full * &self.vector,
            layout: self.layout.clone(),
        })
    }

    /// Apply an operator on the named registers without materializing the
    /// embedded matrix: amplitudes are gathered per rest-index. Suited to
    /// large vectors with small per-register operators.
    pub fn apply_sparse_on(&self, labels: &[&str], op: &CMatrix) -> Result<PureState> {
        let (sub_index, _) = self.register_split(labels)?;
        let sub_dim: usize = labels
            .iter()
            .map(|l| self.layout.dim_of(l))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .product();
        let dim = self.vector.len();
        if op.ncols() != sub_dim || op.nrows() != sub_dim {
            return Err(Error::LayoutMismatch(format!(
                "operator is {}x{}, registers have dimension {sub_dim}",
                op.nrows(),
                op.ncols()
            )));
        }
        let (_, recombine) = self.register_split(labels)?;
        let _ = sub_index;
        let rest_count = dim / sub_dim;
        let mut out = CVector::zeros(dim);
        let mut gathered = vec![crate::qmatrix::c(0.0, 0.0); sub_dim];
        let mut positions = vec![0usize; sub_dim];
        for r in 0..rest_count {
            let mut any = false;
            for s in 0..sub_dim {
                let idx = recombine(s, r);
                positions[s] = idx;
                gathered[s] = self.vector[idx];
                any |= gathered[s].norm_sqr() != 0.0;
            }
            if !any {
                continue;
            }
            for s_new in 0..sub_dim {
                let mut acc = crate::qmatrix::c(0.0, 0.0);
                for (s_old, g) in gathered.iter().enumerate() {
                    if g.norm_sqr() != 0.0 {
                        acc += op[(s_new, s_old)] * g;
                    }
                }
                out[positions[s_new]] = acc;
            }
        }
        Ok(PureState {
            vector: out,
            layout: self.layout.clone(),
        })
    }

    /// Permute computational-basis values on the named registers:
    /// `|v> -> |perm[v]>` on the joint sub-index.
    pub fn permute_basis_on(&self, labels: &[&str], perm: &[usize]) -> Result<PureState> {
        let (sub_index, recombine) = self.register_split(labels)?;
        let dim = self.vector.len();
        let mut out = CVector::zeros(dim);
        for idx in 0..dim {
            if self.vector[idx].norm_sqr() == 0.0 {
                continue;
            }
            let (s, r) = sub_index(idx);
            out[recombine(perm[s], r)] += self.vector[idx];
        }
        Ok(PureState {
            vector: out,
            layout: self.layout.clone(),
        })
    }

    /// Keep only amplitudes whose sub-index over `labels` lies in `allowed`
    /// (a projective selection); returns the squared norm kept and the
    /// unnormalized projected state.
    pub fn project_on(&self, labels: &[&str], allowed: &[usize]) -> Result<(f64, PureState)> {
        let (sub_index, _) = self.register_split(labels)?;
        let mut out = self.vector.clone();
        let mut kept = 0.0;
        for idx in 0..out.len() {
            let (s, _) = sub_index(idx);
            if allowed.contains(&s) {
                kept += out[idx].norm_sqr();
            } else {
                out[idx] = crate::qmatrix::c(0.0, 0.0);
            }
        }
        Ok((
            kept,
            PureState {
                vector: out,
                layout: self.layout.clone(),
            },
        ))
    }

    /// Index helpers for a register subset: returns `(split, recombine)`
    /// closures over flat indices, allocation-free per call.
    #[allow(clippy::type_complexity)]
    fn register_split(
        &self,
        labels: &[&str],
    ) -> Result<(
        impl Fn(usize) -> (usize, usize),
        impl Fn(usize, usize) -> usize,
    )> {
        let slots: Vec<usize> = labels
            .iter()
            .map(|l| self.layout.index_of(l))
            .collect::<Result<_>>()?;
        let dims: Vec<usize> = self.layout.registers().iter().map(|(_, d)| *d).collect();
        // Flat-index strides per register (rightmost fastest).
        let mut strides = vec![1usize; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }
        let in_sub: Vec<bool> = (0..dims.len()).map(|s| slots.contains(&s)).collect();
        let rest_order: Vec<usize> = (0..dims.len()).filter(|s| !in_sub[*s]).collect();
        let slots_c = slots.clone();
        let dims_c = dims.clone();
        let strides_c = strides.clone();
        let rest_c = rest_order.clone();
        let split = move |idx: usize| -> (usize, usize) {
            let mut sub = 0usize;
            for &s in &slots_c {
                sub = sub * dims_c[s] + (idx / strides_c[s]) % dims_c[s];
            }
            let mut rest = 0usize;
            for &s in &rest_c {
                rest = rest * dims_c[s] + (idx / strides_c[s]) % dims_c[s];
            }
            (sub, rest)
        };
        let recombine = move |sub: usize, rest: usize| -> usize {
            let mut idx = 0usize;
            let mut sv = sub;
            for &s in slots.iter().rev() {
                idx += (sv % dims[s]) * strides[s];
                sv /= dims[s];
            }
            let mut rv = rest;
            for &s in rest_order.iter().rev() {
                idx += (rv % dims[s]) * strides[s];
                rv /= dims[s];
            }
            idx
        };
        Ok((split, recombine))
    }
}

/// Tensor product of density operators with disjoint register labels.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let layout = a.layout.concat(&b.layout)?;
    Ok(DensityOperator {
        matrix: kron(&a.matrix, &b.matrix),
        layout,
    })
}

/// Partial trace over the named registers.
pub fn partial_trace(rho: &DensityOperator, traced: &[&str]) -> Result<DensityOperator> {
    let kept_layout = rho.layout.without(traced)?;
    let slots_traced: Vec<usize> = traced
        .iter()
        .map(|l| rho.layout.index_of(l))
        .collect::<Result<_>>()?;
    let kept_slots: Vec<usize> = (0..rho.layout.registers().len())
        .filter(|s| !slots_traced.contains(s))
        .collect();

    let out_dim = kept_layout.total_dim();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    let dim = rho.dim();
    // Accumulate <i|rho|j> into the kept-index block when traced indices match.
    for i in 0..dim {
        let fi = rho.layout.unflatten(i);
        let kept_i: Vec<usize> = kept_slots.iter().map(|&s| fi[s]).collect();
        let oi = kept_layout.flatten(&kept_i);
        for j in 0..dim {
            let fj = rho.layout.unflatten(j);
            if slots_traced.iter().any(|&s| fi[s] != fj[s]) {
                continue;
            }
            let kept_j: Vec<usize> = kept_slots.iter().map(|&s| fj[s]).collect();
            out[(oi, kept_layout.flatten(&kept_j))] += rho.matrix[(i, j)];
        }
    }
    Ok(DensityOperator {
        matrix: out,
        layout: kept_layout,
    })
}

/// Partial trace of a pure state, returning the kept-register density.
pub fn pure_partial_trace(psi: &PureState, traced: &[&str]) -> Result<DensityOperator> {
    let keep: Vec<&str> = psi
        .layout()
        .registers()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| !traced.contains(l))
        .collect();
    for t in traced {
        psi.layout().index_of(t)?;
    }
    pure_state_marginal(psi, &keep)
}

/// Marginal of a pure state on the named registers (in the given order),
/// computed without materializing the full density matrix: amplitudes are
/// bucketed by the traced-register index and combined as outer products of
/// the kept slices.
pub fn pure_state_marginal(psi: &PureState, keep: &[&str]) -> Result<DensityOperator> {
    let layout = psi.layout();
    let keep_layout = RegisterLayout::new(
        keep.iter()
            .map(|l| Ok((l.to_string(), layout.dim_of(l)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let traced_labels: Vec<&str> = layout
        .registers()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| !keep.contains(l))
        .collect();
    let traced_layout = RegisterLayout::new(
        traced_labels
            .iter()
            .map(|l| Ok((l.to_string(), layout.dim_of(l)?)))
            .collect::<Result<Vec<_>>>()?,
    )
    .unwrap_or_else(|_| RegisterLayout::new(Vec::<(String, usize)>::new()).unwrap());

    let keep_slots: Vec<usize> = keep
        .iter()
        .map(|l| layout.index_of(l))
        .collect::<Result<_>>()?;
    let traced_slots: Vec<usize> = traced_labels
        .iter()
        .map(|l| layout.index_of(l))
        .collect::<Result<_>>()?;
    let dims: Vec<usize> = layout.registers().iter().map(|(_, d)| *d).collect();
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }

    let keep_dim = keep_layout.total_dim();
    let traced_dim = traced_layout.total_dim().max(1);
    // Bucket amplitudes: slices[t][k] = amplitude at (kept k, traced t).
    let mut slices = vec![CVector::zeros(keep_dim); traced_dim];
    for (idx, z) in psi.vector().iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        let mut ki = 0usize;
        for &s in &keep_slots {
            ki = ki * dims[s] + (idx / strides[s]) % dims[s];
        }
        let mut ti = 0usize;
        for &s in &traced_slots {
            ti = ti * dims[s] + (idx / strides[s]) % dims[s];
        }
        slices[ti][ki] += *z;
    }
    let mut out = CMatrix::zeros(keep_dim, keep_dim);
    for slice in &slices {
        out += slice * slice.adjoint();
    }
    DensityOperator::new_unchecked(out, keep_layout)
}

/// Condition a state with a classical register on an event set.
///
/// Returns `(Pr[S], rho | label in S)`; the conditioned state keeps the
/// measured register. Errors on zero-probability events and on registers
/// that are not classical.
pub fn condition_on(
    rho: &DensityOperator,
    label: &str,
    event: &[usize],
) -> Result<(f64, DensityOperator)> {
    if !rho.is_classical_on(label, 1e-9)? {
        return Err(Error::NotClassical(label.to_string()));
    }
    let slot = rho.layout.index_of(label)?;
    let measured = rho.measure_register(label)?;
    let dim = rho.dim();
    let mut m = CMatrix::zeros(dim, dim);
    let mut prob = 0.0;
    for i in 0..dim {
        let xi = rho.layout.unflatten(i)[slot];
        if !event.contains(&xi) {
            continue;
        }
        prob += measured.matrix[(i, i)].re;
        for j in 0..dim {
            if rho.layout.unflatten(j)[slot] == xi {
                m[(i, j)] = measured.matrix[(i, j)];
            }
        }
    }
    if prob <= 1e-14 {
        return Err(Error::ZeroProbability);
    }
    Ok((
        prob,
        DensityOperator {
            matrix: m.scale(1.0 / prob),
            layout: rho.layout.clone(),
        },
    ))
}

/// Embed an operator acting on the named registers (in the given order) into
/// the full layout, identity on the rest.
pub fn embed_operator(layout: &RegisterLayout, labels: &[&str], op: &CMatrix) -> Result<CMatrix> {
    let slots: Vec<usize> = labels
        .iter()
        .map(|l| layout.index_of(l))
        .collect::<Result<_>>()?;
    let sub_layout_dims: Vec<usize> = labels
        .iter()
        .map(|l| layout.dim_of(l))
        .collect::<Result<_>>()?;
    let sub_dim: usize = sub_layout_dims.iter().product();
    if op.nrows() != sub_dim || op.ncols() != sub_dim {
        return Err(Error::LayoutMismatch(format!(
            "operator is {}x{}, selected registers have dimension {}",
            op.nrows(),
            op.ncols(),
            sub_dim
        )));
    }
    let dim = layout.total_dim();
    let mut out = CMatrix::zeros(dim, dim);
    // Basis index helpers for the selected sub-space.
    let sub_index = |flat: &[usize]| -> usize {
        let mut v = 0;
        for (&slot, &d) in slots.iter().zip(&sub_layout_dims) {
            v = v * d + flat[slot];
        }
        v
    };
    for i in 0..dim {
        let fi = layout.unflatten(i);
        let si = sub_index(&fi);
        for j in 0..dim {
            let fj = layout.unflatten(j);
            // Identity on unselected registers.
            if fi
                .iter()
                .zip(&fj)
                .enumerate()
                .any(|(s, (a, b))| !slots.contains(&s) && a != b)
            {
                continue;
            }
            out[(i, j)] = op[(si, sub_index(&fj))];
        }
    }
    Ok(out)
}

fn reorder_permutation(layout: &RegisterLayout, order: &[&str]) -> Result<Vec<usize>> {
    if order.len() != layout.registers().len() {
        return Err(Error::LayoutMismatch("reorder label count mismatch".into()));
    }
    let new_layout = RegisterLayout::new(
        order
            .iter()
            .map(|l| Ok((l.to_string(), layout.dim_of(l)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let slots: Vec<usize> = order
        .iter()
        .map(|l| layout.index_of(l))
        .collect::<Result<_>>()?;
    let dim = layout.total_dim();
    Ok((0..dim)
        .map(|i| {
            let fi = layout.unflatten(i);
            let new_fi: Vec<usize> = slots.iter().map(|&s| fi[s]).collect();
            new_layout.flatten(&new_fi)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::trace_distance;
    use super::*;

    fn qubit(label: &str) -> RegisterLayout {
        RegisterLayout::single(label, 2)
    }

    #[test]
    fn tensor_identity_case() {
        let a = DensityOperator::maximally_mixed(qubit("A"));
        let b = DensityOperator::maximally_mixed(qubit("B"));
        let ab = tensor(&a, &b).unwrap();
        let expect =
            DensityOperator::maximally_mixed(RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap());
        assert!(trace_distance(&ab, &expect).unwrap() < 1e-14);
    }

    #[test]
    fn tensor_basis_states() {
        let a = DensityOperator::basis_state(qubit("A"), 0);
        let b = DensityOperator::basis_state(qubit("B"), 1);
        let ab = tensor(&a, &b).unwrap();
        assert!((ab.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = DensityOperator::maximally_mixed(qubit("A"));
        assert!(matches!(tensor(&a, &a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.7, 0.0);
        m[(0, 1)] = c(0.1, 0.2);
        m[(1, 0)] = c(0.1, -0.2);
        m[(1, 1)] = c(0.3, 0.0);
        let rho = DensityOperator::new(m, qubit("A")).unwrap();
        let sigma = DensityOperator::basis_state(qubit("B"), 1);
        let ab = tensor(&rho, &sigma).unwrap();
        let back = partial_trace(&ab, &["B"]).unwrap();
        assert!(trace_distance(&back, &rho).unwrap() < 1e-14);
    }

    #[test]
    fn bell_state_marginal_is_maximally_mixed() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let v = CVector::from_vec(vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let bell = PureState::new(v, layout).unwrap();
        let marg = pure_partial_trace(&bell, &["A"]).unwrap();
        let expect = DensityOperator::maximally_mixed(qubit("B"));
        assert!(trace_distance(&marg, &expect).unwrap() < 1e-14);
    }

    #[test]
    fn conditioning_recomposes() {
        // c-q state on a 2-dim classical register X with qubit side info.
        let layout = RegisterLayout::new(vec![("X", 2), ("E", 2)]).unwrap();
        let e0 = DensityOperator::basis_state(qubit("E"), 0);
        let mut plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        plus[(0, 1)] = c(0.5, 0.0);
        let e1 = DensityOperator::new(plus, qubit("E")).unwrap();
        let x0 = DensityOperator::basis_state(qubit("X"), 0);
        let x1 = DensityOperator::basis_state(qubit("X"), 1);
        let rho = DensityOperator::mix(&[
            (0.25, tensor(&x0, &e0).unwrap()),
            (0.75, tensor(&x1, &e1).unwrap()),
        ])
        .unwrap();
        let rho = DensityOperator::new(rho.matrix().clone(), layout.clone()).unwrap();

        let (p0, cond0) = condition_on(&rho, "X", &[0]).unwrap();
        let (p1, cond1) = condition_on(&rho, "X", &[1]).unwrap();
        assert!((p0 - 0.25).abs() < 1e-12);
        assert!((p1 - 0.75).abs() < 1e-12);
        let recomposed = DensityOperator::mix(&[(p0, cond0), (p1, cond1)]).unwrap();
        let measured = rho.measure_register("X").unwrap();
        assert!(trace_distance(&recomposed, &measured).unwrap() < 1e-12);

        let (pfull, condfull) = condition_on(&rho, "X", &[0, 1]).unwrap();
        assert!((pfull - 1.0).abs() < 1e-12);
        assert!(trace_distance(&condfull, &measured).unwrap() < 1e-12);
    }

    #[test]
    fn zero_probability_event_errors() {
        let layout = RegisterLayout::new(vec![("X", 2)]).unwrap();
        let rho = DensityOperator::basis_state(layout, 0);
        assert!(matches!(
            condition_on(&rho, "X", &[1]),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn reorder_swaps_registers() {
        let a = DensityOperator::basis_state(qubit("A"), 0);
        let b = DensityOperator::basis_state(qubit("B"), 1);
        let ab = tensor(&a, &b).unwrap();
        let ba = ab.reorder(&["B", "A"]).unwrap();
        let expect = tensor(&b, &a).unwrap();
        assert!(trace_distance(&ba, &expect).unwrap() < 1e-14);
    }
}
