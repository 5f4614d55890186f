use super::{kron, CMatrix, DensityOperator, RegisterLayout, VALIDITY_TOL};
use crate::{Error, Result};

/// CPTP map given by its Kraus operators (input layout -> output layout).
#[derive(Debug, Clone)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    input: RegisterLayout,
    output: RegisterLayout,
}

impl Channel {
    pub fn new(kraus: Vec<CMatrix>, input: RegisterLayout, output: RegisterLayout) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::NotCptp("empty Kraus set".into()));
        }
        let (din, dout) = (input.total_dim(), output.total_dim());
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::NotCptp(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    dout,
                    din
                )));
            }
        }
        let mut sum = CMatrix::zeros(din, din);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let err = (&sum - CMatrix::identity(din, din))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > VALIDITY_TOL {
            return Err(Error::NotCptp(format!("sum K†K deviates from I by {err:.3e}")));
        }
        Ok(Self {
            kraus,
            input,
            output,
        })
    }

    /// Unitary conjugation channel.
    pub fn unitary(u: CMatrix, layout: RegisterLayout) -> Result<Self> {
        Self::new(vec![u], layout.clone(), layout)
    }

    pub fn kraus_operators(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        &self.output
    }
}

/// Apply a channel to a state whose layout equals the channel input.
pub fn apply_channel(phi: &Channel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.layout() != &phi.input {
        return Err(Error::LayoutMismatch(
            "state layout differs from channel input".into(),
        ));
    }
    let dout = phi.output.total_dim();
    let mut out = CMatrix::zeros(dout, dout);
    for k in &phi.kraus {
        out += k * rho.matrix() * k.adjoint();
    }
    DensityOperator::new_unchecked(out, phi.output.clone())
}

/// Stinespring isometry `V = Σ_i K_i ⊗ |i>_env` with the environment
/// register appended last; `Tr_env(V rho V†) = Φ(rho)`.
pub fn stinespring(phi: &Channel) -> CMatrix {
    let env_dim = phi.kraus.len();
    let (din, dout) = (phi.input.total_dim(), phi.output.total_dim());
    let mut v = CMatrix::zeros(dout * env_dim, din);
    for (i, k) in phi.kraus.iter().enumerate() {
        let mut env = CMatrix::zeros(env_dim, 1);
        env[(i, 0)] = super::c(1.0, 0.0);
        v += kron(k, &env);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::super::{c, partial_trace, trace_distance};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn qubit(label: &str) -> RegisterLayout {
        RegisterLayout::single(label, 2)
    }

    fn random_density(dim: usize, rng: &mut ChaCha20Rng) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let psd = &m * m.adjoint();
        let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
        psd.scale(1.0 / tr)
    }

    fn dilation_check(phi: &Channel, rho: &DensityOperator) -> f64 {
        let v = stinespring(phi);
        let big = &v * rho.matrix() * v.adjoint();
        let layout = phi
            .output
            .concat(&RegisterLayout::single("env", phi.kraus.len()))
            .unwrap();
        let big = DensityOperator::new_unchecked(big, layout).unwrap();
        let reduced = partial_trace(&big, &["env"]).unwrap();
        let direct = apply_channel(phi, rho).unwrap();
        trace_distance(&reduced, &direct).unwrap()
    }

    #[test]
    fn identity_channel_dilation_is_identity_embedding() {
        let phi = Channel::unitary(CMatrix::identity(2, 2), qubit("A")).unwrap();
        let v = stinespring(&phi);
        assert!((&v - CMatrix::identity(2, 2)).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-15);
    }

    #[test]
    fn full_depolarizing_sends_everything_to_uniform() {
        // Kraus set {1/2 I, 1/2 X, 1/2 Y, 1/2 Z}.
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let y = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        let phi = Channel::new(
            vec![
                CMatrix::identity(2, 2).scale(0.5),
                x.scale(0.5),
                y.scale(0.5),
                z.scale(0.5),
            ],
            qubit("A"),
            qubit("A"),
        )
        .unwrap();
        let uniform = DensityOperator::maximally_mixed(qubit("A"));
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for _ in 0..3 {
            let rho = DensityOperator::new(random_density(2, &mut rng), qubit("A")).unwrap();
            let out = apply_channel(&phi, &rho).unwrap();
            assert!(trace_distance(&out, &uniform).unwrap() < 1e-12);
        }
    }

    #[test]
    fn measurement_channel_dilation_matches_kraus_application() {
        let p0 = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let p1 = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let phi = Channel::new(vec![p0, p1], qubit("A"), qubit("A")).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let rho = DensityOperator::new(random_density(2, &mut rng), qubit("A")).unwrap();
        assert!(dilation_check(&phi, &rho) < 1e-10);
    }

    #[test]
    fn non_cptp_kraus_rejected() {
        let too_big = CMatrix::identity(2, 2).scale(1.1);
        assert!(Channel::new(vec![too_big], qubit("A"), qubit("A")).is_err());
    }

    #[test]
    fn data_processing_inequality_random_trials() {
        // Random qubit channel from a random isometry; also the isometry
        // equality case.
        let mut rng = ChaCha20Rng::seed_from_u64(47);
        for _ in 0..10 {
            let mut g = CMatrix::zeros(4, 2);
            for i in 0..4 {
                for j in 0..2 {
                    g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            // QR-orthonormalize the two columns to get an isometry.
            let col0 = g.column(0).into_owned();
            let n0 = col0.norm();
            let col0 = col0.scale(1.0 / n0);
            let col1 = g.column(1).into_owned();
            let overlap = col0.adjoint() * &col1;
            let col1 = &col1 - &col0 * overlap[(0, 0)];
            let col1 = col1.clone().scale(1.0 / col1.norm());
            let mut v = CMatrix::zeros(4, 2);
            v.set_column(0, &col0);
            v.set_column(1, &col1);

            // Kraus decomposition of rho -> Tr_env(V rho V†): K_e = <e|_env V.
            let k0 = CMatrix::from_fn(2, 2, |r, c_| v[(r * 2, c_)]);
            let k1 = CMatrix::from_fn(2, 2, |r, c_| v[(r * 2 + 1, c_)]);
            let phi = Channel::new(vec![k0, k1], qubit("A"), qubit("A")).unwrap();

            let rho = DensityOperator::new(random_density(2, &mut rng), qubit("A")).unwrap();
            let sigma = DensityOperator::new(random_density(2, &mut rng), qubit("A")).unwrap();
            let before = trace_distance(&rho, &sigma).unwrap();
            let after = trace_distance(
                &apply_channel(&phi, &rho).unwrap(),
                &apply_channel(&phi, &sigma).unwrap(),
            )
            .unwrap();
            assert!(after <= before + 1e-9);

            // Isometry conjugation preserves distance exactly: embed into a
            // 4-dim output and keep the environment.
            let big_layout = RegisterLayout::new(vec![("A", 2), ("env", 2)]).unwrap();
            let iso_rho = DensityOperator::new_unchecked(
                &v * rho.matrix() * v.adjoint(),
                big_layout.clone(),
            )
            .unwrap();
            let iso_sigma =
                DensityOperator::new_unchecked(&v * sigma.matrix() * v.adjoint(), big_layout)
                    .unwrap();
            let iso_dist = trace_distance(&iso_rho, &iso_sigma).unwrap();
            assert!((iso_dist - before).abs() < 1e-9);
        }
    }
}
