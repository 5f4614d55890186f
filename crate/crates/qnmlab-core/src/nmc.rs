//! The split-state non-malleable code for quantum messages: two classical
//! strings `X`, `Y` feed a two-source extractor whose output keys a special
//! Clifford mask on the quantum part `Z`. Part one of the codeword is `X`,
//! part two is `(Y, Z)`.

use crate::extractors::NmExtDescriptor;
use crate::pauli::{sc_enumerate, sc_samp_index, sc_size, CliffordOp};
use crate::qmatrix::{DensityOperator, RegisterLayout};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the masking key is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyMode {
    /// `R = nmExt(X, Y)`.
    Real,
    /// `R` is fresh uniform randomness, independent of `(X, Y)`, with the
    /// ideal same/tamp correlation in experiments.
    Ideal,
}

/// How a key value selects the masking Clifford.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordMode {
    /// Through the keyed sampler (carries its `2^{-2b}` bias).
    Sampler,
    /// Uniform index into the enumerated subgroup (bias removed).
    ExactUniform,
}

/// Combined mode, using the spec'd names on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub key: KeyMode,
    pub clifford: CliffordMode,
}

impl Mode {
    pub const REAL: Mode = Mode {
        key: KeyMode::Real,
        clifford: CliffordMode::Sampler,
    };
    pub const IDEAL_EXACT: Mode = Mode {
        key: KeyMode::Ideal,
        clifford: CliffordMode::ExactUniform,
    };

    pub fn parse(s: &str) -> Result<Mode> {
        let mut mode = Mode::REAL;
        for part in s.split('+') {
            match part.trim() {
                "real" => mode = Mode::REAL,
                "ideal-key" => mode.key = KeyMode::Ideal,
                "exact-uniform-clifford" => mode.clifford = CliffordMode::ExactUniform,
                other => {
                    return Err(Error::Config(format!("unknown mode {other:?}")));
                }
            }
        }
        Ok(mode)
    }

    pub fn to_string_repr(&self) -> String {
        match (self.key, self.clifford) {
            (KeyMode::Real, CliffordMode::Sampler) => "real".into(),
            (KeyMode::Ideal, CliffordMode::Sampler) => "ideal-key".into(),
            (KeyMode::Real, CliffordMode::ExactUniform) => "exact-uniform-clifford".into(),
            (KeyMode::Ideal, CliffordMode::ExactUniform) => {
                "ideal-key+exact-uniform-clifford".into()
            }
        }
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string_repr())
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Mode::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Which extractor backs the code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum NmExtSlot {
    Descriptor(NmExtDescriptor),
    /// Seeded random table built on demand with the right dimensions.
    SeededTable { seed: u64 },
}

/// Code parameters. `r = floor((1/2 - delta) ell)` and `r >= 5 b` must hold;
/// the codeword length is `n = ell + delta*ell + b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeParams {
    pub b: usize,
    pub ell: usize,
    pub delta: f64,
    pub r: usize,
    pub nmext: NmExtSlot,
    pub mode: Mode,
}

impl CodeParams {
    /// Desk-scale defaults: `b = 1`, `ell = 14`, `delta = 1/7`, so
    /// `|Y| = 2`, `r = 5 = 5b`, and the `(X, Y)` enumeration is `2^16`.
    pub fn desk_default(mode: Mode) -> Self {
        Self {
            b: 1,
            ell: 14,
            delta: 1.0 / 7.0,
            r: 5,
            nmext: NmExtSlot::SeededTable { seed: 0x6e6d4578 },
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 || self.delta >= 0.5 {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        let dl = self.delta * self.ell as f64;
        if (dl - dl.round()).abs() > 1e-9 || dl.round() < 1.0 {
            return Err(Error::InvalidParams(format!(
                "delta * ell = {dl} must be a positive integer"
            )));
        }
        let r_expect = ((0.5 - self.delta) * self.ell as f64 + 1e-9).floor() as usize;
        if self.r != r_expect {
            return Err(Error::InvalidParams(format!(
                "r = {} but floor((1/2 - delta) ell) = {r_expect}",
                self.r
            )));
        }
        if self.r < 5 * self.b {
            return Err(Error::InvalidParams(format!(
                "key too short to sample the Clifford subgroup: r = {} < 5b = {}",
                self.r,
                5 * self.b
            )));
        }
        if self.ell + self.delta_ell() > 40 {
            return Err(Error::DimensionCap(
                "codeword classical part beyond enumeration scale".into(),
            ));
        }
        if let NmExtSlot::Descriptor(d) = &self.nmext {
            if d.n != self.ell || d.m != self.delta_ell() || d.r != self.r {
                return Err(Error::InvalidParams(format!(
                    "nmExt dimensions ({}, {}, {}) do not match (ell, delta*ell, r) = ({}, {}, {})",
                    d.n,
                    d.m,
                    d.r,
                    self.ell,
                    self.delta_ell(),
                    self.r
                )));
            }
        }
        Ok(())
    }

    pub fn delta_ell(&self) -> usize {
        (self.delta * self.ell as f64).round() as usize
    }

    /// Codeword length `n = |X| + |Y| + |Z|`.
    pub fn codeword_len(&self) -> usize {
        self.ell + self.delta_ell() + self.b
    }

    /// Materialize the extractor.
    pub fn nmext_descriptor(&self) -> Result<NmExtDescriptor> {
        match &self.nmext {
            NmExtSlot::Descriptor(d) => Ok(d.clone()),
            NmExtSlot::SeededTable { seed } => {
                NmExtDescriptor::random_table(self.ell, self.delta_ell(), self.r, *seed)
            }
        }
    }

    /// Number of distinct ideal key values in the current Clifford mode.
    pub fn ideal_key_count(&self) -> usize {
        match self.mode.clifford {
            CliffordMode::Sampler => 1usize << (5 * self.b),
            CliffordMode::ExactUniform => sc_size(self.b),
        }
    }

    /// Map a key value (an ideal key, or the extractor output in real mode)
    /// to an index into the `sc_enumerate` table.
    pub fn clifford_index(&self, key: u64) -> usize {
        match self.mode.clifford {
            CliffordMode::Sampler => {
                // The low 5b bits of the key feed the sampler.
                let sampler_key = key & ((1u64 << (5 * self.b)) - 1);
                sc_samp_index(sampler_key, self.b)
            }
            CliffordMode::ExactUniform => (key as usize) % sc_size(self.b),
        }
    }
}

/// Output of `enc`: classical strings `x`, `y` and the masked quantum part
/// (with any external registers carried along in the joint state). In ideal
/// key mode the fresh key rides along for the decoder.
#[derive(Debug, Clone)]
pub struct SplitStateCodeword {
    pub x: u64,
    pub y: u64,
    pub z: DensityOperator,
    pub ideal_key: Option<u64>,
}

impl SplitStateCodeword {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x": format!("{:x}", self.x),
            "y": format!("{:x}", self.y),
            "z": self.z.to_json_matrix(),
            "ideal_key": self.ideal_key,
        })
    }
}

/// Shared context for encoding/decoding: parameters plus the enumerated
/// subgroup, the materialized extractor, and (in real mode) the flat
/// Clifford index table over all `(x, y)`.
pub struct CodeContext {
    pub params: CodeParams,
    pub sc: Vec<CliffordOp>,
    pub nmext: Option<NmExtDescriptor>,
    index_table: Option<Vec<u16>>,
}

impl CodeContext {
    pub fn new(params: CodeParams) -> Result<Self> {
        params.validate()?;
        let sc = sc_enumerate(params.b)?;
        let (nmext, index_table) = match params.mode.key {
            KeyMode::Real => {
                let d = params.nmext_descriptor()?;
                let raw = d.tabulate()?;
                let table = raw
                    .iter()
                    .map(|&r| params.clifford_index(r as u64) as u16)
                    .collect();
                (Some(d), Some(table))
            }
            KeyMode::Ideal => (None, None),
        };
        Ok(Self {
            params,
            sc,
            nmext,
            index_table,
        })
    }

    /// Clifford index for the real-mode key derived from `(x, y)`.
    pub fn real_clifford_index(&self, x: u64, y: u64) -> Result<usize> {
        let table = self
            .index_table
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("real key requested in ideal mode".into()))?;
        Ok(table[((y << self.params.ell) | x) as usize] as usize)
    }

    pub fn clifford(&self, index: usize) -> &CliffordOp {
        &self.sc[index]
    }

    /// Mask the message register with the indexed Clifford and relabel it.
    pub fn mask(
        &self,
        sigma: &DensityOperator,
        message_label: &str,
        index: usize,
        out_label: &str,
    ) -> Result<DensityOperator> {
        let u = self.sc[index].dense()?;
        let masked = sigma.apply_unitary_on(&[message_label], u)?;
        relabel(&masked, message_label, out_label)
    }

    /// Apply `C†` on the (possibly tampered) `Z` register and relabel.
    pub fn unmask(
        &self,
        z: &DensityOperator,
        z_label: &str,
        index: usize,
        out_label: &str,
    ) -> Result<DensityOperator> {
        let u = self.sc[index].dense()?;
        let unmasked = z.apply_unitary_on(&[z_label], &u.adjoint())?;
        relabel(&unmasked, z_label, out_label)
    }

    /// Encode: sample `(X, Y)` (and the key in ideal mode), mask `M` into
    /// `Z`. External registers in `sigma` ride along untouched.
    pub fn enc(
        &self,
        sigma: &DensityOperator,
        message_label: &str,
        rng: &mut impl Rng,
    ) -> Result<SplitStateCodeword> {
        if sigma.layout().dim_of(message_label)? != 1 << self.params.b {
            return Err(Error::InvalidParams(format!(
                "message register must be {} qubits",
                self.params.b
            )));
        }
        let x = rng.gen_range(0..(1u64 << self.params.ell));
        let y = rng.gen_range(0..(1u64 << self.params.delta_ell()));
        let (index, ideal_key) = match self.params.mode.key {
            KeyMode::Real => (self.real_clifford_index(x, y)?, None),
            KeyMode::Ideal => {
                let key = rng.gen_range(0..self.params.ideal_key_count() as u64);
                (self.params.clifford_index(key), Some(key))
            }
        };
        Ok(SplitStateCodeword {
            x,
            y,
            z: self.mask(sigma, message_label, index, "Z")?,
            ideal_key,
        })
    }

    /// Decode a (possibly tampered) codeword: recompute the candidate key
    /// from `(x, y)` and unmask. Never aborts.
    pub fn dec(&self, codeword: &SplitStateCodeword, out_label: &str) -> Result<DensityOperator> {
        let index = match self.params.mode.key {
            KeyMode::Real => self.real_clifford_index(codeword.x, codeword.y)?,
            KeyMode::Ideal => {
                let key = codeword.ideal_key.ok_or_else(|| {
                    Error::InvalidParams("ideal-key codeword missing its key".into())
                })?;
                self.params.clifford_index(key)
            }
        };
        self.unmask(&codeword.z, "Z", index, out_label)
    }

    /// Distribution of Clifford indices induced by the key mode: in ideal
    /// mode the key is uniform; in real mode the extractor output on uniform
    /// `(X, Y)` is pushed through the key-to-Clifford map.
    pub fn key_distribution(&self) -> Result<Vec<(usize, f64)>> {
        let mut weights = vec![0.0f64; self.sc.len()];
        match self.params.mode.key {
            KeyMode::Ideal => {
                let count = self.params.ideal_key_count();
                for key in 0..count as u64 {
                    weights[self.params.clifford_index(key)] += 1.0 / count as f64;
                }
            }
            KeyMode::Real => {
                let table = self.index_table.as_ref().expect("real mode has a table");
                let total = table.len() as f64;
                for &idx in table {
                    weights[idx as usize] += 1.0 / total;
                }
            }
        }
        Ok(weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .collect())
    }

    /// Exact privacy distances of the two codeword parts for a message with
    /// external registers (typically a purification): part one is `X`, part
    /// two is `(Y, Z)`.
    ///
    /// Part one: conditioned on any `(x, y, key)`, the external marginal
    /// must equal the message's own external marginal (so the mixture over
    /// the uniform `X` is exactly a product). Part two: the key-averaged
    /// masked state joint with the externals is compared against
    /// `U_Z ⊗ sigma_ext` (with `Y` uniform and independent, that is the
    /// whole part-two joint up to the uniform `Y` factor).
    pub fn privacy_distances(
        &self,
        sigma: &DensityOperator,
        message_label: &str,
    ) -> Result<(f64, f64)> {
        let sigma_ext = crate::qmatrix::partial_trace(sigma, &[message_label])?;

        let mut d_part1: f64 = 0.0;
        let key_dist = self.key_distribution()?;
        for (index, _) in &key_dist {
            let masked = self.mask(sigma, message_label, *index, "Z")?;
            let ext_only = crate::qmatrix::partial_trace(&masked, &["Z"])?;
            d_part1 = d_part1.max(crate::qmatrix::trace_distance(&ext_only, &sigma_ext)?);
        }

        let mut avg_parts: Vec<(f64, DensityOperator)> = Vec::new();
        for (index, w) in &key_dist {
            avg_parts.push((*w, self.mask(sigma, message_label, *index, "Z")?));
        }
        let avg = DensityOperator::mix(&avg_parts)?;
        let uniform_z =
            DensityOperator::maximally_mixed(RegisterLayout::single("Z", 1 << self.params.b));
        let order: Vec<&str> = avg
            .layout()
            .registers()
            .iter()
            .map(|(l, _)| l.as_str())
            .collect();
        let target = crate::qmatrix::tensor(&uniform_z, &sigma_ext)?.reorder(&order)?;
        let d_part2 = crate::qmatrix::trace_distance(&avg, &target)?;
        Ok((d_part1, d_part2))
    }
}

/// Rename one register, keeping order and dimensions.
pub fn relabel(state: &DensityOperator, from: &str, to: &str) -> Result<DensityOperator> {
    let layout = RegisterLayout::new(
        state
            .layout()
            .registers()
            .iter()
            .map(|(l, dim)| {
                if l == from {
                    (to.to_string(), *dim)
                } else {
                    (l.clone(), *dim)
                }
            })
            .collect(),
    )?;
    DensityOperator::new_unchecked(state.matrix().clone(), layout)
}

/// One row of the rate table.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub delta: f64,
    /// `n / ell = 1 + delta + 1/10 + delta/5`.
    pub n_over_ell: f64,
    /// `b_max / ell = (1/2 - delta) / 5`.
    pub bmax_over_ell: f64,
    /// Achieved rate `b_max / n`.
    pub rate: f64,
}

/// Rate arithmetic: for each `delta` the codeword length is
/// `n = (1 + delta + 1/10 + delta/5) ell` while the message can be as long
/// as `r / 5 = (1/2 - delta) ell / 5`; the rate tends to `1/11` as
/// `delta -> 0`.
pub fn rate_table(deltas: &[f64]) -> Vec<RateRow> {
    deltas
        .iter()
        .map(|&delta| {
            let n_over_ell = 1.0 + delta + 0.1 + delta / 5.0;
            let bmax_over_ell = (0.5 - delta) / 5.0;
            RateRow {
                delta,
                n_over_ell,
                bmax_over_ell,
                rate: bmax_over_ell / n_over_ell,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::{canonical_purification, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn random_message(rng: &mut ChaCha20Rng) -> DensityOperator {
        let mut g = crate::qmatrix::CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                g[(i, j)] = crate::qmatrix::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let psd = &g * g.adjoint();
        let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
        DensityOperator::new(psd.scale(1.0 / tr), RegisterLayout::single("M", 2)).unwrap()
    }

    #[test]
    fn params_validation() {
        CodeParams::desk_default(Mode::REAL).validate().unwrap();

        // b=1, ell=10, delta=0.2 -> r=3 < 5b: rejected.
        let bad = CodeParams {
            b: 1,
            ell: 10,
            delta: 0.2,
            r: 3,
            nmext: NmExtSlot::SeededTable { seed: 1 },
            mode: Mode::REAL,
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidParams(_))));

        let wrong_r = CodeParams {
            r: 6,
            ..CodeParams::desk_default(Mode::REAL)
        };
        assert!(wrong_r.validate().is_err());
    }

    #[test]
    fn dec_enc_roundtrip_with_purification() {
        let mut rng = ChaCha20Rng::seed_from_u64(107);
        for mode in [Mode::REAL, Mode::IDEAL_EXACT] {
            let ctx = CodeContext::new(CodeParams::desk_default(mode)).unwrap();
            for _ in 0..5 {
                let msg = random_message(&mut rng);
                let joint = canonical_purification(&msg, "Mhat").unwrap().to_density();
                let cw = ctx.enc(&joint, "M", &mut rng).unwrap();
                let out = ctx.dec(&cw, "M").unwrap();
                assert!(trace_distance(&out, &joint).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn dec_of_uniform_z_is_uniform() {
        let mut rng = ChaCha20Rng::seed_from_u64(109);
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::REAL)).unwrap();
        let uniform = DensityOperator::maximally_mixed(RegisterLayout::single("Z", 2));
        let cw = SplitStateCodeword {
            x: rng.gen_range(0..(1 << 14)),
            y: rng.gen_range(0..4),
            z: uniform.clone(),
            ideal_key: None,
        };
        let out = ctx.dec(&cw, "M").unwrap();
        let expect = DensityOperator::maximally_mixed(RegisterLayout::single("M", 2));
        assert!(trace_distance(&out, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn rekeyed_decode_matches_exhaustive_key_pair_sum() {
        // Ideal-key mode with a tampered x: the decoder re-keys with an
        // independent uniform C'; the averaged output equals the exhaustive
        // sum over (C, C') pairs, which double-twirls to uniform.
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(113);
        let msg = random_message(&mut rng);
        let count = ctx.params.ideal_key_count();
        let mut avg_parts = Vec::new();
        for key in 0..count as u64 {
            for key2 in 0..count as u64 {
                let masked = ctx
                    .mask(&msg, "M", ctx.params.clifford_index(key), "Z")
                    .unwrap();
                let out = ctx
                    .unmask(&masked, "Z", ctx.params.clifford_index(key2), "M")
                    .unwrap();
                avg_parts.push((1.0 / (count * count) as f64, out));
            }
        }
        let avg = DensityOperator::mix(&avg_parts).unwrap();
        let mut oracle_parts = Vec::new();
        for c1 in &ctx.sc {
            for c2 in &ctx.sc {
                let u = c2.dense().unwrap().adjoint() * c1.dense().unwrap();
                let out = msg.apply_unitary_on(&["M"], &u).unwrap();
                oracle_parts.push((1.0 / (ctx.sc.len() * ctx.sc.len()) as f64, out));
            }
        }
        let oracle = DensityOperator::mix(&oracle_parts).unwrap();
        assert!(crate::qmatrix::max_entry_diff(avg.matrix(), oracle.matrix()) < 1e-10);
        let uniform = DensityOperator::maximally_mixed(RegisterLayout::single("M", 2));
        assert!(trace_distance(&avg, &uniform).unwrap() < 1e-10);
    }

    #[test]
    fn uniform_message_gives_uniform_z_per_key() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let uniform = DensityOperator::maximally_mixed(RegisterLayout::single("M", 2));
        for index in 0..ctx.sc.len() {
            let masked = ctx.mask(&uniform, "M", index, "Z").unwrap();
            let expect = DensityOperator::maximally_mixed(RegisterLayout::single("Z", 2));
            assert!(trace_distance(&masked, &expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn privacy_of_both_parts_in_ideal_exact_mode() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(127);
        for _ in 0..5 {
            let msg = random_message(&mut rng);
            let joint = canonical_purification(&msg, "Mhat").unwrap().to_density();
            let (d1, d2) = ctx.privacy_distances(&joint, "M").unwrap();
            assert!(d1 < 1e-9, "part one leaks: {d1}");
            assert!(d2 < 1e-9, "part two leaks: {d2}");
        }
    }

    #[test]
    fn enc_preserves_external_marginal() {
        let ctx = CodeContext::new(CodeParams::desk_default(Mode::IDEAL_EXACT)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(131);
        let msg = random_message(&mut rng);
        let joint = canonical_purification(&msg, "Mhat").unwrap().to_density();
        let before = crate::qmatrix::partial_trace(&joint, &["M"]).unwrap();
        let cw = ctx.enc(&joint, "M", &mut rng).unwrap();
        let after = crate::qmatrix::partial_trace(&cw.z, &["Z"]).unwrap();
        assert!(trace_distance(&before, &after).unwrap() < 1e-12);
    }

    #[test]
    fn rate_table_limits() {
        let rows = rate_table(&[1e-4, 0.01, 0.05, 0.1]);
        assert!((rows[0].rate - 1.0 / 11.0).abs() < 1e-3);
        // delta = 0.1: rate = (0.4/5) / 1.22.
        assert!((rows[3].rate - (0.4 / 5.0) / 1.22).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[0].rate > w[1].rate);
        }
    }

    #[test]
    fn mode_string_roundtrip() {
        for s in [
            "real",
            "ideal-key",
            "exact-uniform-clifford",
            "ideal-key+exact-uniform-clifford",
        ] {
            let m = Mode::parse(s).unwrap();
            assert_eq!(m.to_string_repr(), s);
        }
        assert!(Mode::parse("bogus").is_err());
    }
}
