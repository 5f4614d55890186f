//! Batch front-end: parameter validation, experiment execution from config
//! files, the algebra-verification suite, and report emission.
//!
//! Exit codes: 0 = success with all asserted checks passing, 2 = a check
//! failed, 1 = usage or config error. All file outputs are deterministic
//! given the seed (timings go to stderr only).

use crate::harness::leakage::LeakageSpec;
use crate::harness::nmss_exp::NmssAdversarySpec;
use crate::harness::report::{state_json, ExperimentRecord};
use crate::harness::{AdversarySpec, NmcExperiment};
use crate::nmc::{CodeContext, CodeParams, Mode};
use crate::nmss::{ClassicalNmssParams, NmssParams};
use crate::qmatrix::{canonical_purification, DensityOperator, RegisterLayout};
use crate::sharing::lrss::LrssParams;
use crate::{Error, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "qnmlab", about = "Exact split-state non-malleability laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker-thread cap for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the twirl/identity suite by exhaustive group sums.
    VerifyAlgebra {
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run split-state tampering experiments from a config file.
    NmcRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional CSV summary path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the config's mode (real, ideal-key,
        /// exact-uniform-clifford, or a + combination).
        #[arg(long)]
        mode: Option<String>,
        /// Enforce the strict parameter inequalities.
        #[arg(long, default_value_t = false)]
        strict_params: bool,
    },
    /// Run threshold tampering experiments against the composed scheme.
    NmssRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional CSV summary path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        strict_params: bool,
    },
    /// Run leakage experiments against the inner-product schemes.
    LrssRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        strict_params: bool,
    },
    /// Emit the rate table for a list of deltas.
    RateTable {
        /// Comma-separated delta values.
        #[arg(long)]
        deltas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively certify an extractor descriptor.
    CertifyNmext {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmcRunConfig {
    pub params: CodeParams,
    pub adversaries: Vec<AdversarySpec>,
    pub message: MessageSpec,
    /// Also verify the transposed/delayed wiring agreement per adversary.
    #[serde(default)]
    pub check_wirings: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MessageSpec {
    MaximallyEntangled,
    /// Seeded random mixed messages with canonical purification.
    Random { count: usize },
    BasisState { index: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmssRunConfig {
    pub params: NmssParams,
    pub adversaries: Vec<NmssAdversarySpec>,
    #[serde(default)]
    pub check_privacy: bool,
    /// Classical-variant smoke parameters to exercise alongside.
    #[serde(default)]
    pub classical: Option<ClassicalNmssParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrssRunConfig {
    pub params: LrssParams,
    /// "2of2" or "2ofp".
    pub scheme: String,
    pub colluders: Vec<usize>,
    pub secret: u16,
    pub adversaries: Vec<LeakageSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// "table" (seeded) or "ip" (inner product over GF(2^k), n = m = k*N).
    pub kind: String,
    #[serde(default)]
    pub table_seed: u64,
    #[serde(default)]
    pub ip_field_bits: u32,
    pub family: crate::extractors::TamperFamily,
    pub tolerance: f64,
}

fn message_states(spec: &MessageSpec, b: usize, seed: u64) -> Result<Vec<DensityOperator>> {
    use rand::{Rng, SeedableRng};
    let dim = 1usize << b;
    match spec {
        MessageSpec::MaximallyEntangled => {
            let mixed = DensityOperator::maximally_mixed(RegisterLayout::single("M", dim));
            Ok(vec![canonical_purification(&mixed, "Mhat")?.to_density()])
        }
        MessageSpec::BasisState { index } => {
            let m = DensityOperator::basis_state(RegisterLayout::single("M", dim), *index);
            Ok(vec![canonical_purification(&m, "Mhat")?.to_density()])
        }
        MessageSpec::Random { count } => {
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            (0..*count)
                .map(|_| {
                    let mut g = crate::qmatrix::CMatrix::zeros(dim, dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            g[(i, j)] = crate::qmatrix::c(
                                rng.gen::<f64>() - 0.5,
                                rng.gen::<f64>() - 0.5,
                            );
                        }
                    }
                    let psd = &g * g.adjoint();
                    let tr: f64 = psd.diagonal().iter().map(|z| z.re).sum();
                    let m = DensityOperator::new(
                        psd.scale(1.0 / tr),
                        RegisterLayout::single("M", dim),
                    )?;
                    Ok(canonical_purification(&m, "Mhat")?.to_density())
                })
                .collect()
        }
    }
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, contents)?;
            Ok(())
        }
        None => {
            print!("{contents}");
            std::io::stdout().flush()?;
            Ok(())
        }
    }
}

fn run_nmc(
    config_path: &PathBuf,
    seed: u64,
    out: &Option<PathBuf>,
    csv: &Option<PathBuf>,
    mode_override: &Option<String>,
) -> Result<bool> {
    let raw = std::fs::read_to_string(config_path)?;
    let mut config: NmcRunConfig = serde_json::from_str(&raw)?;
    if let Some(m) = mode_override {
        config.params.mode = Mode::parse(m)?;
    }
    let ctx = CodeContext::new(config.params.clone())?;
    let messages = message_states(&config.message, config.params.b, seed)?;
    let mut lines = Vec::new();
    let mut csv_rows = vec![ExperimentRecord::csv_header().to_string()];
    let mut all_ok = true;
    for spec in &config.adversaries {
        let started = std::time::Instant::now();
        let adv = spec.build(config.params.ell, config.params.delta_ell(), config.params.b)?;
        let exp = NmcExperiment::new(&ctx, &adv)?;
        let sim = exp.simulator()?;
        for sigma in &messages {
            let outcome = exp.nm_check(sigma)?;
            let record = ExperimentRecord {
                scheme: "nmc".into(),
                adversary: adv.name.clone(),
                b: config.params.b,
                ell: config.params.ell,
                delta: config.params.delta,
                mode: config.params.mode.to_string_repr(),
                p_same: sim.p_same,
                p_epr: sim.p_epr,
                p_a: sim.p_a,
                epsilon_measured: outcome.epsilon_measured,
                wall_ms: 0,
                final_state: state_json(&outcome.eta),
                gamma: serde_json::json!(sim
                    .gamma_m
                    .iter()
                    .map(|z| [z.re, z.im])
                    .collect::<Vec<_>>()),
                extra: serde_json::Value::Null,
            };
            csv_rows.push(record.csv_row());
            lines.push(record.json_line());
            all_ok &= outcome.epsilon_measured.is_finite();
        }
        if config.check_wirings {
            let diffs = exp.stage_differences()?;
            eprintln!(
                "[qnmlab] wiring agreement for {}: max entry diff {:.3e}",
                adv.name,
                diffs.max()
            );
            all_ok &= diffs.max() < 1e-10;
        }
        eprintln!(
            "[qnmlab] {} finished in {} ms",
            adv.name,
            started.elapsed().as_millis()
        );
    }
    if let Some(path) = csv {
        std::fs::write(path, csv_rows.join("\n") + "\n")?;
    }
    write_output(out, &(lines.join("\n") + "\n"))?;
    Ok(all_ok)
}

fn run_nmss(
    config_path: &PathBuf,
    seed: u64,
    out: &Option<PathBuf>,
    csv: &Option<PathBuf>,
    strict: bool,
) -> Result<bool> {
    let raw = std::fs::read_to_string(config_path)?;
    let mut config: NmssRunConfig = serde_json::from_str(&raw)?;
    config.params.strict = strict;
    if !strict && config.params.lrss.validate_strict_2ofp().is_err() {
        eprintln!(
            "[qnmlab] warning: leakage-resilient share size below the strict bound; running in relaxed desk-scale mode"
        );
    }
    config.params.validate()?;
    let mut lines = Vec::new();
    let mut csv_rows = vec![ExperimentRecord::csv_header().to_string()];
    let mut all_ok = true;
    for spec in &config.adversaries {
        let started = std::time::Instant::now();
        let adv = spec.build(&config.params);
        let outcome = crate::harness::run_nmss_experiment(&adv, &config.params)?;
        let record = ExperimentRecord {
            scheme: "nmss".into(),
            adversary: adv.name.clone(),
            b: config.params.inner.b,
            ell: config.params.inner.ell,
            delta: config.params.inner.delta,
            mode: config.params.inner.mode.to_string_repr(),
            p_same: outcome.p_x_same,
            p_epr: f64::NAN,
            p_a: outcome.p_a,
            epsilon_measured: outcome.epsilon_measured,
            wall_ms: 0,
            final_state: state_json(&outcome.eta),
            gamma: serde_json::json!(outcome
                .gamma_m
                .iter()
                .map(|z| [z.re, z.im])
                .collect::<Vec<_>>()),
            extra: serde_json::json!({ "overflow_weight": outcome.overflow_weight }),
        };
        csv_rows.push(record.csv_row());
        lines.push(record.json_line());
        all_ok &= outcome.epsilon_measured.is_finite();
        eprintln!(
            "[qnmlab] {} finished in {} ms",
            adv.name,
            started.elapsed().as_millis()
        );
    }
    if config.check_privacy {
        for i in 1..=config.params.p {
            for j in (i + 1)..=config.params.p {
                let (eps_l, eps_r) = crate::harness::nmss_privacy(&config.params, &[i, j])?;
                eprintln!("[qnmlab] privacy T={{{i},{j}}}: L {eps_l:.3e}, R {eps_r:.3e}");
                all_ok &= eps_l + eps_r < 1e-7;
            }
        }
    }
    if let Some(cl) = &config.classical {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        for m in 0..(1u64 << cl.inner.b) {
            let shares = crate::nmss::nmshare_classical(m, cl, &mut rng)?;
            let refs: Vec<&crate::nmss::ClassicalShare> = shares.iter().collect();
            all_ok &= crate::nmss::nmrec_classical(&refs[..cl.t], cl)? == m;
        }
    }
    if let Some(path) = csv {
        std::fs::write(path, csv_rows.join("\n") + "\n")?;
    }
    write_output(out, &(lines.join("\n") + "\n"))?;
    Ok(all_ok)
}

fn run_lrss(config_path: &PathBuf, out: &Option<PathBuf>, strict: bool) -> Result<bool> {
    let raw = std::fs::read_to_string(config_path)?;
    let config: LrssRunConfig = serde_json::from_str(&raw)?;
    if strict {
        match config.scheme.as_str() {
            "2of2" => config.params.validate_strict_2of2()?,
            _ => config.params.validate_strict_2ofp()?,
        }
    } else if config.params.validate_strict_2of2().is_err() {
        eprintln!("[qnmlab] warning: share size below the strict bound; relaxed desk-scale mode");
    }
    let field = config.params.field()?;
    let sub_dim = (field.size() as usize).pow(config.params.n_vec as u32);
    let share_dim = match config.scheme.as_str() {
        "2of2" => sub_dim,
        "2ofp" => sub_dim.pow((config.params.p - 1) as u32),
        other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
    };
    let mut lines = Vec::new();
    for spec in &config.adversaries {
        let adv = spec.build(config.params.p.max(2), config.colluders.clone(), share_dim);
        let d = match config.scheme.as_str() {
            "2of2" => crate::harness::leakage_2of2(&adv, config.secret, &config.params)?,
            _ => crate::harness::leakage_2ofp(&adv, config.secret, &config.params)?,
        };
        lines.push(
            serde_json::json!({
                "scheme": format!("lrss-{}", config.scheme),
                "adversary": adv.name,
                "secret": config.secret,
                "distance": d,
            })
            .to_string(),
        );
    }
    write_output(out, &(lines.join("\n") + "\n"))?;
    Ok(true)
}

fn run_certify(config_path: &PathBuf, out: &Option<PathBuf>) -> Result<bool> {
    let raw = std::fs::read_to_string(config_path)?;
    let config: CertifyConfig = serde_json::from_str(&raw)?;
    let descriptor = match config.kind.as_str() {
        "table" => crate::extractors::NmExtDescriptor::random_table(
            config.n,
            config.m,
            config.r,
            config.table_seed,
        )?,
        "ip" => crate::extractors::NmExtDescriptor::from_ip(
            config.ip_field_bits,
            config.n / config.ip_field_bits as usize,
            config.r,
        )?,
        other => return Err(Error::Config(format!("unknown descriptor kind {other:?}"))),
    };
    let report =
        crate::extractors::nmext_certify_classical(&descriptor, &config.family, config.tolerance)?;
    let json = serde_json::json!({
        "descriptor": descriptor.to_json(),
        "report": report,
    });
    write_output(out, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    Ok(report.certified_epsilon <= config.tolerance || config.tolerance <= 0.0)
}

fn run_rate_table(deltas: &str, out: &Option<PathBuf>) -> Result<bool> {
    let parsed: Vec<f64> = deltas
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad delta {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let rows = crate::nmc::rate_table(&parsed);
    let mut csv = String::from("delta,n_over_ell,bmax_over_ell,rate\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            row.delta, row.n_over_ell, row.bmax_over_ell, row.rate
        ));
    }
    write_output(out, &csv)?;
    Ok(true)
}

fn run_verify_algebra(qubits: usize, seed: u64, out: &Option<PathBuf>) -> Result<bool> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let report = crate::pauli::verify_algebra(qubits, &mut rng)?;
    let pass = report.all_pass();
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_output(out, &json)?;
    eprintln!(
        "[qnmlab] algebra suite at b={qubits}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(pass)
}

/// Entry point: returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::VerifyAlgebra { qubits, seed, out } => run_verify_algebra(*qubits, *seed, out),
        Command::NmcRun {
            config,
            seed,
            out,
            csv,
            mode,
            strict_params: _,
        } => run_nmc(config, *seed, out, csv, mode),
        Command::NmssRun {
            config,
            seed,
            out,
            csv,
            strict_params,
        } => run_nmss(config, *seed, out, csv, *strict_params),
        Command::LrssRun {
            config,
            seed: _,
            out,
            strict_params,
        } => run_lrss(config, out, *strict_params),
        Command::RateTable { deltas, out } => run_rate_table(deltas, out),
        Command::CertifyNmext {
            config,
            seed: _,
            out,
        } => run_certify(config, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(Error::Io(e)) => {
            eprintln!("[qnmlab] io error: {e}");
            1
        }
        Err(Error::Json(e)) => {
            eprintln!("[qnmlab] config error: {e}");
            1
        }
        Err(Error::Config(e)) => {
            eprintln!("[qnmlab] config error: {e}");
            1
        }
        Err(e) => {
            eprintln!("[qnmlab] error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_identity() {
        let config = NmcRunConfig {
            params: CodeParams::desk_default(Mode::IDEAL_EXACT),
            adversaries: vec![
                AdversarySpec::Identity,
                AdversarySpec::HaarRandom { seed: 3 },
                AdversarySpec::Classical {
                    f: crate::harness::ClassicalTamper::Xor(5),
                    g: crate::harness::ClassicalTamper::Identity,
                },
            ],
            message: MessageSpec::MaximallyEntangled,
            check_wirings: true,
        };
        let json = serde_json::to_string(&config).unwrap();
        let back: NmcRunConfig = serde_json::from_str(&json).unwrap();
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);

        let nmss = NmssRunConfig {
            params: NmssParams::desk_default(Mode::IDEAL_EXACT),
            adversaries: vec![
                NmssAdversarySpec::Identity,
                NmssAdversarySpec::PauliL {
                    party: 2,
                    shift: 1,
                    clock: 0,
                },
            ],
            check_privacy: true,
            classical: Some(ClassicalNmssParams::desk_default()),
        };
        let j = serde_json::to_string(&nmss).unwrap();
        let back: NmssRunConfig = serde_json::from_str(&j).unwrap();
        assert_eq!(j, serde_json::to_string(&back).unwrap());

        let lrss = LrssRunConfig {
            params: LrssParams {
                b: 1,
                n_vec: 3,
                ell_leak: 1,
                epsilon: 0.25,
                p: 2,
            },
            scheme: "2of2".into(),
            colluders: vec![1],
            secret: 1,
            adversaries: vec![LeakageSpec::Trivial, LeakageSpec::Parity { target: 2 }],
        };
        let j = serde_json::to_string(&lrss).unwrap();
        let back: LrssRunConfig = serde_json::from_str(&j).unwrap();
        assert_eq!(j, serde_json::to_string(&back).unwrap());
    }
}
