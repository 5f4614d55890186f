//! Experiment result records and their JSON-lines / CSV emission.

use crate::qmatrix::DensityOperator;
use serde::Serialize;

/// A finished tampering experiment: the final state, the simulator pair,
/// and the measured distance (recomputable from the stored fields).
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub scheme: String,
    pub adversary: String,
    pub b: usize,
    pub ell: usize,
    pub delta: f64,
    pub mode: String,
    pub p_same: f64,
    pub p_epr: f64,
    pub p_a: f64,
    pub epsilon_measured: f64,
    /// Written as zero in deterministic outputs; real timings go to stderr.
    pub wall_ms: u64,
    pub final_state: serde_json::Value,
    pub gamma: serde_json::Value,
    pub extra: serde_json::Value,
}

impl ExperimentRecord {
    pub fn csv_header() -> &'static str {
        "scheme,adversary,b,ell,delta,p_same,p_epr,p_a,epsilon_measured,wall_ms"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.scheme,
            escape_csv(&self.adversary),
            self.b,
            self.ell,
            self.delta,
            self.p_same,
            self.p_epr,
            self.p_a,
            self.epsilon_measured,
            self.wall_ms
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

fn escape_csv(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dump a density operator for a record.
pub fn state_json(state: &DensityOperator) -> serde_json::Value {
    state.to_json_matrix()
}
