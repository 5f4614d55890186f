//! Min-entropy checks for qpa-states: purified adversary states whose two
//! classical sources keep enough min-entropy against the other side's
//! registers.

use crate::qmatrix::{hmin, partial_trace, DensityOperator, HminBracket};
use crate::Result;

/// Register names for a qpa-state layout: classical sources `X`, `Y`, their
/// copies, and the two side-information registers.
#[derive(Debug, Clone)]
pub struct QpaRegisters {
    pub x: String,
    pub x_hat: String,
    pub y: String,
    pub y_hat: String,
    pub w1: String,
    pub w2: String,
}

impl Default for QpaRegisters {
    fn default() -> Self {
        Self {
            x: "X".into(),
            x_hat: "Xhat".into(),
            y: "Y".into(),
            y_hat: "Yhat".into(),
            w1: "W1".into(),
            w2: "W2".into(),
        }
    }
}

/// Outcome of a qpa-state check: both min-entropy brackets and whether the
/// lower brackets clear the thresholds.
#[derive(Debug, Clone)]
pub struct QpaReport {
    pub h_x_given_w2yy: HminBracket,
    pub h_y_given_w1xx: HminBracket,
    pub k1: f64,
    pub k2: f64,
}

impl QpaReport {
    /// True only when the certified lower brackets clear both thresholds.
    pub fn passes(&self) -> bool {
        self.h_x_given_w2yy.lower >= self.k1 - 1e-9 && self.h_y_given_w1xx.lower >= self.k2 - 1e-9
    }
}

/// Evaluate `H_min(X | W2 Y Yhat) >= k1` and `H_min(Y | W1 X Xhat) >= k2`.
pub fn qpa_check(
    state: &DensityOperator,
    regs: &QpaRegisters,
    k1: f64,
    k2: f64,
) -> Result<QpaReport> {
    let tol = 1e-6;
    let x_side = partial_trace(state, &[regs.w1.as_str(), regs.x_hat.as_str()])?;
    let h_x = hmin(&x_side, &regs.x, tol)?;
    let y_side = partial_trace(state, &[regs.w2.as_str(), regs.y_hat.as_str()])?;
    let h_y = hmin(&y_side, &regs.y, tol)?;
    Ok(QpaReport {
        h_x_given_w2yy: h_x,
        h_y_given_w1xx: h_y,
        k1,
        k2,
    })
}
