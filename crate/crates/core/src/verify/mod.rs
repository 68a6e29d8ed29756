//! Independent Eulerian reference and numerical checks of the operator
//! bounds, contraction, data dependence and chord-arc estimates.
//!
//! Bound constants are fitted, never assumed: a check measures the left
//! side of an estimate over a sweep, fits the constant at one sample and
//! passes when every sample stays below the fitted shape with 10% slack.

mod bounds;
mod eulerian;
mod runs;

pub use bounds::{
    check_comm_g_bound, check_comm_u_bound, check_g_bound, check_steady_comm_bound, check_u_bound,
    SteadyCommInputs,
};
pub use eulerian::{eulerian_reference, EulerianRun};
pub use runs::{
    check_chord_arc, check_contraction, check_lipschitz_data, check_uniqueness, compare_solvers,
    shear_chord_arc, Comparison, ContractionInputs, Perturbation,
};

use serde::Serialize;

/// Relative slack of fitted-bound checks.
pub const BOUND_SLACK: f64 = 0.1;

/// One point of a sweep: the swept parameter, the measured left side and
/// the threshold it is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub scale: f64,
    pub measured: f64,
    pub bound: f64,
}

/// Outcome of one numerical check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub bound_name: String,
    pub fitted_constant: f64,
    /// Leading power of the swept parameter in the predicted shape.
    pub scaling_exponent: f64,
    pub samples: Vec<Sample>,
    /// Extra scalar diagnostics, e.g. growth factors of a refinement study.
    pub details: Vec<(String, f64)>,
    pub pass: bool,
    /// Index of the first sample above its threshold.
    pub first_violation: Option<usize>,
}

impl BoundCheckReport {
    /// Fits `measured <= C shape(scale)` at sample `fit_at` and checks every
    /// sample against `(1 + slack) C shape(scale)`.
    pub fn fitted(
        name: &str,
        scaling_exponent: f64,
        points: &[(f64, f64, f64)],
        fit_at: usize,
        slack: f64,
    ) -> Self {
        // points: (scale, measured, shape)
        let (_, m, s) = points[fit_at];
        let c = if s > 0.0 { m / s } else { 0.0 };
        let samples: Vec<Sample> = points
            .iter()
            .map(|&(scale, measured, shape)| Sample {
                scale,
                measured,
                bound: (1.0 + slack) * c * shape,
            })
            .collect();
        let first_violation = samples
            .iter()
            .position(|s| !(s.measured <= s.bound || s.measured <= 1e-300));
        Self {
            bound_name: name.to_string(),
            fitted_constant: c,
            scaling_exponent,
            samples,
            details: Vec::new(),
            pass: first_violation.is_none(),
            first_violation,
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.to_string(), value));
        self
    }

    /// Forces failure with a reason recorded in the details.
    pub fn fail(mut self, reason: &str) -> Self {
        self.pass = false;
        self.details.push((reason.to_string(), 1.0));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{}: {} (C = {:.4e}, {} samples{})",
            self.bound_name,
            if self.pass { "pass" } else { "FAIL" },
            self.fitted_constant,
            self.samples.len(),
            match self.first_violation {
                Some(i) => format!(", first violation at sample {i}"),
                None => String::new(),
            }
        )
    }
}
