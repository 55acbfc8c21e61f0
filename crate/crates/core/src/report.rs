//! Serializable report rows shared by the kernel check and the verification
//! suites.

use serde::Serialize;

/// Floor used in relative errors so that vanishing right-hand sides do not
/// blow up the ratio.
pub const REL_FLOOR: f64 = 1e-300;

/// One real-axis transform identity instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformCheckReport {
    pub label: String,
    pub theta: f64,
    pub sigma: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    /// Certified bound on the neglected part of the left-hand side.
    pub tail_bound: f64,
    pub quadrature_estimate_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl TransformCheckReport {
    /// Fills in `rel_err` and `pass`. The relative budget is
    /// `(tail + quadrature) / |rhs|`; a row passes when the residual stays
    /// below `tolerance` minus that budget.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        theta: f64,
        sigma: f64,
        lhs: f64,
        rhs: f64,
        tail_bound: f64,
        quadrature_estimate_error: f64,
        tolerance: f64,
    ) -> Self {
        let scale = rhs.abs().max(REL_FLOOR);
        let rel_err = (lhs - rhs).abs() / scale;
        let budget = (tail_bound + quadrature_estimate_error) / scale;
        Self {
            label: label.into(),
            theta,
            sigma,
            lhs,
            rhs,
            rel_err,
            tail_bound,
            quadrature_estimate_error,
            tolerance,
            pass: rel_err.is_finite() && budget < tolerance && rel_err <= tolerance - budget,
        }
    }

    pub fn budget(&self) -> f64 {
        (self.tail_bound + self.quadrature_estimate_error) / self.rhs.abs().max(REL_FLOOR)
    }
}

/// One identity instance at a fixed `(θ, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub theta: f64,
    pub t: f64,
    pub residual: f64,
    /// Estimated numerical error carried by the residual itself.
    pub budget: f64,
    pub tolerance: f64,
    /// False when `t` lies at or beyond the first determinant zero, where
    /// the identity is not asserted.
    pub applicable: bool,
    pub pass: bool,
}

impl IdentityReport {
    pub fn new(name: &str, theta: f64, t: f64, residual: f64, budget: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            theta,
            t,
            residual,
            budget,
            tolerance,
            applicable: true,
            pass: residual.is_finite() && residual <= tolerance - budget,
        }
    }

    pub fn not_applicable(name: &str, theta: f64, t: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            theta,
            t,
            residual: f64::NAN,
            budget: f64::NAN,
            tolerance,
            applicable: false,
            pass: false,
        }
    }

    /// Counts against a suite only when applicable.
    pub fn failed(&self) -> bool {
        self.applicable && !self.pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_tightens_pass() {
        let r = TransformCheckReport::new("k", 2.0, 3.0, 1.0 + 5e-7, 1.0, 0.0, 0.0, 1e-6);
        assert!(r.pass);
        let r = TransformCheckReport::new("k", 2.0, 3.0, 1.0 + 5e-7, 1.0, 6e-7, 0.0, 1e-6);
        assert!(!r.pass);
        let r = IdentityReport::new("m", 2.0, 1.0, 1e-7, 1e-8, 1e-6);
        assert!(r.pass && !r.failed());
        assert!(!IdentityReport::not_applicable("m", 2.0, 1.0, 1e-6).failed());
    }
}
