//! Archimedean densities built from the Bessel kernels
//! `Ψ⁰_{θ,α}(x) = e^{-x/2} (x/α)^{(θ-1)/2} I_{θ-1}(2√(αx))`.
//!
//! Laplace pairs on the real axis (`z = i(σ - 1/2)`):
//!
//! | density                         | transform                                   |
//! |---------------------------------|---------------------------------------------|
//! | `Ψ⁰_{θ,α}`                      | `σ^{-θ} e^{α/σ}`                            |
//! | `Ψ^{1,N}`                       | `Σ_{n<N} C̃_n σ^{-n}`                        |
//! | `Ψ^N = Σ C̃_n Ψ⁰_{θ+n,θ}`        | `≈ exp(-θψ(σ))`                             |
//! | `Ψ²_{θ,α}(x) = 2e^{-3x/2}Ψ⁰(2x)` | `w^{-θ} e^{α/w}`, `w = (σ+2)/2`             |
//! | `g^N = π^θ Σ A_n Ψ²_{θ+n,θ}`     | `≈ exp(-2θ γ'/γ(σ))`                        |
//!
//! The expansions behind `Ψ^N` and `g^N` are asymptotic in `σ`; their
//! accuracy at fixed `N` degrades as `σ` decreases.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fps::{self, RationalPoly};
use crate::quad::{self, Estimate};
use crate::specfun::{bessel_j1_over_z, digamma, ln_gamma};

/// Largest supported expansion order.
pub const MAX_ORDER: usize = fps::DEFAULT_ORDER;
/// Default expansion order.
pub const DEFAULT_ORDER: usize = 14;
/// Default validity range.
pub const DEFAULT_X_MAX: f64 = 6.0;

/// `e^{-y/2} y^{θ-1} Σ_k c_k y^k / Γ(θ+k)` for `y ≥ 0`.
///
/// All Bessel-kernel densities reduce to this form; the prefactor is taken
/// from logarithms so neither large nor small `y` overflows.
fn kernel_series<C: Fn(usize) -> f64>(
    theta: f64,
    alpha: f64,
    y: f64,
    extra_exp: f64,
    coeff: C,
) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    if y == 0.0 {
        return if theta > 1.0 {
            0.0
        } else if theta == 1.0 {
            coeff(0) * extra_exp.exp()
        } else {
            f64::INFINITY
        };
    }
    let lg = ln_gamma(theta).unwrap_or(f64::NAN);
    let mut r = ((theta - 1.0) * y.ln() - 0.5 * y + extra_exp - lg).exp();
    if r == 0.0 {
        // prefactor underflowed; restart the recursion in log space near the peak
        return kernel_series_log(theta, alpha, y, extra_exp, coeff);
    }
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    // the terms peak near k = √(αy)
    let k_peak = 2.0 * (alpha * y).sqrt() + 30.0;
    for k in 0..4000 {
        let term = coeff(k) * r;
        sum += term;
        abs_sum += term.abs();
        if k as f64 > k_peak && term.abs() <= 1e-17 * abs_sum {
            break;
        }
        r *= y / (theta + k as f64);
        if !r.is_finite() {
            return kernel_series_log(theta, alpha, y, extra_exp, coeff);
        }
    }
    sum
}

fn kernel_series_log<C: Fn(usize) -> f64>(
    theta: f64,
    alpha: f64,
    y: f64,
    extra_exp: f64,
    coeff: C,
) -> f64 {
    let base = (theta - 1.0) * y.ln() - 0.5 * y + extra_exp;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let k_peak = 2.0 * (alpha * y).sqrt() + 30.0;
    for k in 0..4000 {
        let c = coeff(k);
        if c != 0.0 {
            let lt = base + k as f64 * y.ln() - ln_gamma(theta + k as f64).unwrap_or(f64::NAN);
            let term = c * lt.exp();
            sum += term;
            abs_sum += term.abs();
            if k as f64 > k_peak && term.abs() <= 1e-17 * abs_sum {
                break;
            }
        }
    }
    sum
}

/// Power-series coefficients `α^k / k!`, computed without overflow.
fn exp_coeff(alpha: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (k as f64 * alpha.ln() - ln_gamma(k as f64 + 1.0).unwrap_or(f64::NAN)).exp()
}

fn check_theta_alpha(func: &'static str, theta: f64, alpha: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(func, theta, "theta > 0 required"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain(func, alpha, "alpha > 0 required"));
    }
    Ok(())
}

/// `Ψ⁰_{θ,α}(x) = e^{-x/2} Σ_m α^m x^{m+θ-1} / (m! Γ(θ+m))`, zero for `x < 0`.
pub fn psi0(theta: f64, alpha: f64, x: f64) -> Result<f64> {
    check_theta_alpha("psi0", theta, alpha)?;
    if x.is_nan() {
        return Err(domain("psi0", x, "x must not be NaN"));
    }
    Ok(kernel_series(theta, alpha, x, 0.0, |k| exp_coeff(alpha, k)))
}

/// `Ψ²_{θ,α}(x) = 2 e^{-3x/2} Ψ⁰_{θ,α}(2x)`.
pub fn psi2(theta: f64, alpha: f64, x: f64) -> Result<f64> {
    check_theta_alpha("psi2", theta, alpha)?;
    if x.is_nan() {
        return Err(domain("psi2", x, "x must not be NaN"));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * kernel_series(theta, alpha, 2.0 * x, -1.5 * x, |k| exp_coeff(alpha, k)))
}

/// `θ`, truncation order and validity range, plus the evaluated expansion
/// coefficients.
#[derive(Debug, Clone)]
pub struct ArchParams {
    theta: f64,
    order: usize,
    x_max: f64,
    c_tilde_exact: Vec<RationalPoly>,
    a_exact: Vec<RationalPoly>,
    /// `C̃_0 = 1, C̃_1, …, C̃_{N-1}` at this `θ`.
    c_tilde: Vec<f64>,
    /// `A_0 = 1, A_1, …, A_{N-1}` at this `θ`.
    a: Vec<f64>,
    psi_coeffs: Vec<f64>,
    g_coeffs: Vec<f64>,
}

const SERIES_TERMS: usize = 600;

fn convolved_coeffs(theta: f64, corr: &[f64]) -> Vec<f64> {
    // c_k = Σ_{n ≤ min(k, N-1)} corr_n θ^{k-n}/(k-n)!
    let e: Vec<f64> = (0..SERIES_TERMS).map(|k| exp_coeff(theta, k)).collect();
    (0..SERIES_TERMS)
        .map(|k| {
            (0..corr.len().min(k + 1))
                .map(|n| corr[n] * e[k - n])
                .sum()
        })
        .collect()
}

impl ArchParams {
    pub fn new(theta: f64, order: usize, x_max: f64) -> Result<Self> {
        if !(theta > 1.0) || !theta.is_finite() {
            return Err(Error::Precondition(format!("theta must exceed 1, got {theta}")));
        }
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::Precondition(format!(
                "order must lie in 2..={MAX_ORDER}, got {order}"
            )));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::Precondition(format!("x_max must be positive, got {x_max}")));
        }
        let c_tilde_exact = fps::derive_c_tilde(order)?;
        let a_exact = fps::derive_a(order)?;
        let c_tilde = fps::evaluate_with_unit(&c_tilde_exact, theta);
        let a = fps::evaluate_with_unit(&a_exact, theta);
        let psi_coeffs = convolved_coeffs(theta, &c_tilde);
        let g_coeffs = convolved_coeffs(theta, &a);
        Ok(Self {
            theta,
            order,
            x_max,
            c_tilde_exact,
            a_exact,
            c_tilde,
            a,
            psi_coeffs,
            g_coeffs,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn c_tilde(&self) -> &[f64] {
        &self.c_tilde
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn c_tilde_exact(&self) -> &[RationalPoly] {
        &self.c_tilde_exact
    }

    pub fn a_exact(&self) -> &[RationalPoly] {
        &self.a_exact
    }
}

fn coeff_at(c: &[f64], k: usize) -> f64 {
    c.get(k).copied().unwrap_or(0.0)
}

/// A density value with an optional split into leading term and corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEval {
    pub x: f64,
    pub value: f64,
    pub leading: Option<f64>,
    pub correction: Option<f64>,
}

/// `Ψ^{1,N}(x) = e^{-x/2} Σ_{n=1}^{N-1} C̃_n x^{n-1}/(n-1)!` on `x ≥ 0`.
pub fn psi1_approx(params: &ArchParams, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 0.0;
    for (n, c) in params.c_tilde.iter().enumerate().skip(1) {
        if n > 1 {
            term *= x / (n - 1) as f64;
        }
        sum += c * term;
    }
    (-0.5 * x).exp() * sum
}

/// `Ψ^N(x) = Σ_{n=0}^{N-1} C̃_n Ψ⁰_{θ+n,θ}(x)`, summed as a single series.
pub fn psi_approx(params: &ArchParams, x: f64) -> f64 {
    kernel_series(params.theta, params.theta, x, 0.0, |k| coeff_at(&params.psi_coeffs, k))
}

/// `Ψ^N` as the literal finite sum of Bessel kernels (slower; an oracle for
/// [`psi_approx`]).
pub fn psi_approx_literal(params: &ArchParams, x: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (n, c) in params.c_tilde.iter().enumerate() {
        acc += c * psi0(params.theta + n as f64, params.theta, x)?;
    }
    Ok(acc)
}

/// `Ψ^N(x) = Ψ⁰_{θ,θ}(x) + ∫_0^x Ψ⁰_{θ,θ}(u) Ψ^{1,N}(x-u) du` by adaptive
/// quadrature.
pub fn psi_approx_convolution(params: &ArchParams, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return psi0(params.theta, params.theta, x);
    }
    let theta = params.theta;
    let conv = quad::adaptive(
        |u| psi0(theta, theta, u).unwrap_or(f64::NAN) * psi1_approx(params, x - u),
        0.0,
        x,
        1e-14,
        true,
    );
    Ok(psi0(theta, theta, x)? + conv.value)
}

/// `Ψ^N` with leading/correction split.
pub fn psi_eval(params: &ArchParams, x: f64) -> Result<DensityEval> {
    let lead = psi0(params.theta, params.theta, x)?;
    let value = psi_approx(params, x);
    Ok(DensityEval {
        x,
        value,
        leading: Some(lead),
        correction: Some(value - lead),
    })
}

/// `g^N(x) = π^θ Σ_{n=0}^{N-1} A_n Ψ²_{θ+n,θ}(x)`.
pub fn g_approx(params: &ArchParams, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let theta = params.theta;
    let pref = theta * std::f64::consts::PI.ln() - 1.5 * x;
    2.0 * kernel_series(theta, theta, 2.0 * x, pref, |k| coeff_at(&params.g_coeffs, k))
}

/// `g^N` with the split `π^θ Ψ²_{θ,θ}` + corrections.
pub fn g_eval(params: &ArchParams, x: f64) -> Result<DensityEval> {
    let lead = std::f64::consts::PI.powf(params.theta) * psi2(params.theta, params.theta, x)?;
    let value = g_approx(params, x);
    Ok(DensityEval {
        x,
        value,
        leading: Some(lead),
        correction: Some(value - lead),
    })
}

/// `g` from the exact representation
/// `2π^θ e^{-3x/2} Ψ(2x) - 4θπ^θ e^{-3x/2} ∫_0^x Ψ(2(x-y)) e^{2y} J₁(2√(2θy))/√(2θy) dy`
/// with `Ψ ← Ψ^N`, by adaptive quadrature.
pub fn g_closed_form(params: &ArchParams, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let theta = params.theta;
    if 2.0 * (2.0 * theta * x).sqrt() > crate::specfun::BESSEL_Z_MAX {
        return Err(domain("g_closed_form", x, "Bessel argument beyond 60"));
    }
    let pi_t = std::f64::consts::PI.powf(theta);
    // substitute y = x - u so the Ψ endpoint behaviour u^{θ-1} sits at u = 0
    let integral = quad::adaptive(
        |u| {
            let y = x - u;
            let z = 2.0 * (2.0 * theta * y.max(0.0)).sqrt();
            let j = 2.0 * bessel_j1_over_z(z).unwrap_or(f64::NAN);
            psi_approx(params, 2.0 * u) * (2.0 * y - 1.5 * x).exp() * j
        },
        0.0,
        x,
        1e-15,
        true,
    );
    let lead = 2.0 * pi_t * (-1.5 * x).exp() * psi_approx(params, 2.0 * x);
    Ok(lead - 4.0 * theta * pi_t * integral.value)
}

/// `γ'/γ(σ)` for `γ(s) = s(s-1)π^{-s/2}Γ(s/2)/2`.
pub fn gamma_factor_log_deriv(sigma: f64) -> Result<f64> {
    if !(sigma > 1.0) {
        return Err(domain("gamma_factor_log_deriv", sigma, "sigma > 1 required"));
    }
    Ok(1.0 / sigma + 1.0 / (sigma - 1.0) - 0.5 * std::f64::consts::PI.ln()
        + 0.5 * digamma(0.5 * sigma)?)
}

/// Densities with a closed-form Laplace transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Psi0 { alpha: f64 },
    Psi1,
    Psi,
    Psi2 { alpha: f64 },
    G,
}

impl Density {
    pub fn name(&self) -> &'static str {
        match self {
            Density::Psi0 { .. } => "psi0",
            Density::Psi1 => "psi1",
            Density::Psi => "psi",
            Density::Psi2 { .. } => "psi2",
            Density::G => "g",
        }
    }

    pub fn eval(&self, params: &ArchParams, x: f64) -> Result<f64> {
        match *self {
            Density::Psi0 { alpha } => psi0(params.theta, alpha, x),
            Density::Psi1 => Ok(psi1_approx(params, x)),
            Density::Psi => Ok(psi_approx(params, x)),
            Density::Psi2 { alpha } => psi2(params.theta, alpha, x),
            Density::G => Ok(g_approx(params, x)),
        }
    }

    /// Exact transform `∫_0^∞ f(x) e^{-(σ-1/2)x} dx` of the density the
    /// approximation targets.
    pub fn exact_transform(&self, params: &ArchParams, sigma: f64) -> Result<f64> {
        let theta = params.theta;
        if !(sigma > 1.0) {
            return Err(domain("exact_transform", sigma, "sigma > 1 required"));
        }
        Ok(match *self {
            Density::Psi0 { alpha } => sigma.powf(-theta) * (alpha / sigma).exp(),
            Density::Psi1 => {
                (theta * sigma.ln() - theta * digamma(sigma)? - theta / sigma).exp() - 1.0
            }
            Density::Psi => (-theta * digamma(sigma)?).exp(),
            Density::Psi2 { alpha } => {
                let w = 0.5 * (sigma + 2.0);
                w.powf(-theta) * (alpha / w).exp()
            }
            Density::G => (-2.0 * theta * gamma_factor_log_deriv(sigma)?).exp(),
        })
    }
}

/// `∫_0^∞ f(x) e^{-(σ-1/2)x} dx` with a graded first panel; the returned
/// error is the tail estimate plus a 30-vs-20-point panel comparison.
pub fn laplace_numeric<F: Fn(f64) -> f64>(f: F, sigma: f64) -> Estimate {
    let k = sigma - 0.5;
    let fine = quad::integrate_to_infinity(|x| f(x) * (-k * x).exp(), 0.0, true, 30, 1e-17);
    let coarse = quad::integrate_to_infinity(|x| f(x) * (-k * x).exp(), 0.0, true, 20, 1e-17);
    Estimate {
        value: fine.value,
        error: fine.error + (fine.value - coarse.value).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_i, gamma_real, RealOrder};

    #[test]
    fn psi0_matches_bessel_form() {
        for &(theta, alpha, x) in &[(2.0, 2.0, 0.7), (1.5, 3.0, 4.0), (3.0, 1.0, 10.0)] {
            let z: f64 = 2.0 * (alpha * x as f64).sqrt();
            let nu = RealOrder::new(theta - 1.0).unwrap();
            let direct = (-0.5 * x as f64).exp()
                * (x / alpha as f64).powf(0.5 * (theta - 1.0))
                * bessel_i(nu, z).unwrap();
            let got = psi0(theta, alpha, x).unwrap();
            assert!((got - direct).abs() < 1e-12 * direct.abs(), "{got} {direct}");
        }
        assert_eq!(psi0(2.0, 2.0, -0.1).unwrap(), 0.0);
        assert!(psi0(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn psi0_small_x_leading_order() {
        let theta = 2.5;
        let x = 1e-8;
        let ratio = psi0(theta, theta, x).unwrap() / x.powf(theta - 1.0);
        assert!((ratio * gamma_real(theta).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn psi0_large_argument_is_finite() {
        let v = psi0(3.0, 3.0, 400.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn psi2_is_a_composition() {
        for &x in &[0.1, 1.0, 3.0] {
            let lhs = psi2(2.0, 2.0, x).unwrap();
            let rhs = 2.0 * (-1.5 * x as f64).exp() * psi0(2.0, 2.0, 2.0 * x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs());
        }
    }

    #[test]
    fn combined_series_matches_literal_sum() {
        let p = ArchParams::new(2.0, 14, 6.0).unwrap();
        for &x in &[0.01, 0.5, 2.0, 5.0] {
            let a = psi_approx(&p, x);
            let b = psi_approx_literal(&p, x).unwrap();
            assert!((a - b).abs() < 1e-12 * b.abs().max(1e-3), "x={x} {a} {b}");
        }
    }

    #[test]
    fn psi1_low_order() {
        let p = ArchParams::new(2.0, 2, 6.0).unwrap();
        for &x in &[0.0, 0.4, 3.0] {
            let expect = -(2.0 / 2.0) * (-0.5 * x as f64).exp();
            assert!((psi1_approx(&p, x) - expect).abs() < 1e-15);
        }
        assert_eq!(psi1_approx(&p, -1.0), 0.0);
    }

    #[test]
    fn psi0_transform() {
        let p = ArchParams::new(2.0, 4, 6.0).unwrap();
        let d = Density::Psi0 { alpha: 2.0 };
        let est = laplace_numeric(|x| d.eval(&p, x).unwrap(), 2.0);
        let exact = d.exact_transform(&p, 2.0).unwrap();
        assert!((est.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ArchParams::new(1.0, 14, 6.0).is_err());
        assert!(ArchParams::new(2.0, 1, 6.0).is_err());
        assert!(ArchParams::new(2.0, 17, 6.0).is_err());
        assert!(ArchParams::new(2.0, 14, 0.0).is_err());
    }
}
