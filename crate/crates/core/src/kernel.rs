//! The assembled kernel `K_θ(x) = Σ_n λ_θ(n) n^{-1/2} g_θ(x - log n)` and the
//! generic kernel interface consumed by [`crate::fredholm`].

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::archimedean::{self, ArchParams};
use crate::arith::{self, LambdaTable};
use crate::cheb::{self, ChebPiece, FitOptions, PiecewiseCheb};
use crate::error::{Error, Result};
use crate::quad;
use crate::report::TransformCheckReport;

/// Default evaluation range; operators on `[-t, t]` then allow `t ≤ 4`.
pub const DEFAULT_X_MAX: f64 = 8.0;
/// Largest supported range (`n_cut ≈ 22027`).
pub const MAX_X_MAX: f64 = 10.0;

/// A real kernel `K(u)` for the operator `f ↦ ∫ K(x + y) f(y) dy`.
pub trait Kernel: Send + Sync {
    fn value(&self, u: f64) -> f64;

    fn derivative(&self, u: f64) -> f64;

    /// Points in the open interval `(lo, hi)` where `K` or `K'` is not
    /// smooth, sorted ascending. Just to the right of such a point the
    /// kernel may behave like `(u - u_b)^β` with `β > 0`.
    fn breakpoints(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Largest argument the kernel can be evaluated at.
    fn x_max(&self) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> String;
}

/// `K ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroKernel;

impl Kernel for ZeroKernel {
    fn value(&self, _u: f64) -> f64 {
        0.0
    }

    fn derivative(&self, _u: f64) -> f64 {
        0.0
    }

    fn name(&self) -> String {
        "zero".into()
    }
}

/// `K(u) = c e^{-u}` on the whole line, so `K(x + y) = c e^{-x} e^{-y}` is
/// rank one and `det(1 ± 𝖪[t]) = 1 ± c sinh(2t)`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialKernel {
    pub c: f64,
}

impl ExponentialKernel {
    pub fn det_closed_form(&self, t: f64, sign: i8) -> f64 {
        1.0 + f64::from(sign) * self.c * (2.0 * t).sinh()
    }
}

impl Kernel for ExponentialKernel {
    fn value(&self, u: f64) -> f64 {
        self.c * (-u).exp()
    }

    fn derivative(&self, u: f64) -> f64 {
        -self.c * (-u).exp()
    }

    fn name(&self) -> String {
        format!("exponential(c={})", self.c)
    }
}

/// Which approximation of the archimedean density `g_θ` the kernel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityModel {
    /// The finite Bessel-kernel sum `g^N`; its error grows quickly with `x`.
    Series,
    /// The exact representation of `g` through `Ψ`, with `Ψ ← Ψ^N`.
    #[default]
    ClosedForm,
}

impl DensityModel {
    fn eval(self, params: &ArchParams, x: f64) -> f64 {
        match self {
            DensityModel::Series => archimedean::g_approx(params, x),
            DensityModel::ClosedForm => {
                archimedean::g_closed_form(params, x).unwrap_or(f64::NAN)
            }
        }
    }
}

impl std::str::FromStr for DensityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(DensityModel::Series),
            "closed_form" | "closed-form" => Ok(DensityModel::ClosedForm),
            _ => Err(Error::Precondition(format!("unknown density model '{s}'"))),
        }
    }
}

/// Build parameters echoed into every output file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMeta {
    pub theta: f64,
    #[serde(rename = "N")]
    pub order: usize,
    pub x_max: f64,
    pub n_cut: usize,
    pub density: DensityModel,
}

/// `K_θ` on `[0, x_max]` with truncation metadata.
///
/// Three evaluation paths are exposed:
/// [`value_direct`](Self::value_direct) sums the exact `g^N` series,
/// [`value_summed`](Self::value_summed) sums a Chebyshev cache of `g^N`, and
/// the [`Kernel`] impl reads a lazily built Chebyshev cache of `K` itself on
/// each interval `[log n, log(n+1)]`, so no interpolant spans a kink.
pub struct KernelProfile {
    params: ArchParams,
    model: DensityModel,
    lambda: Arc<LambdaTable>,
    x_max: f64,
    n_cut: usize,
    /// `log_n[i] = log(i + 1)`.
    log_n: Vec<f64>,
    /// `λ(n)/√n` at index `n - 1`.
    coeff: Vec<f64>,
    g: PiecewiseCheb,
    intervals: Vec<OnceLock<Vec<ChebPiece>>>,
}

impl std::fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelProfile")
            .field("meta", &self.meta())
            .finish_non_exhaustive()
    }
}

/// Builds the profile with the default density model; `x_max ≤ 10`.
pub fn build_kernel(theta: f64, order: usize, x_max: f64) -> Result<KernelProfile> {
    build_kernel_with(theta, order, x_max, DensityModel::default())
}

pub fn build_kernel_with(
    theta: f64,
    order: usize,
    x_max: f64,
    model: DensityModel,
) -> Result<KernelProfile> {
    if !(x_max > 0.0 && x_max <= MAX_X_MAX) {
        return Err(Error::Precondition(format!(
            "x_max must lie in (0, {MAX_X_MAX}], got {x_max}"
        )));
    }
    let params = ArchParams::new(theta, order, x_max)?;
    let n_cut = x_max.exp().ceil() as usize;
    let lambda = arith::lambda_table_cached(theta, n_cut)?;
    let log_n: Vec<f64> = (1..=n_cut).map(|n| (n as f64).ln()).collect();
    let coeff: Vec<f64> = (1..=n_cut)
        .map(|n| lambda.get(n) / (n as f64).sqrt())
        .collect();
    let g = PiecewiseCheb::fit(
        |x| model.eval(&params, x),
        &[0.0, x_max],
        true,
        FitOptions {
            // the closed form carries quadrature noise near 1e-13
            abs_floor: if model == DensityModel::ClosedForm { 1e-11 } else { 1e-300 },
            ..FitOptions::default()
        },
    );
    let count = log_n.partition_point(|&l| l <= x_max);
    let intervals = (0..count).map(|_| OnceLock::new()).collect();
    Ok(KernelProfile {
        params,
        model,
        lambda,
        x_max,
        n_cut,
        log_n,
        coeff,
        g,
        intervals,
    })
}

impl KernelProfile {
    pub fn theta(&self) -> f64 {
        self.params.theta()
    }

    pub fn order(&self) -> usize {
        self.params.order()
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn params(&self) -> &ArchParams {
        &self.params
    }

    pub fn lambda(&self) -> &LambdaTable {
        &self.lambda
    }

    pub fn meta(&self) -> KernelMeta {
        KernelMeta {
            theta: self.theta(),
            order: self.order(),
            x_max: self.x_max,
            n_cut: self.n_cut,
            density: self.model,
        }
    }

    pub fn density_model(&self) -> DensityModel {
        self.model
    }

    /// The density the profile is built from, evaluated without caching.
    pub fn density(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }

    /// Number of `n` with `log n ≤ x`.
    fn terms(&self, x: f64) -> usize {
        self.log_n.partition_point(|&l| l <= x)
    }

    /// Summation over `n ≤ e^x` with the density evaluated afresh.
    pub fn value_direct(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (0..self.terms(x))
            .rev()
            .map(|i| self.coeff[i] * self.density(x - self.log_n[i]))
            .sum()
    }

    fn summed_with(&self, x: f64, terms: usize, deriv: bool) -> f64 {
        (0..terms)
            .rev()
            .map(|i| {
                let y = x - self.log_n[i];
                let gy = if deriv { self.g.derivative(y) } else { self.g.eval(y) };
                self.coeff[i] * gy
            })
            .sum()
    }

    fn abs_terms(&self, x: f64, terms: usize) -> f64 {
        (0..terms)
            .map(|i| (self.coeff[i] * self.g.eval(x - self.log_n[i])).abs())
            .sum()
    }

    /// Summation over `n ≤ e^x` using the cached density.
    pub fn value_summed(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.x_max {
            return if x < 0.0 { 0.0 } else { f64::NAN };
        }
        self.summed_with(x, self.terms(x), false)
    }

    /// `K'` by summation of the cached density derivative.
    pub fn derivative_summed(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.x_max {
            return if x < 0.0 { 0.0 } else { f64::NAN };
        }
        self.summed_with(x, self.terms(x), true)
    }

    fn interval(&self, x: f64) -> Option<&ChebPiece> {
        let n = self.terms(x);
        let slot = self.intervals.get(n.checked_sub(1)?)?;
        let pieces = slot.get_or_init(|| {
            let a = self.log_n[n - 1];
            let b = self.log_n.get(n).copied().unwrap_or(f64::INFINITY).min(self.x_max);
            let mut out = Vec::new();
            if b > a {
                // cancellation between terms sets the attainable accuracy
                let magnitude = [a, 0.5 * (a + b), b]
                    .iter()
                    .map(|&y| self.abs_terms(y, n))
                    .fold(0.0, f64::max);
                let opts = FitOptions {
                    abs_floor: magnitude,
                    ..FitOptions::default()
                };
                let mut f = |y: f64| self.summed_with(y, n, false);
                cheb::fit_interval(&mut f, a, b, true, opts, &mut out);
            }
            out
        });
        if pieces.is_empty() {
            return None;
        }
        let idx = pieces.partition_point(|p| p.b <= x);
        pieces.get(idx.min(pieces.len() - 1))
    }

    /// `max |K(x)| e^{-x/2}` over a uniform grid of `samples` points on
    /// `[0, x_max]`.
    pub fn growth_constant(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|i| {
                let x = self.x_max * i as f64 / (samples - 1) as f64;
                self.value_summed(x).abs() * (-0.5 * x).exp()
            })
            .fold(0.0, f64::max)
    }
}

impl Kernel for KernelProfile {
    fn value(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self.interval(u) {
            Some(p) if u <= self.x_max => p.eval(u),
            _ => f64::NAN,
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self.interval(u) {
            Some(p) if u <= self.x_max => p.derivative(u),
            _ => f64::NAN,
        }
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let start = self.log_n.partition_point(|&l| l <= lo);
        self.log_n[start..]
            .iter()
            .copied()
            .take_while(|&l| l < hi)
            .collect()
    }

    fn x_max(&self) -> f64 {
        self.x_max
    }

    fn name(&self) -> String {
        format!("K_theta(theta={}, N={}, {:?})", self.theta(), self.order(), self.model)
    }
}

/// `rhs = exp(-2θ(γ'/γ(σ) + ζ'/ζ(σ)))`.
pub fn kernel_transform_exact(theta: f64, sigma: f64) -> Result<f64> {
    let gamma = archimedean::gamma_factor_log_deriv(sigma)?;
    let zeta = arith::zeta_log_deriv(sigma)?;
    Ok((-2.0 * theta * (gamma + zeta)).exp())
}

/// `∫_0^X K_θ(x) e^{-(σ-1/2)x} dx` against the exact transform; fails with
/// [`Error::TailBound`] when the certified tail exceeds `tol` relative to
/// the right-hand side.
pub fn kernel_laplace_check(
    profile: &KernelProfile,
    sigma: f64,
    x_cut: f64,
    tol: f64,
) -> Result<TransformCheckReport> {
    let report = kernel_laplace_report(profile, sigma, x_cut, tol)?;
    let rel_tail = report.tail_bound / report.rhs.abs();
    if rel_tail > tol {
        return Err(Error::TailBound {
            bound: rel_tail,
            tolerance: tol,
        });
    }
    Ok(report)
}

/// Same as [`kernel_laplace_check`] but always returns the report.
///
/// Reorganised as `Σ_{log n ≤ X} λ(n) n^{-σ} G(X - log n)` with
/// `G(u) = ∫_0^u g(y) e^{-(σ-1/2)y} dy` accumulated over the sorted
/// `X - log n`. The tail bound adds `∫_{X - log n}^∞ |g| e^{...}` for every
/// kept `n` and the Dirichlet remainder `Σ_{n > e^X} λ(n) n^{-σ}` (the full
/// series minus the kept terms) times `∫_0^∞ |g| e^{...}` for the rest.
pub fn kernel_laplace_report(
    profile: &KernelProfile,
    sigma: f64,
    x_cut: f64,
    tol: f64,
) -> Result<TransformCheckReport> {
    if !(sigma >= 2.0) {
        return Err(Error::Precondition(format!("sigma must be at least 2, got {sigma}")));
    }
    if !(x_cut > 0.0 && x_cut <= profile.x_max) {
        return Err(Error::Precondition(format!(
            "cut {x_cut} outside (0, x_max = {}]",
            profile.x_max
        )));
    }
    let theta = profile.theta();
    let k = sigma - 0.5;
    let g = |y: f64| if y <= profile.x_max { profile.g.eval(y) } else { profile.density(y) };
    let f = |y: f64| g(y) * (-k * y).exp();
    let terms = profile.terms(x_cut);

    // u_n = X - log n ascending means n descending
    let mut cum = 0.0;
    let mut cum_abs = 0.0;
    let mut cum_err = 0.0;
    let mut prev = 0.0;
    let mut lhs = 0.0;
    let mut quad_err = 0.0;
    let mut partial_abs = Vec::with_capacity(terms);
    for i in (0..terms).rev() {
        let u = (x_cut - profile.log_n[i]).max(0.0);
        if u > prev {
            let graded = prev == 0.0;
            let fine = quad::integrate(f, prev, u, 10, graded);
            let coarse = quad::integrate(f, prev, u, 6, graded);
            cum += fine;
            cum_abs += quad::integrate(|y| f(y).abs(), prev, u, 10, graded);
            cum_err += (fine - coarse).abs();
            prev = u;
        }
        let n = (i + 1) as f64;
        let w = profile.lambda.get(i + 1) * n.powf(-sigma);
        lhs += w * cum;
        quad_err += w * cum_err;
        partial_abs.push((w, cum_abs));
    }
    let beyond = quad::integrate_to_infinity(|y| f(y).abs(), x_cut, false, 30, 1e-12);
    let total_abs = cum_abs + beyond.value + beyond.error;
    let mut tail = 0.0;
    for &(w, ca) in &partial_abs {
        tail += w * ((total_abs - ca).max(0.0) + 1e-15 * total_abs);
    }
    // λ_θ ≥ 0, so the Dirichlet tail is the full series minus the kept part
    let kept: f64 = (1..=terms)
        .rev()
        .map(|n| profile.lambda.get(n) * (n as f64).powf(-sigma))
        .sum();
    let series = (-2.0 * theta * arith::zeta_log_deriv(sigma)?).exp();
    tail += ((series - kept).max(0.0) + 1e-14 * series) * total_abs;
    let rhs = kernel_transform_exact(theta, sigma)?;
    Ok(TransformCheckReport::new(
        "K_theta", theta, sigma, lhs, rhs, tail, quad_err, tol,
    ))
}
