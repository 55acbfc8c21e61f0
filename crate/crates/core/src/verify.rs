//! Verification campaigns.
//!
//! * [`run_transform_suite`]: Laplace transforms of every density and of
//!   `K_θ` on the real axis against their closed forms.
//! * [`run_identity_suite`]: the identity chain tying the determinant ratio
//!   `m(t)` to the solutions `Φ`, `Ψ`, `φ±` of the integral equations.
//! * [`run_k_properties`]: support, growth, variation of `K_θ'` and a
//!   determinant sweep.
//!
//! Every row carries a residual and an error budget; a row passes when the
//! residual stays below the tolerance minus the budget.

use std::sync::Arc;

use serde::Serialize;

use crate::archimedean::{ArchParams, Density};
use crate::error::{Error, Result};
use crate::fredholm::{discretize, Discretization, FieldKind, HamiltonianRow, NystromSystem};
use crate::kernel::{self, DensityModel, Kernel, KernelProfile, MAX_X_MAX};
use crate::par;
use crate::quad;
use crate::report::{IdentityReport, TransformCheckReport};

/// Tolerances and resolution shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Truncation order `N` of the density expansions.
    pub order: usize,
    pub density: DensityModel,
    pub disc: Discretization,
    /// Repeat each system with doubled panels to estimate budgets.
    pub refine: bool,
    /// Step of the central differences in `t`.
    pub fd_step: f64,
    /// Combine steps `h` and `2h` into a fourth-order difference.
    pub richardson: bool,
    /// Gauss nodes per half piece of the `τ` integral; the embedded rule
    /// has two fewer.
    pub tau_nodes: usize,
    /// Bisection depth allowed per piece of the `τ` integral.
    pub tau_max_depth: u32,
    /// Upper cut `X` of the `K_θ` transform integral.
    pub transform_x_cut: f64,
    pub tol_transform: f64,
    /// Tolerance of the `Ψ^N` rows.
    pub tol_psi: f64,
    pub tol_chain: f64,
    pub tol_fd: f64,
    /// Determinant sweep `t = step, 2 step, …, t_max`.
    pub sweep_step: f64,
    pub sweep_t_max: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            order: crate::archimedean::DEFAULT_ORDER,
            density: DensityModel::default(),
            disc: Discretization::default(),
            refine: true,
            fd_step: 1e-3,
            richardson: true,
            tau_nodes: 8,
            tau_max_depth: 0,
            transform_x_cut: MAX_X_MAX,
            tol_transform: 1e-6,
            tol_psi: 1e-7,
            tol_chain: 1e-6,
            tol_fd: 1e-4,
            sweep_step: 0.05,
            sweep_t_max: 2.0,
        }
    }
}

/// Rows of one suite with the configuration that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport<R> {
    pub suite: &'static str,
    pub theta: f64,
    pub rows: Vec<R>,
    pub config: VerifyConfig,
    pub version: &'static str,
}

impl<R> SuiteReport<R> {
    pub fn new(suite: &'static str, theta: f64, rows: Vec<R>, config: VerifyConfig) -> Self {
        Self {
            suite,
            theta,
            rows,
            config,
            version: crate::VERSION,
        }
    }
}

// ---------------------------------------------------------------------------
// transforms

/// Labels of the transform rows, in output order.
pub const TRANSFORM_LABELS: [&str; 7] =
    ["psi0", "psi1_N", "psi_N", "psi2", "g_N", "g_closed_form", "K_theta"];

/// One row per density (and one for `K_θ`) at every `σ ∈ [2, 6]`.
pub fn run_transform_suite(
    theta: f64,
    sigma_grid: &[f64],
    cfg: &VerifyConfig,
) -> Result<Vec<TransformCheckReport>> {
    if let Some(&s) = sigma_grid.iter().find(|&&s| !(2.0..=6.0).contains(&s)) {
        return Err(Error::Precondition(format!("sigma {s} outside [2, 6]")));
    }
    let profile = kernel::build_kernel_with(theta, cfg.order, cfg.transform_x_cut, cfg.density)?;
    let per_sigma = par::map(sigma_grid, |&sigma| -> Result<Vec<TransformCheckReport>> {
        let mut rows = density_rows(profile.params(), sigma, cfg)?;
        rows.push(kernel::kernel_laplace_report(
            &profile,
            sigma,
            cfg.transform_x_cut,
            cfg.tol_transform,
        )?);
        Ok(rows)
    });
    let mut out = Vec::new();
    for rows in per_sigma {
        out.extend(rows?);
    }
    Ok(out)
}

/// The density rows only (everything except `K_θ`).
pub fn density_rows(
    params: &ArchParams,
    sigma: f64,
    cfg: &VerifyConfig,
) -> Result<Vec<TransformCheckReport>> {
    let theta = params.theta();
    let mut rows = Vec::with_capacity(6);
    let plain = [
        ("psi0", Density::Psi0 { alpha: theta }, cfg.tol_transform),
        ("psi1_N", Density::Psi1, cfg.tol_transform),
        ("psi_N", Density::Psi, cfg.tol_psi),
        ("psi2", Density::Psi2 { alpha: theta }, cfg.tol_transform),
        ("g_N", Density::G, cfg.tol_transform),
    ];
    for (label, d, tol) in plain {
        let rhs = d.exact_transform(params, sigma)?;
        rows.push(laplace_row(label, params, sigma, rhs, tol, |x| {
            d.eval(params, x).unwrap_or(f64::NAN)
        }));
    }
    let rhs = Density::G.exact_transform(params, sigma)?;
    rows.push(laplace_row("g_closed_form", params, sigma, rhs, cfg.tol_transform, |x| {
        crate::archimedean::g_closed_form(params, x).unwrap_or(f64::NAN)
    }));
    Ok(rows)
}

fn laplace_row<F: Fn(f64) -> f64>(
    label: &str,
    params: &ArchParams,
    sigma: f64,
    rhs: f64,
    tol: f64,
    f: F,
) -> TransformCheckReport {
    let k = sigma - 0.5;
    let g = |x: f64| f(x) * (-k * x).exp();
    let fine = quad::integrate_to_infinity(g, 0.0, true, 30, 1e-16);
    let coarse = quad::integrate_to_infinity(g, 0.0, true, 20, 1e-16);
    TransformCheckReport::new(
        label,
        params.theta(),
        sigma,
        fine.value,
        rhs,
        fine.error,
        (fine.value - coarse.value).abs(),
        tol,
    )
}

/// Mean relative residual of the `N`-dependent density rows
/// (`psi1_N`, `psi_N`, `g_N`) over `sigma_grid`.
pub fn mean_series_residual(theta: f64, order: usize, sigma_grid: &[f64]) -> Result<f64> {
    let params = ArchParams::new(theta, order, crate::archimedean::DEFAULT_X_MAX)?;
    let cfg = VerifyConfig::default();
    let mut sum = 0.0;
    let mut count = 0usize;
    for &sigma in sigma_grid {
        for (label, d) in [("psi1_N", Density::Psi1), ("psi_N", Density::Psi), ("g_N", Density::G)] {
            let rhs = d.exact_transform(&params, sigma)?;
            let row = laplace_row(label, &params, sigma, rhs, cfg.tol_transform, |x| {
                d.eval(&params, x).unwrap_or(f64::NAN)
            });
            sum += row.rel_err;
            count += 1;
        }
    }
    Ok(sum / count.max(1) as f64)
}

// ---------------------------------------------------------------------------
// identity chain

/// Identity tags, in output order.
pub const IDENTITY_NAMES: [&str; 8] = [
    "m_chain_phi",
    "m_chain_psi",
    "phi_plus_dt",
    "phi_plus_dx",
    "phi_minus_dx",
    "phi_minus_dt",
    "boundary_ode",
    "exp_integral",
];

/// Builds `K_θ` wide enough for `t_grid` plus the difference stencil and
/// runs [`run_identity_suite_with`].
pub fn run_identity_suite(
    theta: f64,
    t_grid: &[f64],
    cfg: &VerifyConfig,
) -> Result<Vec<IdentityReport>> {
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let x_max = (2.0 * (t_max + 2.0 * cfg.fd_step) + 0.05).min(MAX_X_MAX);
    let profile = kernel::build_kernel_with(theta, cfg.order, x_max, cfg.density)?;
    run_identity_suite_with(Arc::new(profile), theta, t_grid, cfg)
}

/// The identity suite for an arbitrary causal kernel; `theta` only labels
/// the rows.
pub fn run_identity_suite_with(
    kernel: Arc<dyn Kernel>,
    theta: f64,
    t_grid: &[f64],
    cfg: &VerifyConfig,
) -> Result<Vec<IdentityReport>> {
    if t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Precondition("t grid must be non-negative".into()));
    }
    let h = cfg.fd_step;
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("fd step must be positive, got {h}")));
    }
    let path = exp_integral_path(kernel.clone(), t_grid, cfg)?;
    let per_t = par::map(t_grid, |&t| identity_rows_at(&kernel, theta, t, &path, cfg));
    let mut out = Vec::new();
    for rows in per_t {
        out.extend(rows?);
    }
    Ok(out)
}

/// `∫_0^t (φ⁺ + φ⁻)(τ, τ) dτ` at each requested `t`, with a budget and the
/// first `τ` at which either determinant stops being positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpIntegralPath {
    pub t: Vec<f64>,
    pub log_m: Vec<f64>,
    pub budget: Vec<f64>,
    pub first_zero: Option<f64>,
    pub evaluations: usize,
}

impl ExpIntegralPath {
    fn at(&self, t: f64) -> Option<(f64, f64)> {
        self.t
            .iter()
            .position(|&s| s == t)
            .map(|i| (self.log_m[i], self.budget[i]))
    }
}

/// Kink locations of `τ ↦ φ±(τ, τ)` in `(0, t_max)`: half of every kernel
/// breakpoint `u`, and half of every difference `u - u'` of the first
/// [`RATIO_BREAKPOINTS`] positive breakpoints (`½ log(n/n')` for `K_θ`).
pub fn tau_edges(kernel: &dyn Kernel, t_max: f64) -> Vec<f64> {
    let bps: Vec<f64> = kernel
        .breakpoints(0.0, 2.0 * t_max)
        .into_iter()
        .filter(|&u| u > 0.0)
        .collect();
    let mut edges: Vec<f64> = bps.iter().map(|u| 0.5 * u).collect();
    let head = &bps[..bps.len().min(RATIO_BREAKPOINTS)];
    for (i, &u) in head.iter().enumerate() {
        for &v in &head[..i] {
            edges.push(0.5 * (u - v));
        }
    }
    edges.retain(|&e| e > 0.0 && e < t_max);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|b, a| (*b - *a).abs() < 1e-12);
    edges
}

/// Breakpoints entering the pairwise differences in [`tau_edges`].
pub const RATIO_BREAKPOINTS: usize = 16;

/// Integrates piece by piece over `[0, max t_grid]`, each piece split at its
/// midpoint with both halves graded cubically towards the outer end. A
/// piece whose gap to the embedded rule exceeds its share of
/// `0.1 tol_chain` is bisected, up to `tau_max_depth` times; the gap is the
/// piece's budget. Integration stops at the first node where either
/// determinant is not positive and that zero is located by bisection.
pub fn exp_integral_path(
    kernel: Arc<dyn Kernel>,
    t_grid: &[f64],
    cfg: &VerifyConfig,
) -> Result<ExpIntegralPath> {
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let mut edges = vec![0.0];
    edges.extend(tau_edges(kernel.as_ref(), t_max));
    edges.extend(t_grid.iter().copied().filter(|&t| t > 0.0));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|b, a| (*b - *a).abs() < 1e-12);

    let eval = |tau: f64| -> Result<Option<f64>> {
        let sys = discretize(kernel.clone(), tau, cfg.disc)?;
        if !dets_positive(&sys) {
            return Ok(None);
        }
        let plus = sys.solve_field(FieldKind::PhiPlus)?.boundary;
        let minus = sys.solve_field(FieldKind::PhiMinus)?.boundary;
        Ok(Some(plus + minus))
    };
    let per_unit = 0.1 * cfg.tol_chain / t_max.max(f64::MIN_POSITIVE);
    let q = cfg.tau_nodes.max(4);

    let mut first_zero = None;
    let mut evaluations = 0;
    let mut done: Vec<(f64, f64, f64)> = Vec::new();
    // left-most piece on top
    let mut stack: Vec<(f64, f64, u32)> = edges.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((a, b, depth)) = stack.pop() {
        let (mut xs, ws) = split_rule(q, a, b);
        let (xl, weights_low) = split_rule(q - 2, a, b);
        let split = xs.len();
        xs.extend(xl);
        let vals = par::map(&xs, |&tau| eval(tau));
        evaluations += xs.len();
        let (mut hi, mut lo) = (0.0, 0.0);
        let mut bad: Option<f64> = None;
        for (i, (&tau, v)) in xs.iter().zip(vals).enumerate() {
            match v? {
                Some(f) if i < split => hi += ws[i] * f,
                Some(f) => lo += weights_low[i - split] * f,
                None => bad = Some(bad.map_or(tau, |z: f64| z.min(tau))),
            }
        }
        if let Some(tau) = bad {
            let good = xs.iter().copied().filter(|&x| x < tau).fold(a, f64::max);
            first_zero = Some(bisect_zero(&kernel, good, tau, cfg.disc)?);
            break;
        }
        let gap = (hi - lo).abs();
        if gap > per_unit * (b - a) && depth < cfg.tau_max_depth {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
            continue;
        }
        done.push((b, hi, gap));
    }

    let mut out = ExpIntegralPath {
        t: Vec::new(),
        log_m: Vec::new(),
        budget: Vec::new(),
        first_zero,
        evaluations,
    };
    for &t in t_grid {
        if first_zero.is_some_and(|z| t >= z) {
            continue;
        }
        let (mut v, mut e) = (0.0, 0.0);
        for &(end, val, err) in &done {
            if end <= t + 1e-12 {
                v += val;
                e += err;
            }
        }
        out.t.push(t);
        out.log_m.push(v);
        out.budget.push(e);
    }
    Ok(out)
}

fn split_rule(q: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let m = 0.5 * (a + b);
    let (mut xs, mut ws) = quad::mapped_rule_power(q, a, m, 3);
    let (xr, wr) = quad::mapped_rule_power(q, b, m, 3);
    xs.extend(xr);
    ws.extend(wr);
    (xs, ws)
}

fn dets_positive(sys: &NystromSystem) -> bool {
    [1i8, -1].iter().all(|&s| {
        let d = sys.fredholm_det(s);
        !d.singular && d.sign > 0
    })
}

/// Bisection for the first `t` in `(good, bad]` at which a determinant
/// stops being positive; 40 halvings.
pub fn bisect_zero(
    kernel: &Arc<dyn Kernel>,
    mut good: f64,
    mut bad: f64,
    disc: Discretization,
) -> Result<f64> {
    for _ in 0..40 {
        let mid = 0.5 * (good + bad);
        if dets_positive(&discretize(kernel.clone(), mid, disc)?) {
            good = mid;
        } else {
            bad = mid;
        }
        if bad - good < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (good + bad))
}

/// Solutions needed at one `t`.
struct Snapshot {
    sys: NystromSystem,
    row: HamiltonianRow,
    phi: crate::fredholm::SolutionField,
    psi: crate::fredholm::SolutionField,
}

fn snapshot(kernel: &Arc<dyn Kernel>, t: f64, disc: Discretization) -> Result<Snapshot> {
    let sys = discretize(kernel.clone(), t, disc)?;
    let row = HamiltonianRow::from_system(&sys);
    let phi = sys.solve_field(FieldKind::Phi)?;
    let psi = sys.solve_field(FieldKind::Psi)?;
    Ok(Snapshot { sys, row, phi, psi })
}

/// `(|m - 1/Φ(t,t)|/m, |m - Ψ(t,t)|/m)`.
fn chain_residuals(s: &Snapshot) -> (f64, f64) {
    let m = s.row.m;
    (
        (m - 1.0 / s.phi.boundary).abs() / m.abs(),
        (m - s.psi.boundary).abs() / m.abs(),
    )
}

/// Interior test abscissae: centres of panels wider than `4h`, kept `3h`
/// away from `±t`, thinned to at most eight.
fn probe_points(sys: &NystromSystem, h: f64) -> Vec<f64> {
    let t = sys.t();
    let mut xs: Vec<f64> = sys
        .panels()
        .iter()
        .filter(|p| p.b - p.a > 4.0 * h)
        .map(|p| 0.5 * (p.a + p.b))
        .filter(|&x| x.abs() < t - 3.0 * h)
        .collect();
    let n = xs.len();
    if n > 8 {
        xs = (0..8).map(|k| xs[k * (n - 1) / 7]).collect();
    }
    xs
}

/// Central difference of `f` at step `h`, optionally Richardson-combined
/// with step `2h`; returns `(derivative, estimated truncation error)`.
fn central(f: [f64; 4], h: f64, richardson: bool) -> (f64, f64) {
    // f = [f(t-2h), f(t-h), f(t+h), f(t+2h)]
    let d1 = (f[2] - f[1]) / (2.0 * h);
    let d2 = (f[3] - f[0]) / (4.0 * h);
    if richardson {
        ((4.0 * d1 - d2) / 3.0, (d1 - d2).abs() / 15.0)
    } else {
        (d1, (d1 - d2).abs() / 3.0)
    }
}

fn identity_rows_at(
    kernel: &Arc<dyn Kernel>,
    theta: f64,
    t: f64,
    path: &ExpIntegralPath,
    cfg: &VerifyConfig,
) -> Result<Vec<IdentityReport>> {
    let na = |name: &str, tol: f64| IdentityReport::not_applicable(name, theta, t, tol);
    let beyond_zero = path.first_zero.is_some_and(|z| t >= z);
    if beyond_zero {
        return Ok(IDENTITY_NAMES
            .iter()
            .map(|&n| na(n, if n.starts_with("phi") || n == "boundary_ode" { cfg.tol_fd } else { cfg.tol_chain }))
            .collect());
    }
    let base = snapshot(kernel, t, cfg.disc)?;
    let (r_phi, r_psi) = chain_residuals(&base);
    let (mut b_phi, mut b_psi) = (0.0, 0.0);
    let mut work_disc = cfg.disc;
    let mut work = base;
    if cfg.refine && t > 0.0 {
        work_disc = cfg.disc.doubled();
        work = snapshot(kernel, t, work_disc)?;
        let (f_phi, f_psi) = chain_residuals(&work);
        // at least fourth-order panel convergence assumed for what remains
        b_phi = (f_phi - r_phi).abs() / 15.0;
        b_psi = (f_psi - r_psi).abs() / 15.0;
    }
    let (r_phi, r_psi) = chain_residuals(&work);
    let m_best = work.row.m;
    let mut rows = vec![
        IdentityReport::new("m_chain_phi", theta, t, r_phi, b_phi, cfg.tol_chain),
        IdentityReport::new("m_chain_psi", theta, t, r_psi, b_psi, cfg.tol_chain),
    ];

    let h = cfg.fd_step;
    if t < 2.0 * h {
        for n in &IDENTITY_NAMES[2..7] {
            rows.push(na(n, cfg.tol_fd));
        }
    } else {
        rows.extend(derivative_rows(kernel, theta, t, &work, work_disc, cfg)?);
    }

    let exp_row = match path.at(t) {
        Some((log_m, budget)) => {
            let r = (log_m.exp() - m_best).abs() / m_best.abs();
            IdentityReport::new("exp_integral", theta, t, r, budget, cfg.tol_chain)
        }
        None => na("exp_integral", cfg.tol_chain),
    };
    rows.push(exp_row);
    Ok(rows)
}

fn derivative_rows(
    kernel: &Arc<dyn Kernel>,
    theta: f64,
    t: f64,
    base: &Snapshot,
    disc: Discretization,
    cfg: &VerifyConfig,
) -> Result<Vec<IdentityReport>> {
    let h = cfg.fd_step;
    let steps = [-2.0 * h, -h, h, 2.0 * h];
    let shifted: Vec<Snapshot> = steps
        .iter()
        .map(|&d| snapshot(kernel, t + d, disc))
        .collect::<Result<_>>()?;
    let sys = &base.sys;
    let plus = sys.solve_field(FieldKind::PhiPlus)?;
    let minus = sys.solve_field(FieldKind::PhiMinus)?;
    let phi_tt = base.phi.boundary;
    let psi_tt = base.psi.boundary;
    let xs = probe_points(sys, h);

    let mut res = [0.0f64; 4];
    let mut bud = [0.0f64; 4];
    let mut scale_p = 1.0f64;
    let mut scale_m = 1.0f64;
    for &x in &xs {
        let pp = sys.interpolate(&plus, x)?;
        let pm = sys.interpolate(&minus, x)?;
        scale_p = scale_p.max(pp.abs());
        scale_m = scale_m.max(pm.abs());
        let mut phi_vals = [0.0; 4];
        let mut psi_vals = [0.0; 4];
        for (k, s) in shifted.iter().enumerate() {
            phi_vals[k] = s.sys.interpolate(&s.phi, x)?;
            psi_vals[k] = s.sys.interpolate(&s.psi, x)?;
        }
        let (dphi_dt, e_phi) = central(phi_vals, h, cfg.richardson);
        let (dpsi_dt, e_psi) = central(psi_vals, h, cfg.richardson);
        let dphi_dx = sys.interpolate_dx(&base.phi, x)?;
        let dpsi_dx = sys.interpolate_dx(&base.psi, x)?;
        let cand = [
            ((pp + dphi_dt / phi_tt).abs(), e_phi / phi_tt.abs()),
            ((pp - dpsi_dx / psi_tt).abs(), 0.0),
            ((pm + dphi_dx / phi_tt).abs(), 0.0),
            ((pm - dpsi_dt / psi_tt).abs(), e_psi / psi_tt.abs()),
        ];
        for (k, (r, b)) in cand.into_iter().enumerate() {
            res[k] = res[k].max(r);
            bud[k] = bud[k].max(b);
        }
    }
    let scales = [scale_p, scale_p, scale_m, scale_m];
    let names = ["phi_plus_dt", "phi_plus_dx", "phi_minus_dx", "phi_minus_dt"];
    let mut rows: Vec<IdentityReport> = names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            if xs.is_empty() {
                IdentityReport::not_applicable(n, theta, t, cfg.tol_fd)
            } else {
                IdentityReport::new(n, theta, t, res[k] / scales[k], bud[k] / scales[k], cfg.tol_fd)
            }
        })
        .collect();

    // d/dt Φ(t,t) + Φ(t,t)(φ⁺(t,t) + φ⁻(t,t)) = 0, scaled by Φ(t,t)
    let diag: [f64; 4] = std::array::from_fn(|k| shifted[k].phi.boundary);
    let (d_diag, e_diag) = central(diag, h, cfg.richardson);
    let sum = plus.boundary + minus.boundary;
    let scale = phi_tt.abs() * sum.abs().max(1.0);
    rows.push(IdentityReport::new(
        "boundary_ode",
        theta,
        t,
        (d_diag + phi_tt * sum).abs() / scale,
        e_diag / scale,
        cfg.tol_fd,
    ));
    Ok(rows)
}

// ---------------------------------------------------------------------------
// kernel properties

/// `K(x) = 0` exactly on sampled negative `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCheck {
    pub samples: Vec<f64>,
    pub max_abs: f64,
    pub pass: bool,
}

/// `|K(x)| ≤ C e^{x/2}` on `[0, x_max]` and continuity across every `log n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub constant: f64,
    pub samples: usize,
    /// Least-squares slope of `log max|K|` over unit windows.
    pub fitted_rate: f64,
    /// Largest `|K(log n + δ) - K(log n - δ)|`, `δ = 1e-9`.
    pub max_jump: f64,
    pub pass: bool,
}

/// `∫_0^X |K'|` on panels between consecutive `log n`, at two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationCheck {
    pub upper: f64,
    pub coarse: f64,
    pub fine: f64,
    pub rel_change: f64,
    /// `2 ∫_0^X |K'|` at the fine resolution, an upper bound for `∫|K|`-type
    /// Lipschitz estimates.
    pub doubled: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub m: f64,
    pub log_det_plus: f64,
    pub log_det_minus: f64,
    pub sign_plus: i8,
    pub sign_minus: i8,
    /// `|log det|` change under panel doubling, per sign.
    pub budget_plus: f64,
    pub budget_minus: f64,
    pub near_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetSweep {
    pub step: f64,
    pub t_max: f64,
    pub rows: Vec<SweepRow>,
    /// First sweep point at or past a sign change or a flagged factorisation.
    pub first_near_zero_t: Option<f64>,
    /// The zero itself, located by bisection below `first_near_zero_t`.
    pub first_zero_estimate: Option<f64>,
    /// Every row carries finite budgets.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPropertiesReport {
    pub theta: f64,
    pub x_max: f64,
    pub support: SupportCheck,
    pub growth: GrowthCheck,
    pub variation: VariationCheck,
    pub sweep: DetSweep,
}

impl KPropertiesReport {
    pub fn pass(&self) -> bool {
        self.support.pass && self.growth.pass && self.variation.pass && self.sweep.pass
    }
}

/// Runs all property checks on `K_θ` built up to `2 sweep_t_max`.
pub fn run_k_properties(theta: f64, cfg: &VerifyConfig) -> Result<KPropertiesReport> {
    let x_max = (2.0 * cfg.sweep_t_max).clamp(3.0, MAX_X_MAX);
    let profile = Arc::new(kernel::build_kernel_with(theta, cfg.order, x_max, cfg.density)?);
    let support = support_check(profile.as_ref());
    let growth = growth_check(&profile);
    let variation = variation_check(profile.as_ref(), 3.0, cfg.tol_chain);
    let sweep = det_sweep(profile, cfg)?;
    Ok(KPropertiesReport {
        theta,
        x_max,
        support,
        growth,
        variation,
        sweep,
    })
}

pub fn support_check(k: &dyn Kernel) -> SupportCheck {
    let samples = vec![-10.0, -2.0, -1.0, -0.5, -1e-3, -1e-12, -f64::MIN_POSITIVE];
    let max_abs = samples
        .iter()
        .map(|&x| k.value(x).abs().max(k.derivative(x).abs()))
        .fold(0.0, f64::max);
    SupportCheck {
        samples,
        max_abs,
        pass: max_abs == 0.0,
    }
}

pub fn growth_check(k: &KernelProfile) -> GrowthCheck {
    let samples = 2001;
    let constant = k.growth_constant(samples);
    let x_max = k.x_max();
    let windows = x_max.floor() as usize;
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in 0..windows {
        let peak = (0..200)
            .map(|i| k.value(w as f64 + i as f64 / 199.0).abs())
            .fold(0.0, f64::max);
        if peak > 0.0 {
            let x = w as f64 + 0.5;
            let y = peak.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            n += 1.0;
        }
    }
    let fitted_rate = if n >= 2.0 {
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::NAN
    };
    let delta = 1e-9;
    let max_jump = k
        .breakpoints(0.0, x_max - delta)
        .into_iter()
        .map(|u| (k.value(u + delta) - k.value(u - delta)).abs())
        .fold(0.0, f64::max);
    let scale = 1.0f64.max(constant);
    GrowthCheck {
        constant,
        samples,
        fitted_rate,
        max_jump,
        pass: constant.is_finite() && max_jump <= 1e-6 * scale,
    }
}

pub fn variation_check(k: &dyn Kernel, upper: f64, tol: f64) -> VariationCheck {
    let integral = |sub: usize| -> f64 {
        let mut edges = vec![0.0];
        edges.extend(k.breakpoints(0.0, upper));
        edges.push(upper);
        edges
            .windows(2)
            .map(|w| {
                let len = (w[1] - w[0]) / sub as f64;
                (0..sub)
                    .map(|j| {
                        let a = w[0] + j as f64 * len;
                        quad::integrate(|y| k.derivative(y).abs(), a, a + len, 20, j == 0)
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    let coarse = integral(32);
    let fine = integral(64);
    let rel_change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    VariationCheck {
        upper,
        coarse,
        fine,
        rel_change,
        doubled: 2.0 * fine,
        tolerance: tol,
        pass: fine.is_finite() && rel_change <= tol,
    }
}

/// `t = step, 2 step, …, t_max`, each at the configured and the doubled
/// resolution.
pub fn det_sweep(kernel: Arc<dyn Kernel>, cfg: &VerifyConfig) -> Result<DetSweep> {
    let step = cfg.sweep_step;
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("sweep step must be positive, got {step}")));
    }
    let count = (cfg.sweep_t_max / step + 1e-9).floor() as usize;
    let ts: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
    let rows = par::map(&ts, |&t| -> Result<SweepRow> {
        let c = HamiltonianRow::from_system(&discretize(kernel.clone(), t, cfg.disc)?);
        let f = if cfg.refine {
            HamiltonianRow::from_system(&discretize(kernel.clone(), t, cfg.disc.doubled())?)
        } else {
            c.clone()
        };
        let sign = |d: f64| if d < 0.0 { -1 } else { 1 };
        let budget_plus = (f.log_det_plus - c.log_det_plus).abs();
        let budget_minus = (f.log_det_minus - c.log_det_minus).abs();
        let near_zero = f.flag.is_some()
            || f.det_plus <= 0.0
            || f.det_minus <= 0.0
            || sign(c.det_plus) != sign(f.det_plus)
            || sign(c.det_minus) != sign(f.det_minus);
        Ok(SweepRow {
            t,
            m: f.m,
            log_det_plus: f.log_det_plus,
            log_det_minus: f.log_det_minus,
            sign_plus: sign(f.det_plus),
            sign_minus: sign(f.det_minus),
            budget_plus,
            budget_minus,
            near_zero,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let first_near_zero_t = rows.iter().find(|r| r.near_zero).map(|r| r.t);
    let first_zero_estimate = match rows.iter().position(|r| r.near_zero) {
        Some(i) => {
            let good = if i == 0 { 0.0 } else { rows[i - 1].t };
            Some(bisect_zero(&kernel, good, rows[i].t, cfg.disc)?)
        }
        None => None,
    };
    let pass = rows
        .iter()
        .all(|r| r.budget_plus.is_finite() && r.budget_minus.is_finite());
    Ok(DetSweep {
        step,
        t_max: cfg.sweep_t_max,
        rows,
        first_near_zero_t,
        first_zero_estimate,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{ExponentialKernel, ZeroKernel};

    fn quick() -> VerifyConfig {
        VerifyConfig {
            disc: Discretization::new(4, 12).unwrap(),
            refine: false,
            tau_nodes: 6,
            tau_max_depth: 1,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn zero_kernel_rows_are_exact() {
        let rows =
            run_identity_suite_with(Arc::new(ZeroKernel), 2.0, &[0.0, 0.5, 1.0], &quick()).unwrap();
        assert_eq!(rows.len(), 3 * IDENTITY_NAMES.len());
        for r in &rows {
            if r.applicable {
                assert_eq!(r.residual, 0.0, "{r:?}");
                assert!(r.pass);
            }
        }
    }

    #[test]
    fn t_zero_rows() {
        let rows = run_identity_suite_with(
            Arc::new(ExponentialKernel { c: 0.3 }),
            2.0,
            &[0.0],
            &quick(),
        )
        .unwrap();
        for r in rows.iter().filter(|r| r.applicable) {
            assert!(r.residual <= 1e-10, "{r:?}");
        }
    }

    /// `K(u) = 0.3 u e^{-u}` on `u > 0`.
    struct Causal;

    impl Kernel for Causal {
        fn value(&self, u: f64) -> f64 {
            if u > 0.0 { 0.3 * u * (-u).exp() } else { 0.0 }
        }

        fn derivative(&self, u: f64) -> f64 {
            if u > 0.0 { 0.3 * (1.0 - u) * (-u).exp() } else { 0.0 }
        }

        fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
            if lo < 0.0 && hi > 0.0 { vec![0.0] } else { Vec::new() }
        }

        fn name(&self) -> String {
            "causal".into()
        }
    }

    #[test]
    fn causal_kernel_rows_pass() {
        let cfg = VerifyConfig {
            refine: true,
            ..quick()
        };
        let rows = run_identity_suite_with(Arc::new(Causal), 2.0, &[0.3, 0.7], &cfg).unwrap();
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn split_rule_is_exact_on_cubics() {
        let (xs, ws) = split_rule(6, 0.2, 0.9);
        let got: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * x * x).sum();
        assert!((got - (0.9f64.powi(3) - 0.2f64.powi(3)) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn richardson_difference() {
        let f = |t: f64| t.sin();
        let (t, h) = (0.4, 1e-2);
        let v = [f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h)];
        let (d, e) = central(v, h, false);
        assert!((d - t.cos()).abs() <= 1.5 * e);
        let (r, _) = central(v, h, true);
        assert!((r - t.cos()).abs() < 1e-9);
    }

    #[test]
    fn transform_grid_is_checked() {
        assert!(run_transform_suite(2.0, &[1.5], &VerifyConfig::default()).is_err());
    }

    #[test]
    fn support_of_profile() {
        let k = kernel::build_kernel(2.0, 10, 3.0).unwrap();
        assert!(support_check(&k).pass);
        let g = growth_check(&k);
        assert!(g.pass, "{g:?}");
    }
}
