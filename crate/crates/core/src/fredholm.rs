//! Nyström discretisation of `(𝖪[t]f)(x) = ∫_{-t}^{t} K(x + y) f(y) dy` on
//! `[-t, t]`, Fredholm determinants, the integral-equation solutions and
//! the Hamiltonian `H(t) = diag(m⁻², m²)`.
//!
//! For a causal kernel (`K(u) = 0` for `u < 0`) the operator of the
//! equations on `(-∞, t]` vanishes for `x < -t`: there `x + y < 0` for every
//! `y ≤ t`. The unknowns therefore live on `[-t, t]` and equal their
//! right-hand sides to the left of it.
//!
//! The unknown is represented by piecewise Lagrange interpolation on
//! Gauss–Legendre panels whose edges sit at `log n - t`, where the
//! solutions lose smoothness. The kernel's own kinks run along the
//! anti-diagonals `x + y = log n` and cut through panels; on such panels
//! the weights `∫ K(x + y) ℓ_j(y) dy` are computed by a sub-quadrature split
//! at the kink (product integration), so the discretisation keeps its
//! spectral rate. Row weights at arbitrary `x` come from the same routine,
//! which gives the natural Nyström interpolant and its `x`-derivative.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::par;
use crate::quad::{self, gauss_legendre};

/// Panel density controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Discretization {
    pub panels_per_unit: usize,
    pub nodes_per_panel: usize,
    pub scheme: Scheme,
}

/// How matrix rows are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `A_ij = w_j K(x_i + x_j)`; kinks inside panels cost accuracy.
    Plain,
    /// `A_ij = ∫ K(x_i + y) ℓ_j(y) dy` on panels cut by a kink.
    #[default]
    ProductIntegration,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            panels_per_unit: 16,
            nodes_per_panel: 16,
            scheme: Scheme::default(),
        }
    }
}

impl Discretization {
    pub fn new(panels_per_unit: usize, nodes_per_panel: usize) -> Result<Self> {
        if panels_per_unit == 0 || nodes_per_panel < 2 {
            return Err(Error::Precondition(format!(
                "need panels_per_unit ≥ 1 and nodes_per_panel ≥ 2, got {panels_per_unit}, {nodes_per_panel}"
            )));
        }
        Ok(Self {
            panels_per_unit,
            nodes_per_panel,
            scheme: Scheme::default(),
        })
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    /// Same node count per panel, twice the panels.
    pub fn doubled(self) -> Self {
        Self {
            panels_per_unit: 2 * self.panels_per_unit,
            ..self
        }
    }
}

/// One Gauss–Legendre panel. With `graded` the nodes follow
/// `y = a + (b - a) s²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub graded: bool,
    pub offset: usize,
    pub len: usize,
}

impl Panel {
    fn local(&self, y: f64) -> f64 {
        let s = ((y - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        if self.graded {
            s.sqrt()
        } else {
            s
        }
    }
}

/// Gauss–Legendre nodes on `[0, 1]` with barycentric weights.
#[derive(Debug)]
struct Basis {
    s: Vec<f64>,
    bary: Vec<f64>,
}

fn basis(p: usize) -> Arc<Basis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Basis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(p)
        .or_insert_with(|| {
            let gl = gauss_legendre(p);
            let s: Vec<f64> = gl.nodes.iter().map(|u| 0.5 * (u + 1.0)).collect();
            let bary = (0..p)
                .map(|j| {
                    let prod: f64 = (0..p).filter(|&k| k != j).map(|k| s[j] - s[k]).product();
                    1.0 / prod
                })
                .collect();
            Arc::new(Basis { s, bary })
        })
        .clone()
}

impl Basis {
    /// Lagrange basis values at `s`, written into `out`.
    fn eval(&self, s: f64, out: &mut [f64]) {
        if let Some(j) = self.s.iter().position(|&sj| sj == s) {
            out.fill(0.0);
            out[j] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (o, (&sj, &bj)) in out.iter_mut().zip(self.s.iter().zip(&self.bary)) {
            *o = bj / (s - sj);
            denom += *o;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }
}

/// Which equation a [`SolutionField`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `φ⁺ + 𝖪φ⁺ = K(· + t)`
    PhiPlus,
    /// `φ⁻ - 𝖪φ⁻ = K(· + t)`
    PhiMinus,
    /// `Φ + 𝖪Φ = 1`
    #[serde(rename = "Phi")]
    Phi,
    /// `Ψ - 𝖪Ψ = 1`
    #[serde(rename = "Psi")]
    Psi,
}

impl FieldKind {
    pub const ALL: [FieldKind; 4] = [
        FieldKind::PhiPlus,
        FieldKind::PhiMinus,
        FieldKind::Phi,
        FieldKind::Psi,
    ];

    /// `+1` for `1 + 𝖪`, `-1` for `1 - 𝖪`.
    pub fn sign(self) -> i8 {
        match self {
            FieldKind::PhiPlus | FieldKind::Phi => 1,
            FieldKind::PhiMinus | FieldKind::Psi => -1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::PhiPlus => "phi_plus",
            FieldKind::PhiMinus => "phi_minus",
            FieldKind::Phi => "Phi",
            FieldKind::Psi => "Psi",
        }
    }

    fn rhs(self, kernel: &dyn Kernel, t: f64, x: f64) -> f64 {
        match self {
            FieldKind::PhiPlus | FieldKind::PhiMinus => kernel.value(x + t),
            FieldKind::Phi | FieldKind::Psi => 1.0,
        }
    }

    fn rhs_dx(self, kernel: &dyn Kernel, t: f64, x: f64) -> f64 {
        match self {
            FieldKind::PhiPlus | FieldKind::PhiMinus => kernel.derivative(x + t),
            FieldKind::Phi | FieldKind::Psi => 0.0,
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FieldKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Precondition(format!("unknown field kind '{s}'")))
    }
}

/// Determinant of `I ± A` with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetReport {
    pub value: f64,
    pub log_abs: f64,
    pub sign: i8,
    /// Smallest pivot below `M ε` times the largest.
    pub singular: bool,
}

/// Nodal solution plus the boundary value `lim_{x→t⁻}` from the natural
/// interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionField {
    pub t: f64,
    pub kind: FieldKind,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub boundary: f64,
}

/// Discretised `𝖪[t]`.
pub struct NystromSystem {
    t: f64,
    kernel: Arc<dyn Kernel>,
    disc: Discretization,
    panels: Vec<Panel>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    matrix: Mat<f64>,
    plus: OnceLock<PartialPivLu<f64>>,
    minus: OnceLock<PartialPivLu<f64>>,
}

impl std::fmt::Debug for NystromSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NystromSystem")
            .field("t", &self.t)
            .field("kernel", &self.kernel.name())
            .field("disc", &self.disc)
            .field("nodes", &self.nodes.len())
            .finish_non_exhaustive()
    }
}

const MERGE_TOL: f64 = 1e-12;

/// Panel edges: `±t` and every `u_b ∓ t` inside `(-t, t)` for kernel
/// breakpoints `u_b`. The panel to the right of each edge is graded.
fn panel_layout(kernel: &dyn Kernel, t: f64, disc: Discretization) -> Vec<Panel> {
    let mut edges = vec![-t, t];
    for ub in kernel.breakpoints(-2.0 * t, 2.0 * t) {
        for e in [ub - t, ub + t, 0.5 * ub] {
            if e > -t + MERGE_TOL && e < t - MERGE_TOL {
                edges.push(e);
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|b, a| (*b - *a).abs() < MERGE_TOL);

    let ppu = disc.panels_per_unit as f64;
    let p = disc.nodes_per_panel;
    let mut panels = Vec::new();
    let mut offset = 0;
    for w in edges.windows(2) {
        let len = w[1] - w[0];
        let count = (len * ppu).ceil().max(1.0) as usize;
        let nodes = if count == 1 {
            ((p as f64 * (len * ppu).sqrt().min(1.0)).ceil() as usize).max(6.min(p))
        } else {
            p
        };
        let h = len / count as f64;
        for k in 0..count {
            let a = w[0] + k as f64 * h;
            let b = if k + 1 == count { w[1] } else { a + h };
            panels.push(Panel {
                a,
                b,
                graded: k == 0,
                offset,
                len: nodes,
            });
            offset += nodes;
        }
    }
    panels
}

/// Builds `𝖪[t]` for `0 ≤ t ≤ x_max/2`; `t = 0` gives the empty system.
pub fn discretize(kernel: Arc<dyn Kernel>, t: f64, disc: Discretization) -> Result<NystromSystem> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Precondition(format!("t must be non-negative, got {t}")));
    }
    if 2.0 * t > kernel.x_max() {
        return Err(Error::Precondition(format!(
            "t = {t} needs the kernel on [0, {}] but it is built up to {}",
            2.0 * t,
            kernel.x_max()
        )));
    }
    Discretization::new(disc.panels_per_unit, disc.nodes_per_panel)?;
    let panels = if t == 0.0 {
        Vec::new()
    } else {
        panel_layout(kernel.as_ref(), t, disc)
    };
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for p in &panels {
        let (xs, ws) = quad::mapped_rule(p.len, p.a, p.b, p.graded);
        nodes.extend(xs);
        weights.extend(ws);
    }
    let mut sys = NystromSystem {
        t,
        kernel,
        disc,
        panels,
        nodes,
        weights,
        matrix: Mat::zeros(0, 0),
        plus: OnceLock::new(),
        minus: OnceLock::new(),
    };
    let m = sys.nodes.len();
    let rows = par::map_range(m, |i| sys.row_weights(sys.nodes[i], false));
    sys.matrix = Mat::from_fn(m, m, |i, j| rows[i][j]);
    Ok(sys)
}

impl NystromSystem {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `A_ij ≈ ∫ K(x_i + y) ℓ_j(y) dy`, the discrete operator.
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{-t}^{t} f` with the system's rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weights `W_j(x)` with `∫_{-t}^{t} K(x + y) v(y) dy ≈ Σ_j W_j(x) v_j`
    /// (or `K'` when `deriv`).
    pub fn row_weights(&self, x: f64, deriv: bool) -> Vec<f64> {
        let kernel = self.kernel.as_ref();
        let k = |u: f64| if deriv { kernel.derivative(u) } else { kernel.value(u) };
        let mut row = vec![0.0; self.nodes.len()];
        let q_extra = 8;
        let mut lag = Vec::new();
        for p in &self.panels {
            let len = p.b - p.a;
            let lo = p.a - len;
            let bps: Vec<f64> = kernel
                .breakpoints(x + lo, x + p.b)
                .into_iter()
                .map(|u| u - x)
                .collect();
            let out = &mut row[p.offset..p.offset + p.len];
            if bps.is_empty() || self.disc.scheme == Scheme::Plain {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.weights[p.offset + j] * k(x + self.nodes[p.offset + j]);
                }
                continue;
            }
            let b = basis(p.len);
            lag.resize(p.len, 0.0);
            let mut anchors: Vec<f64> = bps.clone();
            if p.graded {
                anchors.push(p.a);
            }
            let mut cuts = vec![p.a];
            cuts.extend(bps.iter().copied().filter(|&y| y > p.a && y < p.b));
            cuts.push(p.b);
            let q = p.len + q_extra;
            for w in cuts.windows(2) {
                let (c, d) = (w[0], w[1]);
                if d <= c {
                    continue;
                }
                let anchor = anchors
                    .iter()
                    .copied()
                    .filter(|&e| e <= c + MERGE_TOL * len)
                    .fold(f64::NEG_INFINITY, f64::max);
                for (y, wq) in piece_rule(q, c, d, anchor) {
                    let f = k(x + y);
                    if f == 0.0 {
                        continue;
                    }
                    b.eval(p.local(y), &mut lag);
                    for (o, l) in out.iter_mut().zip(&lag) {
                        *o += wq * f * l;
                    }
                }
            }
        }
        row
    }

    fn lu(&self, sign: i8) -> &PartialPivLu<f64> {
        let cell = if sign > 0 { &self.plus } else { &self.minus };
        cell.get_or_init(|| {
            let m = self.len();
            let s = f64::from(sign);
            let a = Mat::from_fn(m, m, |i, j| {
                f64::from(u8::from(i == j)) + s * self.matrix[(i, j)]
            });
            a.partial_piv_lu()
        })
    }

    /// `det(I ± A)` by pivoted LU.
    pub fn fredholm_det(&self, sign: i8) -> DetReport {
        if self.is_empty() {
            return DetReport {
                value: 1.0,
                log_abs: 0.0,
                sign: 1,
                singular: false,
            };
        }
        let lu = self.lu(sign);
        let u = lu.U();
        let mut log_abs = 0.0;
        let mut neg = permutation_is_odd(lu.P().arrays().0);
        let mut big = 0.0f64;
        let mut small = f64::INFINITY;
        for i in 0..self.len() {
            let d = u[(i, i)];
            log_abs += d.abs().ln();
            neg ^= d < 0.0;
            big = big.max(d.abs());
            small = small.min(d.abs());
        }
        let singular = !(small > self.len() as f64 * f64::EPSILON * big);
        let sign = if neg { -1 } else { 1 };
        DetReport {
            value: f64::from(sign) * log_abs.exp(),
            log_abs,
            sign,
            singular,
        }
    }

    /// Solves `(I ± A) v = b`.
    pub fn solve(&self, sign: i8, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if self.fredholm_det(sign).singular {
            return Err(Error::Singular { t: self.t, sign });
        }
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let v = self.lu(sign).solve(&b);
        let out: Vec<f64> = (0..rhs.len()).map(|i| v[(i, 0)]).collect();
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Singular { t: self.t, sign })
        }
    }

    /// Nodal solution of one of the four equations.
    pub fn solve_field(&self, kind: FieldKind) -> Result<SolutionField> {
        let kernel = self.kernel.as_ref();
        let rhs: Vec<f64> = self.nodes.iter().map(|&x| kind.rhs(kernel, self.t, x)).collect();
        let values = self.solve(kind.sign(), &rhs)?;
        let mut field = SolutionField {
            t: self.t,
            kind,
            x: self.nodes.clone(),
            values,
            boundary: f64::NAN,
        };
        field.boundary = self.interpolate(&field, self.t)?;
        Ok(field)
    }

    fn check_inside(&self, field: &SolutionField, x: f64) -> Result<()> {
        if field.t != self.t || field.values.len() != self.len() {
            return Err(Error::Precondition("field belongs to a different system".into()));
        }
        if !(x >= -self.t && x <= self.t) {
            return Err(Error::Precondition(format!(
                "x = {x} outside [-{t}, {t}]",
                t = self.t
            )));
        }
        Ok(())
    }

    /// Natural interpolant `v(x) = rhs(x) ∓ Σ_j W_j(x) v_j`.
    pub fn interpolate(&self, field: &SolutionField, x: f64) -> Result<f64> {
        self.check_inside(field, x)?;
        let w = self.row_weights(x, false);
        let conv: f64 = w.iter().zip(&field.values).map(|(a, b)| a * b).sum();
        Ok(field.kind.rhs(self.kernel.as_ref(), self.t, x) - f64::from(field.kind.sign()) * conv)
    }

    /// `∂_x` of the natural interpolant.
    pub fn interpolate_dx(&self, field: &SolutionField, x: f64) -> Result<f64> {
        self.check_inside(field, x)?;
        let w = self.row_weights(x, true);
        let conv: f64 = w.iter().zip(&field.values).map(|(a, b)| a * b).sum();
        Ok(field.kind.rhs_dx(self.kernel.as_ref(), self.t, x)
            - f64::from(field.kind.sign()) * conv)
    }

    /// `v(x) ± ∫ K(x + y) v(y) dy - rhs(x)` with the integral taken by an
    /// independent adaptive rule over the natural interpolant.
    pub fn residual(&self, field: &SolutionField, x: f64) -> Result<f64> {
        self.check_inside(field, x)?;
        let kernel = self.kernel.as_ref();
        let t = self.t;
        let mut cuts = vec![-t, t];
        cuts.extend(
            kernel
                .breakpoints(x - t, x + t)
                .into_iter()
                .map(|u| u - x),
        );
        cuts.extend(self.panels.iter().map(|p| p.a));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|b, a| (*b - *a).abs() < MERGE_TOL);
        let mut integral = 0.0;
        for w in cuts.windows(2) {
            let f = |y: f64| {
                kernel.value(x + y) * self.interpolate(field, y).unwrap_or(f64::NAN)
            };
            integral += quad::integrate(f, w[0], w[1], 24, true);
        }
        let v = self.interpolate(field, x)?;
        Ok(v + f64::from(field.kind.sign()) * integral - field.kind.rhs(kernel, t, x))
    }
}

fn permutation_is_odd(fwd: &[usize]) -> bool {
    let mut seen = vec![false; fwd.len()];
    let mut odd = false;
    for start in 0..fwd.len() {
        let mut i = start;
        let mut len = 0;
        while !seen[i] {
            seen[i] = true;
            i = fwd[i];
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}

/// `q`-point rule on `[c, d]`; with a finite `anchor ≤ c` the map
/// `y = e + (d - e) r²` clusters nodes towards the anchor `e`.
fn piece_rule(q: usize, c: f64, d: f64, anchor: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(q);
    if !anchor.is_finite() {
        let (xs, ws) = quad::mapped_rule(q, c, d, false);
        return xs.into_iter().zip(ws).collect();
    }
    let e = anchor.min(c);
    let span = d - e;
    let r0 = ((c - e) / span).max(0.0).sqrt();
    let half = 0.5 * (1.0 - r0);
    gl.nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&u, &w)| {
            let r = r0 + half * (u + 1.0);
            (e + span * r * r, w * half * 2.0 * span * r)
        })
        .collect()
}

/// Reason a sweep row is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    /// A factorisation hit a pivot below working precision.
    Singular,
    /// One determinant is below `1e-12` times the other.
    NearSingular,
}

/// `m(t) = det(1 + 𝖪[t]) / det(1 - 𝖪[t])` and `H(t) = diag(m⁻², m²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianRow {
    pub t: f64,
    pub m: f64,
    pub h11: f64,
    pub h22: f64,
    pub det_plus: f64,
    pub det_minus: f64,
    pub log_det_plus: f64,
    pub log_det_minus: f64,
    pub flag: Option<RowFlag>,
}

impl HamiltonianRow {
    pub fn from_system(sys: &NystromSystem) -> Self {
        let p = sys.fredholm_det(1);
        let q = sys.fredholm_det(-1);
        let m = f64::from(p.sign * q.sign) * (p.log_abs - q.log_abs).exp();
        let flag = if p.singular || q.singular {
            Some(RowFlag::Singular)
        } else if (p.log_abs - q.log_abs).abs() > 12.0 * std::f64::consts::LN_10 {
            Some(RowFlag::NearSingular)
        } else {
            None
        };
        Self {
            t: sys.t,
            m,
            h11: m.powi(-2),
            h22: m * m,
            det_plus: p.value,
            det_minus: q.value,
            log_det_plus: p.log_abs,
            log_det_minus: q.log_abs,
            flag,
        }
    }
}

/// One row per `t`; flagged rows are reported, never raised.
pub fn m_of_t(
    kernel: Arc<dyn Kernel>,
    t_grid: &[f64],
    disc: Discretization,
) -> Result<Vec<HamiltonianRow>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("t grid must be non-decreasing".into()));
    }
    par::map(t_grid, |&t| {
        discretize(kernel.clone(), t, disc).map(|s| HamiltonianRow::from_system(&s))
    })
    .into_iter()
    .collect()
}
