//! Gauss–Legendre rules and the small set of integrators built on them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Tricomi initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let k = i as f64 + 1.0;
            let mut x = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos()
                * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared, lazily built rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
        .clone()
}

/// Nodes and weights of an `n`-point rule mapped to `[a, b]`.
///
/// With `graded` the substitution `y = a + (b - a) s²` is applied first,
/// which absorbs algebraic endpoint behaviour `(y - a)^β` at the left end.
pub fn mapped_rule(n: usize, a: f64, b: f64, graded: bool) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(n);
    let len = b - a;
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
        let s = 0.5 * (u + 1.0);
        if graded {
            xs.push(a + len * s * s);
            ws.push(0.5 * w * 2.0 * len * s);
        } else {
            xs.push(a + len * s);
            ws.push(0.5 * w * len);
        }
    }
    (xs, ws)
}

/// `n`-point rule on `[a, b]` through `y = a + (b - a) s^p`; `b < a` grades
/// towards `a` from the other side. Absorbs `|y - a|^β log|y - a|` ends.
pub fn mapped_rule_power(n: usize, a: f64, b: f64, p: i32) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(n);
    let len = b - a;
    let pf = p as f64;
    gl.nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&u, &w)| {
            let s = 0.5 * (u + 1.0);
            (a + len * s.powi(p), 0.5 * w * pf * len.abs() * s.powi(p - 1))
        })
        .unzip()
}

/// `∫_a^b f` with one `n`-point rule (optionally graded at `a`).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, graded: bool) -> f64 {
    if b == a {
        return 0.0;
    }
    let (xs, ws) = mapped_rule(n, a, b, graded);
    xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive bisection: the panel with the largest 12-vs-24-point
/// discrepancy is split until the summed discrepancy meets `abs_tol` or
/// 2000 panels are in use. `graded` applies the square map on the panel
/// touching `a`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    graded: bool,
) -> Estimate {
    struct Panel {
        lo: f64,
        hi: f64,
        graded: bool,
        value: f64,
        error: f64,
    }
    let mut eval = |lo: f64, hi: f64, gr: bool| {
        let coarse = integrate(&mut f, lo, hi, 12, gr);
        let fine = integrate(&mut f, lo, hi, 24, gr);
        Panel {
            lo,
            hi,
            graded: gr,
            value: fine,
            error: (fine - coarse).abs(),
        }
    };
    let mut panels = vec![eval(a, b, graded)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let total: f64 = panels.iter().map(|p| p.value).sum();
        if total_err <= abs_tol.max(4.0 * f64::EPSILON * total.abs()) || panels.len() >= 2000 {
            return Estimate {
                value: total,
                error: total_err,
            };
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        panels.push(eval(p.lo, mid, p.graded));
        panels.push(eval(mid, p.hi, false));
    }
}

/// `∫_a^∞ f` for integrands decaying at least exponentially: unit panels
/// until two consecutive panel contributions drop below `rel` times the
/// running total. The error field carries the geometric tail estimate.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    graded: bool,
    n: usize,
    rel: f64,
) -> Estimate {
    let mut value = integrate(&mut f, a, a + 1.0, n, graded);
    let mut lo = a + 1.0;
    let mut prev = value.abs();
    let mut quiet = 0;
    let mut tail = 0.0;
    for _ in 0..2000 {
        let part = integrate(&mut f, lo, lo + 1.0, n, false);
        value += part;
        lo += 1.0;
        let mag = part.abs();
        if mag <= rel * value.abs() {
            quiet += 1;
            if quiet >= 2 {
                let ratio = if prev > 0.0 { (mag / prev).min(0.9) } else { 0.0 };
                tail = mag * ratio / (1.0 - ratio);
                break;
            }
        } else {
            quiet = 0;
        }
        prev = mag;
    }
    Estimate { value, error: tail }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33, 64, 120] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let n = 10;
        for k in 0..2 * n {
            let got = integrate(|x| x.powi(k as i32), 0.0, 1.0, n, false);
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn graded_rule_handles_square_root() {
        let got = integrate(|x: f64| x.sqrt(), 0.0, 2.0, 12, true);
        let exact = 2.0 / 3.0 * 2f64.powf(1.5);
        assert!((got - exact).abs() < 1e-14);
        let got = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 12, true);
        assert!((got - 2.0).abs() < 1e-13);
    }

    #[test]
    fn power_rule_from_either_side() {
        let f = |x: f64| (x * (1.0 - x)).sqrt();
        let mut got = 0.0;
        for (a, b) in [(0.0, 0.5), (1.0, 0.5)] {
            let (xs, ws) = mapped_rule_power(16, a, b, 3);
            got += xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum::<f64>();
        }
        assert!((got - std::f64::consts::PI / 8.0).abs() < 1e-10, "{got}");
    }

    #[test]
    fn adaptive_on_peaked_integrand() {
        let est = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, false);
        let exact = 2.0 * 100.0 * (100.0f64).atan();
        assert!((est.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn semi_infinite_exponential() {
        let est = integrate_to_infinity(|x| (-1.5 * x).exp(), 0.0, false, 20, 1e-17);
        assert!((est.value - 1.0 / 1.5).abs() < 1e-14);
    }
}
