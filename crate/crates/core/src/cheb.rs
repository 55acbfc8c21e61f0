//! Piecewise Chebyshev interpolants used as evaluation caches.
//!
//! A piece approximates `f` on `[a, b]` as a Chebyshev series in a local
//! variable `s ∈ [0, 1]`, with `y = a + L s` or, for pieces that start at a
//! point of algebraic non-smoothness, `y = a + L s²`. Under the square map a
//! term `(y - a)^β` becomes `s^{2β}`, which is a polynomial whenever `2β` is
//! an integer and is well resolved otherwise.

/// One Chebyshev piece.
#[derive(Debug, Clone)]
pub struct ChebPiece {
    pub a: f64,
    pub b: f64,
    pub graded: bool,
    coeffs: Vec<f64>,
    dcoeffs: Vec<f64>,
}

impl ChebPiece {
    /// Interpolates `f` at `n` first-kind Chebyshev points.
    pub fn fit<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, graded: bool, n: usize) -> Self {
        let len = b - a;
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let u = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                let s = 0.5 * (u + 1.0);
                let y = if graded { a + len * s * s } else { a + len * s };
                f(y)
            })
            .collect();
        let mut coeffs = vec![0.0; n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, v) in values.iter().enumerate() {
                acc += v * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        coeffs[0] *= 0.5;
        let dcoeffs = derivative_coeffs(&coeffs);
        Self {
            a,
            b,
            graded,
            coeffs,
            dcoeffs,
        }
    }

    fn local(&self, y: f64) -> f64 {
        let t = ((y - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        if self.graded {
            t.sqrt()
        } else {
            t
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        clenshaw(&self.coeffs, 2.0 * self.local(y) - 1.0)
    }

    /// `df/dy` through the chain rule of the local map.
    pub fn derivative(&self, y: f64) -> f64 {
        let s = self.local(y);
        let du = clenshaw(&self.dcoeffs, 2.0 * s - 1.0);
        let len = self.b - self.a;
        if self.graded {
            // du/ds = 2, ds/dy = 1/(2 L s)
            du / (len * s)
        } else {
            2.0 * du / len
        }
    }

    /// Largest magnitude among the last three coefficients.
    fn tail(&self) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .take(3)
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

fn clenshaw(c: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n < 2 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (0..n - 1).rev() {
        d[k] = d[k + 2] + 2.0 * (k as f64 + 1.0) * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Fitting controls for [`PiecewiseCheb::fit`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Points per piece.
    pub points: usize,
    /// Accept a piece once its trailing coefficients fall below
    /// `rel_tol · max(scale, abs_floor)`.
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_depth: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            points: 28,
            rel_tol: 1e-14,
            abs_floor: 1e-300,
            max_depth: 14,
        }
    }
}

/// Adaptive piecewise Chebyshev interpolant on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct PiecewiseCheb {
    pieces: Vec<ChebPiece>,
}

impl PiecewiseCheb {
    /// Fits `f` between consecutive entries of `breaks` (sorted, covering
    /// the whole range). The first piece after every break uses the square
    /// map when `graded_breaks` is set.
    pub fn fit<F: FnMut(f64) -> f64>(
        mut f: F,
        breaks: &[f64],
        graded_breaks: bool,
        opts: FitOptions,
    ) -> Self {
        let mut pieces = Vec::new();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                fit_interval(&mut f, w[0], w[1], graded_breaks, opts, &mut pieces);
            }
        }
        Self { pieces }
    }

    pub fn pieces(&self) -> &[ChebPiece] {
        &self.pieces
    }

    pub fn lo(&self) -> f64 {
        self.pieces.first().map_or(0.0, |p| p.a)
    }

    pub fn hi(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.b)
    }

    fn find(&self, y: f64) -> &ChebPiece {
        let idx = self.pieces.partition_point(|p| p.b <= y);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.find(y).eval(y)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.find(y).derivative(y)
    }
}

/// Adaptive fit of one smooth interval, appending pieces in order.
pub fn fit_interval<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    graded: bool,
    opts: FitOptions,
    out: &mut Vec<ChebPiece>,
) {
    let mut stack = vec![(a, b, graded, 0u32)];
    let mut scale = opts.abs_floor;
    while let Some((lo, hi, gr, depth)) = stack.pop() {
        let piece = ChebPiece::fit(f, lo, hi, gr, opts.points);
        scale = scale.max(piece.scale());
        if piece.tail() <= opts.rel_tol * scale || depth >= opts.max_depth {
            out.push(piece);
        } else {
            let mid = if gr { lo + 0.25 * (hi - lo) } else { 0.5 * (lo + hi) };
            stack.push((mid, hi, false, depth + 1));
            stack.push((lo, mid, gr, depth + 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function_and_derivative() {
        let p = PiecewiseCheb::fit(|x: f64| x.sin() * (-x).exp(), &[0.0, 3.0], false, FitOptions::default());
        for &x in &[0.0, 0.3, 1.7, 2.99, 3.0] {
            assert!((p.eval(x) - x.sin() * (-x).exp()).abs() < 1e-14);
            let d = (x.cos() - x.sin()) * (-x).exp();
            assert!((p.derivative(x) - d).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn graded_piece_resolves_power_singularity() {
        let f = |x: f64| x.powf(0.5) * (1.0 + x);
        let p = PiecewiseCheb::fit(f, &[0.0, 2.0], true, FitOptions::default());
        for &x in &[1e-8, 1e-3, 0.5, 1.9] {
            assert!((p.eval(x) - f(x)).abs() < 1e-13, "x={x}");
            let d = 0.5 * x.powf(-0.5) * (1.0 + x) + x.sqrt();
            assert!((p.derivative(x) - d).abs() < 1e-9 * d.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn breaks_are_respected() {
        let f = |x: f64| (x - 1.0).abs();
        let p = PiecewiseCheb::fit(f, &[0.0, 1.0, 2.0], false, FitOptions::default());
        assert!(p.pieces().len() <= 4);
        for &x in &[0.2, 0.999, 1.0, 1.001, 1.8] {
            assert!((p.eval(x) - f(x)).abs() < 1e-14);
        }
    }
}
