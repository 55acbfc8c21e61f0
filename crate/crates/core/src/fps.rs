//! Exact truncated power series whose coefficients are polynomials in `θ`
//! over `Q`, and the asymptotic-expansion coefficients built from them.
//!
//! The digamma expansion gives, with `v = 1/(s+1)`,
//!
//! ```text
//! s^θ exp(-θψ(s) - θ/s) = exp( -θ Σ v^n/n + θ v/2 + Σ θ B_{2n} v^{2n}/(2n) ),
//! ```
//!
//! whose coefficients are the `C_n(θ)`. Substituting `v = u/(1+u)` with
//! `u = 1/s` yields `1 + Σ C̃_n(θ) u^n`, and multiplying by
//! `exp(-2θ/(2w-3)) = exp(-θ Σ_k (3/2)^k u^{k+1})` (now with `u = 1/w`)
//! yields `1 + Σ A_n(θ) u^n`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::specfun::bernoulli_numbers;

/// Default truncation order of the expansions.
pub const DEFAULT_ORDER: usize = 16;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Polynomial in `θ` with exact rational coefficients (`coeffs[k]` multiplies `θ^k`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    /// The monomial `c θ^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    /// The polynomial `θ`.
    pub fn theta() -> Self {
        Self::monomial(BigRational::one(), 1)
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_i64_pairs(pairs: &[(i64, i64)]) -> Self {
        Self::from_coeffs(pairs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Exact value at a rational `θ`.
    pub fn eval_rational(&self, theta: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * theta + c;
        }
        acc
    }

    /// Value at a floating `θ`. The double is converted exactly to a
    /// rational first, so the only rounding is the final conversion.
    pub fn eval(&self, theta: f64) -> f64 {
        match BigRational::from_float(theta) {
            Some(t) => self.eval_rational(&t).to_f64().unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }

    /// JSON form `[[num, den], ...]`; integers that do not fit `i64` are
    /// emitted as decimal strings.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.coeffs
                .iter()
                .map(|c| json!([big_to_json(c.numer()), big_to_json(c.denom())]))
                .collect(),
        )
    }
}

fn big_to_json(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(v) => json!(v),
        None => json!(b.to_string()),
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                1 if mag.is_one() => write!(f, "θ")?,
                1 => write!(f, "{mag}θ")?,
                _ if mag.is_one() => write!(f, "θ^{k}")?,
                _ => write!(f, "{mag}θ^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add<&RationalPoly> for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigRational::zero();
        RationalPoly::from_coeffs(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&zero) + rhs.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Sub<&RationalPoly> for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        self + &(-rhs)
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;
    fn neg(self) -> RationalPoly {
        RationalPoly::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul<&RationalPoly> for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        if self.is_zero() || rhs.is_zero() {
            return RationalPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RationalPoly::from_coeffs(out)
    }
}

/// Expansion variable of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesVar {
    /// `u = 1/s`
    U,
    /// `v = 1/(s+1)`
    V,
    /// `w⁻¹ = 2/(s+2)`
    WInv,
}

/// Truncated power series `Σ_{n=0}^{N} a_n var^n` over `Q[θ]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FPSeries {
    var: SeriesVar,
    coeffs: Vec<RationalPoly>,
}

impl FPSeries {
    /// Zero series of order `order` (length `order + 1`).
    pub fn zero(var: SeriesVar, order: usize) -> Self {
        Self {
            var,
            coeffs: vec![RationalPoly::zero(); order + 1],
        }
    }

    pub fn one(var: SeriesVar, order: usize) -> Self {
        let mut s = Self::zero(var, order);
        s.coeffs[0] = RationalPoly::one();
        s
    }

    /// Builds a series from coefficients, padding or truncating to `order`.
    pub fn from_coeffs(var: SeriesVar, order: usize, mut coeffs: Vec<RationalPoly>) -> Self {
        coeffs.resize(order + 1, RationalPoly::zero());
        Self { var, coeffs }
    }

    pub fn var(&self) -> SeriesVar {
        self.var
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[RationalPoly] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &RationalPoly {
        &self.coeffs[n]
    }

    /// Re-tags the expansion variable (same coefficients).
    pub fn with_var(mut self, var: SeriesVar) -> Self {
        self.var = var;
        self
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.var != other.var || self.order() != other.order() {
            return Err(Error::SeriesMismatch(format!(
                "{:?}/{} vs {:?}/{}",
                self.var,
                self.order(),
                other.var,
                other.order()
            )));
        }
        Ok(())
    }

    fn require_zero_constant(&self, op: &str) -> Result<()> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::SeriesMismatch(format!("{op} needs a zero constant term")));
        }
        Ok(())
    }

    pub fn scale(&self, c: &RationalPoly) -> Self {
        Self {
            var: self.var,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }
}

/// Exact termwise sum.
pub fn fps_add(a: &FPSeries, b: &FPSeries) -> Result<FPSeries> {
    a.check_compatible(b)?;
    Ok(FPSeries {
        var: a.var,
        coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
    })
}

/// Exact Cauchy product truncated at the common order.
pub fn fps_mul(a: &FPSeries, b: &FPSeries) -> Result<FPSeries> {
    a.check_compatible(b)?;
    let n = a.order();
    let mut out = FPSeries::zero(a.var, n);
    for i in 0..=n {
        if a.coeffs[i].is_zero() {
            continue;
        }
        for j in 0..=n - i {
            if b.coeffs[j].is_zero() {
                continue;
            }
            out.coeffs[i + j] = &out.coeffs[i + j] + &(&a.coeffs[i] * &b.coeffs[j]);
        }
    }
    Ok(out)
}

/// `exp(a)` for `a` without constant term, from `n e_n = Σ_{k=1}^{n} k a_k e_{n-k}`.
pub fn fps_exp(a: &FPSeries) -> Result<FPSeries> {
    a.require_zero_constant("exp")?;
    let n = a.order();
    let mut e = FPSeries::one(a.var, n);
    for m in 1..=n {
        let mut acc = RationalPoly::zero();
        for k in 1..=m {
            if a.coeffs[k].is_zero() || e.coeffs[m - k].is_zero() {
                continue;
            }
            let term = &a.coeffs[k] * &e.coeffs[m - k];
            acc = &acc + &term.scale(&rat(k as i64, 1));
        }
        e.coeffs[m] = acc.scale(&rat(1, m as i64));
    }
    Ok(e)
}

/// `log(1 + a)` for `a` without constant term, from `(1+a) b' = a'`.
pub fn fps_log1p(a: &FPSeries) -> Result<FPSeries> {
    a.require_zero_constant("log1p")?;
    let n = a.order();
    let mut b = FPSeries::zero(a.var, n);
    for m in 1..=n {
        // m b_m = m a_m - Σ_{k=1}^{m-1} k b_k a_{m-k}
        let mut acc = a.coeffs[m].scale(&rat(m as i64, 1));
        for k in 1..m {
            if b.coeffs[k].is_zero() || a.coeffs[m - k].is_zero() {
                continue;
            }
            let term = (&b.coeffs[k] * &a.coeffs[m - k]).scale(&rat(k as i64, 1));
            acc = &acc - &term;
        }
        b.coeffs[m] = acc.scale(&rat(1, m as i64));
    }
    Ok(b)
}

/// Rewrites a series in `v = 1/(s+1)` as a series in `u = 1/s` via
/// `v^k = Σ_j (-1)^j C(k+j-1, j) u^{k+j}`.
pub fn substitute_v_to_u(a: &FPSeries) -> Result<FPSeries> {
    if a.var != SeriesVar::V {
        return Err(Error::SeriesMismatch(format!(
            "substitution expects a V-series, got {:?}",
            a.var
        )));
    }
    let n = a.order();
    let mut out = FPSeries::zero(SeriesVar::U, n);
    out.coeffs[0] = a.coeffs[0].clone();
    for k in 1..=n {
        if a.coeffs[k].is_zero() {
            continue;
        }
        // binom(k+j-1, j), built incrementally in j
        let mut binom = BigInt::one();
        for j in 0..=n - k {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let c = BigRational::from_integer(binom.clone() * sign);
            out.coeffs[k + j] = &out.coeffs[k + j] + &a.coeffs[k].scale(&c);
            binom = binom * BigInt::from(k + j) / BigInt::from(j + 1);
        }
    }
    Ok(out)
}

/// `L(v) = -θ Σ v^n/n + θ v/2 + Σ θ B_{2n} v^{2n}/(2n)` through order `n`.
pub fn digamma_log_series(order: usize) -> FPSeries {
    let b = bernoulli_numbers(order.max(2));
    let theta = RationalPoly::theta();
    let mut coeffs = vec![RationalPoly::zero(); order + 1];
    for (n, c) in coeffs.iter_mut().enumerate().skip(1) {
        let mut val = rat(-1, n as i64);
        if n == 1 {
            val += rat(1, 2);
        }
        if n % 2 == 0 {
            val += &b[n] / BigRational::from_integer(BigInt::from(n));
        }
        *c = theta.scale(&val);
    }
    FPSeries::from_coeffs(SeriesVar::V, order, coeffs)
}

/// The `v`-expansion `exp(L(v)) - 1 = Σ_{n≥1} C_n(θ) v^n`, returned as
/// `[C_1 … C_{N-1}]`.
pub fn derive_c(order: usize) -> Result<Vec<RationalPoly>> {
    check_order(order)?;
    let e = fps_exp(&digamma_log_series(order - 1))?;
    Ok(e.coeffs[1..].to_vec())
}

/// `s^θ exp(-θψ(s) - θ/s) - 1 = Σ C̃_n(θ) s^{-n}`, returned as `[C̃_1 … C̃_{N-1}]`.
pub fn derive_c_tilde(order: usize) -> Result<Vec<RationalPoly>> {
    Ok(c_tilde_series(order)?.coeffs[1..].to_vec())
}

fn c_tilde_series(order: usize) -> Result<FPSeries> {
    check_order(order)?;
    let e = fps_exp(&digamma_log_series(order - 1))?;
    substitute_v_to_u(&e)
}

/// `-2θ/(2w-3) = -θ Σ_{k≥0} (3/2)^k w^{-(k+1)}` as a `w⁻¹`-series.
pub fn shift_exponent_series(order: usize) -> FPSeries {
    let theta = RationalPoly::theta();
    let mut coeffs = vec![RationalPoly::zero(); order + 1];
    let mut pow = BigRational::one();
    for c in coeffs.iter_mut().skip(1) {
        *c = theta.scale(&-pow.clone());
        pow *= rat(3, 2);
    }
    FPSeries::from_coeffs(SeriesVar::WInv, order, coeffs)
}

/// `w^θ exp(-θψ(w) - θ/w) exp(-2θ/(2w-3)) = 1 + Σ A_n(θ) w^{-n}`, returned
/// as `[A_1 … A_{N-1}]`.
pub fn derive_a(order: usize) -> Result<Vec<RationalPoly>> {
    Ok(a_series(order)?.coeffs[1..].to_vec())
}

fn a_series(order: usize) -> Result<FPSeries> {
    let c = c_tilde_series(order)?.with_var(SeriesVar::WInv);
    let shift = fps_exp(&shift_exponent_series(order - 1))?;
    fps_mul(&c, &shift)
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 {
        return Err(Error::Precondition(format!("expansion order must be >= 2, got {order}")));
    }
    if order > 60 {
        return Err(Error::Precondition(format!("expansion order {order} exceeds the Bernoulli table")));
    }
    Ok(())
}

/// Coefficients evaluated at a fixed `θ`, with the leading `1` prepended:
/// `out[0] = 1`, `out[n] = coefficient of the n-th power`.
pub fn evaluate_with_unit(polys: &[RationalPoly], theta: f64) -> Vec<f64> {
    std::iter::once(1.0)
        .chain(polys.iter().map(|p| p.eval(theta)))
        .collect()
}

/// JSON table `[{"n": n, "poly": [[num, den], ...]}, ...]` (index from 1).
pub fn coefficients_json(polys: &[RationalPoly]) -> Value {
    Value::Array(
        polys
            .iter()
            .enumerate()
            .map(|(i, p)| json!({ "n": i + 1, "poly": p.to_json() }))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v_series(order: usize, coeffs: &[(i64, i64)]) -> FPSeries {
        FPSeries::from_coeffs(
            SeriesVar::V,
            order,
            coeffs
                .iter()
                .map(|&(n, d)| RationalPoly::constant(rat(n, d)))
                .collect(),
        )
    }

    #[test]
    fn product_of_conjugates() {
        let a = v_series(2, &[(1, 1), (1, 1)]);
        let b = v_series(2, &[(1, 1), (-1, 1)]);
        let p = fps_mul(&a, &b).unwrap();
        assert_eq!(p, v_series(2, &[(1, 1), (0, 1), (-1, 1)]));
        let one = FPSeries::one(SeriesVar::V, 2);
        assert_eq!(fps_mul(&a, &one).unwrap(), a);
    }

    #[test]
    fn mismatched_series_rejected() {
        let a = FPSeries::one(SeriesVar::V, 3);
        let b = FPSeries::one(SeriesVar::U, 3);
        let c = FPSeries::one(SeriesVar::V, 4);
        assert!(fps_mul(&a, &b).is_err());
        assert!(fps_add(&a, &c).is_err());
        assert!(fps_exp(&a).is_err());
        assert!(fps_log1p(&a).is_err());
    }

    #[test]
    fn exp_of_theta_v() {
        let a = FPSeries::from_coeffs(
            SeriesVar::V,
            3,
            vec![RationalPoly::zero(), RationalPoly::theta()],
        );
        let e = fps_exp(&a).unwrap();
        assert_eq!(e.coeff(0), &RationalPoly::one());
        assert_eq!(e.coeff(1), &RationalPoly::theta());
        assert_eq!(e.coeff(2), &RationalPoly::monomial(rat(1, 2), 2));
        assert_eq!(e.coeff(3), &RationalPoly::monomial(rat(1, 6), 3));
        let z = fps_exp(&FPSeries::zero(SeriesVar::V, 4)).unwrap();
        assert_eq!(z, FPSeries::one(SeriesVar::V, 4));
    }

    #[test]
    fn log1p_of_v() {
        let v = v_series(3, &[(0, 1), (1, 1)]);
        let l = fps_log1p(&v).unwrap();
        assert_eq!(l, v_series(3, &[(0, 1), (1, 1), (-1, 2), (1, 3)]));
        let back = fps_exp(&l).unwrap();
        assert_eq!(back, v_series(3, &[(1, 1), (1, 1)]));
    }

    #[test]
    fn printed_coefficients() {
        let c = derive_c_tilde(5).unwrap();
        assert_eq!(c[0], RationalPoly::from_i64_pairs(&[(0, 1), (-1, 2)]));
        assert_eq!(c[1], RationalPoly::from_i64_pairs(&[(0, 1), (2, 24), (3, 24)]));
        let a = derive_a(5).unwrap();
        assert_eq!(a[0], RationalPoly::from_i64_pairs(&[(0, 1), (-3, 2)]));
        assert_eq!(a[1], RationalPoly::from_i64_pairs(&[(0, 1), (-34, 24), (27, 24)]));
        let cv = derive_c(4).unwrap();
        assert_eq!(cv[1], RationalPoly::from_i64_pairs(&[(0, 1), (-10, 24), (3, 24)]));
    }

    #[test]
    fn display_is_readable() {
        let p = RationalPoly::from_i64_pairs(&[(0, 1), (-17, 12), (9, 8)]);
        assert_eq!(p.to_string(), "-17/12θ + 9/8θ^2");
    }

    #[test]
    fn json_falls_back_to_strings() {
        let big = BigRational::from_integer(BigInt::from(10).pow(30));
        let p = RationalPoly::constant(big);
        assert_eq!(p.to_json(), json!([["1000000000000000000000000000000", 1]]));
    }
}
