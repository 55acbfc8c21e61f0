//! Scalar special functions on the positive real axis.
//!
//! Everything here is a pure function of its arguments. The Bernoulli table
//! is computed once, exactly, and shared.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest argument accepted by the Bessel routines.
pub const BESSEL_Z_MAX: f64 = 60.0;

/// Highest Bernoulli index kept in the shared table (`B_60`).
pub const BERNOULLI_MAX: usize = 60;

/// Exact even-index Bernoulli numbers `B_2, B_4, …, B_{2N}`.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    values: Vec<BigRational>,
    floats: Vec<f64>,
}

impl BernoulliTable {
    /// Builds `B_2 … B_{2n}` from the recursion `Σ_{k=0}^{m} C(m+1,k) B_k = 0`.
    pub fn new(n: usize) -> Self {
        let all = bernoulli_numbers(2 * n);
        let values: Vec<BigRational> = (1..=n).map(|k| all[2 * k].clone()).collect();
        let floats = values.iter().map(|b| b.to_f64().unwrap_or(f64::NAN)).collect();
        Self { values, floats }
    }

    /// Number of stored even Bernoulli numbers.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `B_{2n}` for `n ≥ 1`.
    pub fn b2n(&self, n: usize) -> &BigRational {
        &self.values[n - 1]
    }

    pub fn b2n_f64(&self, n: usize) -> f64 {
        self.floats[n - 1]
    }
}

/// Shared table of `B_2 … B_60`.
pub fn bernoulli() -> &'static BernoulliTable {
    static TABLE: OnceLock<BernoulliTable> = OnceLock::new();
    TABLE.get_or_init(|| BernoulliTable::new(BERNOULLI_MAX / 2))
}

/// All Bernoulli numbers `B_0 … B_m` (with `B_1 = -1/2`).
pub fn bernoulli_numbers(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m + 1);
    b.push(BigRational::one());
    for n in 1..=m {
        // binom(n+1, k) built incrementally
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            if !bk.is_zero() {
                acc += BigRational::from_integer(binom.clone()) * bk;
            }
            binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(n + 1)));
    }
    b
}

/// Bessel order `ν ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RealOrder(f64);

impl RealOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(Self(nu))
        } else {
            Err(domain("RealOrder::new", nu, "order must be finite and >= 0"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn ln_gamma_stirling(x: f64) -> f64 {
    debug_assert!(x >= 10.0);
    let b = bernoulli();
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut series = 0.0;
    for k in 1..=9 {
        let kk = k as f64;
        series += b.b2n_f64(k) / (2.0 * kk * (2.0 * kk - 1.0)) * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("ln_gamma", x, "x > 0 required"));
    }
    if x >= 10.0 {
        return Ok(ln_gamma_stirling(x));
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < 10.0 {
        prod *= shifted;
        shifted += 1.0;
    }
    Ok(ln_gamma_stirling(shifted) - prod.ln())
}

/// `Γ(x)` for `0 < x ≤ 171`.
pub fn gamma_real(x: f64) -> Result<f64> {
    if !(x > 0.0) || x > 171.0 {
        return Err(domain("gamma_real", x, "0 < x <= 171 required"));
    }
    if x >= 10.0 {
        return Ok(ln_gamma_stirling(x).exp());
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < 10.0 {
        prod *= shifted;
        shifted += 1.0;
    }
    Ok(ln_gamma_stirling(shifted).exp() / prod)
}

/// Digamma `ψ(x) = Γ'(x)/Γ(x)` for `x > 0`.
///
/// Shifts upward with `ψ(x+1) = ψ(x) + 1/x` until `x ≥ 12`, then uses
/// `ψ(x) = log x − 1/(2x) − Σ B_{2n}/(2n x^{2n})`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("digamma", x, "x > 0 required"));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let b = bernoulli();
    let inv2 = 1.0 / (y * y);
    let mut pow = inv2;
    let mut tail = 0.0;
    for n in 1..=10 {
        tail += b.b2n_f64(n) / (2.0 * n as f64) * pow;
        pow *= inv2;
    }
    Ok(acc + y.ln() - 0.5 / y - tail)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Modified Bessel function of the first kind `I_ν(z)`, `0 ≤ z ≤ 60`.
///
/// Plain power series `Σ (z/2)^{2m+ν} / (m! Γ(ν+m+1))`; every term is
/// positive so there is no cancellation.
pub fn bessel_i(nu: RealOrder, z: f64) -> Result<f64> {
    let nu = nu.get();
    if !(0.0..=BESSEL_Z_MAX).contains(&z) {
        return Err(domain("bessel_i", z, "0 <= z <= 60 required"));
    }
    if z == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * z;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)?).exp();
    let q = half * half;
    let mut sum = CompensatedSum::default();
    sum.add(term);
    for m in 0..500 {
        let mf = m as f64;
        term *= q / ((mf + 1.0) * (nu + mf + 1.0));
        sum.add(term);
        if mf > half && term < 1e-17 * sum.value() {
            break;
        }
    }
    Ok(sum.value())
}

/// Which Bessel function of the first kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselJKind {
    J0,
    J1,
}

const J_SERIES_CUTOFF: f64 = 4.0;

fn j_series(order: u32, z: f64) -> f64 {
    // Σ (-1)^m (z/2)^{2m+order} / (m! (m+order)!)
    let half = 0.5 * z;
    let q = -half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = CompensatedSum::default();
    sum.add(term);
    for m in 0..200 {
        let mf = m as f64;
        term *= q / ((mf + 1.0) * (mf + 1.0 + order as f64));
        sum.add(term);
        if term.abs() < 1e-18 * sum.value().abs().max(1e-300) {
            break;
        }
    }
    sum.value()
}

/// `(J_0(z), J_1(z))` by Miller's backward recurrence, normalised with
/// `J_0 + 2 Σ J_{2k} = 1`.
fn j_miller(z: f64) -> (f64, f64) {
    let start = ((2.0 * z).max(z + 40.0) as usize + 2) & !1;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / z * cur - next;
        next = cur;
        cur = prev;
        // cur = j_{k-1}
        if k > 1 && (k - 1) % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            norm *= 1e-200;
        }
    }
    // cur = j_0, next = j_1
    let s = cur + norm;
    (cur / s, next / s)
}

/// Bessel function of the first kind `J_0` or `J_1` for `0 ≤ z ≤ 60`.
///
/// Alternating power series below `z = 4`; Miller's backward recurrence
/// above, where the series loses digits to cancellation.
pub fn bessel_j(kind: BesselJKind, z: f64) -> Result<f64> {
    if !(0.0..=BESSEL_Z_MAX).contains(&z) {
        return Err(domain("bessel_j", z, "0 <= z <= 60 required"));
    }
    let order = match kind {
        BesselJKind::J0 => 0,
        BesselJKind::J1 => 1,
    };
    if z < J_SERIES_CUTOFF {
        return Ok(j_series(order, z));
    }
    let (j0, j1) = j_miller(z);
    Ok(if order == 0 { j0 } else { j1 })
}

/// `J_1(z)/z`, continuous at `z = 0` with value `1/2`.
pub fn bessel_j1_over_z(z: f64) -> Result<f64> {
    if !(0.0..=BESSEL_Z_MAX).contains(&z) {
        return Err(domain("bessel_j1_over_z", z, "0 <= z <= 60 required"));
    }
    if z < J_SERIES_CUTOFF {
        // Σ (-1)^m (z/2)^{2m} / (2 m! (m+1)!)
        let q = -0.25 * z * z;
        let mut term = 0.5;
        let mut sum = CompensatedSum::default();
        sum.add(term);
        for m in 0..200 {
            let mf = m as f64;
            term *= q / ((mf + 1.0) * (mf + 2.0));
            sum.add(term);
            if term.abs() < 1e-18 * sum.value().abs() {
                break;
            }
        }
        return Ok(sum.value());
    }
    Ok(j_miller(z).1 / z)
}

/// `ψ'(x)` (trigamma) for `x > 0`, by the same shift-then-asymptotic scheme.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("trigamma", x, "x > 0 required"));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let b = bernoulli();
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut pow = inv2 * inv;
    let mut tail = 0.0;
    for n in 1..=10 {
        tail += b.b2n_f64(n) * pow;
        pow *= inv2;
    }
    Ok(acc + inv + 0.5 * inv2 + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bernoulli_known_values() {
        let b = bernoulli();
        assert_eq!(b.b2n(1), &BigRational::new(1.into(), 6.into()));
        assert_eq!(b.b2n(2), &BigRational::new((-1).into(), 30.into()));
        assert_eq!(b.b2n(6), &BigRational::new((-691).into(), 2730.into()));
        assert_eq!(b.len(), 30);
        let all = bernoulli_numbers(5);
        assert_eq!(all[1], BigRational::new((-1).into(), 2.into()));
        assert!(all[3].is_zero() && all[5].is_zero());
    }

    #[test]
    fn gamma_small_values() {
        assert_relative_eq!(gamma_real(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            gamma_real(0.5).unwrap(),
            std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(gamma_real(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert!(gamma_real(0.0).is_err());
        assert!(gamma_real(-1.0).is_err());
        assert!(gamma_real(172.0).is_err());
    }

    #[test]
    fn gamma_by_recurrence_from_half() {
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < 7.5 {
            g *= x;
            x += 1.0;
        }
        assert_relative_eq!(gamma_real(7.5).unwrap(), g, max_relative = 1e-13);
    }

    #[test]
    fn digamma_anchor_values() {
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, max_relative = 1e-14);
        assert_relative_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, max_relative = 1e-14);
        assert!(digamma(0.0).is_err());
        assert!(digamma(-2.5).is_err());
    }

    #[test]
    fn trigamma_at_one() {
        let pi = std::f64::consts::PI;
        assert_relative_eq!(trigamma(1.0).unwrap(), pi * pi / 6.0, max_relative = 1e-13);
    }

    #[test]
    fn bessel_i_at_origin() {
        let one = RealOrder::new(1.0).unwrap();
        let zero = RealOrder::new(0.0).unwrap();
        assert_eq!(bessel_i(one, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(zero, 0.0).unwrap(), 1.0);
        assert!(bessel_i(zero, -1.0).is_err());
        assert!(bessel_i(zero, 61.0).is_err());
        assert!(RealOrder::new(-0.5).is_err());
    }

    #[test]
    fn bessel_i_half_order_closed_form() {
        // I_{1/2}(z) = sqrt(2/(π z)) sinh z
        let nu = RealOrder::new(0.5).unwrap();
        for &z in &[0.3, 2.0, 11.0, 40.0] {
            let exact = (2.0 / (std::f64::consts::PI * z)).sqrt() * z.sinh();
            assert_relative_eq!(bessel_i(nu, z).unwrap(), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn bessel_j_values() {
        assert_eq!(bessel_j(BesselJKind::J0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(BesselJKind::J1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j1_over_z(0.0).unwrap(), 0.5);
        // reference values
        assert_relative_eq!(
            bessel_j(BesselJKind::J0, 10.0).unwrap(),
            -0.245_935_764_451_348_3,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bessel_j(BesselJKind::J1, 10.0).unwrap(),
            0.043_472_746_168_861_44,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            bessel_j(BesselJKind::J0, 1.0).unwrap(),
            0.765_197_686_557_966_6,
            max_relative = 1e-14
        );
    }

    #[test]
    fn j_series_and_miller_agree_near_cutoff() {
        for &z in &[3.0, 3.9, 4.1, 5.0] {
            let (m0, m1) = j_miller(z);
            assert!((m0 - j_series(0, z)).abs() < 1e-14);
            assert!((m1 - j_series(1, z)).abs() < 1e-14);
        }
    }
}
