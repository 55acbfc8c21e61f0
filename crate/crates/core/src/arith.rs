//! Von Mangoldt sieve, the Dirichlet coefficients `λ_θ(n)` of
//! `exp(-2θ ζ'/ζ(s))`, and `ζ'/ζ` on the real axis.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::specfun::bernoulli;

/// Sieve cap.
pub const MAX_SIEVE: usize = 10_000_000;

/// `Λ(n)` for `n ≤ n_max`, stored as prime-power tags.
#[derive(Debug, Clone)]
pub struct MangoldtTable {
    n_max: usize,
    base: Vec<u32>,
    exponent: Vec<u8>,
}

impl MangoldtTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `Some((p, k))` when `n = p^k`, `k ≥ 1`.
    pub fn prime_power(&self, n: usize) -> Option<(u32, u8)> {
        match self.base.get(n) {
            Some(&p) if p != 0 => Some((p, self.exponent[n])),
            _ => None,
        }
    }

    /// `Λ(n)`.
    pub fn value(&self, n: usize) -> f64 {
        self.prime_power(n).map_or(0.0, |(p, _)| (p as f64).ln())
    }
}

/// Smallest-prime-factor table by a linear sieve.
fn smallest_prime_factors(n_max: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n_max + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n_max {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            let ip = i * p as usize;
            if p > si || ip > n_max {
                break;
            }
            spf[ip] = p;
        }
    }
    spf
}

fn check_range(n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > MAX_SIEVE {
        return Err(Error::Precondition(format!(
            "n_max must lie in 1..={MAX_SIEVE}, got {n_max}"
        )));
    }
    Ok(())
}

/// Classifies every `n ≤ n_max` as a prime power or not.
pub fn sieve_mangoldt(n_max: usize) -> Result<MangoldtTable> {
    check_range(n_max)?;
    let spf = smallest_prime_factors(n_max);
    let mut base = vec![0u32; n_max + 1];
    let mut exponent = vec![0u8; n_max + 1];
    for n in 2..=n_max {
        let p = spf[n];
        let m = n / p as usize;
        if m == 1 {
            base[n] = p;
            exponent[n] = 1;
        } else if base[m] == p {
            base[n] = p;
            exponent[n] = exponent[m] + 1;
        }
    }
    Ok(MangoldtTable {
        n_max,
        base,
        exponent,
    })
}

/// Coefficients of `exp(a x/(1-x)) = Σ e_k x^k` for `k ≤ k_max`, from
/// `k e_k = a Σ_{i=1}^{k} i e_{k-i}`.
pub fn local_factor(a: f64, k_max: usize) -> Vec<f64> {
    let mut e = vec![0.0; k_max + 1];
    e[0] = 1.0;
    for k in 1..=k_max {
        let s: f64 = (1..=k).map(|i| i as f64 * e[k - i]).sum();
        e[k] = a * s / k as f64;
    }
    e
}

/// `λ_θ(n)` for `1 ≤ n ≤ n_max`.
#[derive(Debug, Clone)]
pub struct LambdaTable {
    theta: f64,
    values: Vec<f64>,
}

impl LambdaTable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `λ_θ(n)`; panics outside `1..=n_max`.
    pub fn get(&self, n: usize) -> f64 {
        assert!(n >= 1 && n < self.values.len(), "lambda index {n} out of range");
        self.values[n]
    }

    /// Values indexed from 1 (index 0 holds 0).
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_{n ≤ n_max} λ_θ(n) n^{-σ}`.
    pub fn dirichlet_sum(&self, sigma: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .map(|(n, &l)| l * (n as f64).powf(-sigma))
            .sum()
    }
}

/// Builds `λ_θ` on prime powers from the local factor and spreads it
/// multiplicatively.
pub fn lambda_table(theta: f64, n_max: usize) -> Result<LambdaTable> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Precondition(format!("theta must be positive, got {theta}")));
    }
    check_range(n_max)?;
    let spf = smallest_prime_factors(n_max);
    let mut values = vec![0.0; n_max + 1];
    values[1] = 1.0;
    let mut local: HashMap<u32, Vec<f64>> = HashMap::new();
    for n in 2..=n_max {
        let p = spf[n];
        let mut m = n;
        let mut k = 0usize;
        while m % p as usize == 0 {
            m /= p as usize;
            k += 1;
        }
        let factor = local.entry(p).or_insert_with(|| {
            let mut kmax = 0;
            let mut q = 1usize;
            while q <= n_max / p as usize {
                q *= p as usize;
                kmax += 1;
            }
            local_factor(2.0 * theta * (p as f64).ln(), kmax.max(1))
        });
        values[n] = factor[k] * values[m];
    }
    Ok(LambdaTable { theta, values })
}

/// Shared table keyed by `(θ, n_max)`.
pub fn lambda_table_cached(theta: f64, n_max: usize) -> Result<Arc<LambdaTable>> {
    type Cache = Mutex<HashMap<(u64, usize), Arc<LambdaTable>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (theta.to_bits(), n_max);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(lambda_table(theta, n_max)?);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, table.clone());
    Ok(table)
}

/// `λ_θ` from the generic recursion `f(n) log n = Σ_{d|n, d>1} 2θΛ(d) log d · f(n/d)`.
/// Quadratic-ish; intended as an oracle for small `n_max`.
pub fn lambda_by_divisor_recursion(theta: f64, n_max: usize) -> Result<Vec<f64>> {
    let mangoldt = sieve_mangoldt(n_max)?;
    let mut f = vec![0.0; n_max + 1];
    f[1] = 1.0;
    let mut acc = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        if n > 1 {
            f[n] = acc[n] / (n as f64).ln();
        }
        // push f(n) forward to every n·d with d a prime power
        for d in 2..=n_max / n {
            let lam = mangoldt.value(d);
            if lam > 0.0 {
                acc[n * d] += 2.0 * theta * lam * (d as f64).ln() * f[n];
            }
        }
    }
    Ok(f)
}

/// A truncated series together with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    pub tail_bound: f64,
    pub n_max: usize,
}

/// `∫_N^∞ log(u) u^{-σ} du`.
pub fn log_tail_integral(n: f64, sigma: f64) -> f64 {
    let s1 = sigma - 1.0;
    n.powf(-s1) * (n.ln() / s1 + 1.0 / (s1 * s1))
}

/// `ζ'/ζ(σ) = -Σ_{n ≤ n_max} Λ(n) n^{-σ}` with tail bound
/// `∫_{n_max}^∞ log(u) u^{-σ} du` (valid since `Λ(n) ≤ log n`, decreasing
/// beyond `n = 3`).
pub fn zeta_log_deriv_truncated(sigma: f64, n_max: usize) -> Result<Certified> {
    if !(sigma > 1.0) {
        return Err(Error::Precondition(format!("sigma must exceed 1, got {sigma}")));
    }
    let n_max = n_max.max(3);
    let table = sieve_mangoldt(n_max)?;
    let value = -(2..=n_max)
        .rev()
        .map(|n| table.value(n) * (n as f64).powf(-sigma))
        .sum::<f64>();
    Ok(Certified {
        value,
        tail_bound: log_tail_integral(n_max as f64, sigma),
        n_max,
    })
}

/// Smallest power-of-two-ish `n_max ≤ MAX_SIEVE` whose tail bound meets
/// `tol`, then the truncated sum. Fails when the cap is not enough.
pub fn zeta_log_deriv_certified(sigma: f64, tol: f64) -> Result<Certified> {
    if !(sigma >= 1.25) {
        return Err(Error::Precondition(format!("sigma must be >= 1.25, got {sigma}")));
    }
    let mut n = 16usize;
    while log_tail_integral(n as f64, sigma) > tol {
        if n >= MAX_SIEVE {
            return Err(Error::TailBound {
                bound: log_tail_integral(MAX_SIEVE as f64, sigma),
                tolerance: tol,
            });
        }
        n = (n * 2).min(MAX_SIEVE);
    }
    zeta_log_deriv_truncated(sigma, n)
}

const EM_N: usize = 20;
const EM_TERMS: usize = 14;

/// `(ζ(σ), ζ'(σ))` by Euler–Maclaurin summation with `N = 20` and 14
/// Bernoulli correction terms; relative accuracy near machine precision
/// for `σ > 1`.
pub fn zeta_and_derivative(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(Error::Precondition(format!("sigma must exceed 1, got {sigma}")));
    }
    let s = sigma;
    let nf = EM_N as f64;
    let ln_n = nf.ln();
    let mut z = 0.0;
    let mut dz = 0.0;
    for n in (1..EM_N).rev() {
        let x = n as f64;
        let t = x.powf(-s);
        z += t;
        dz -= x.ln() * t;
    }
    let n1s = nf.powf(1.0 - s);
    z += n1s / (s - 1.0) + 0.5 * nf.powf(-s);
    dz += -ln_n * n1s / (s - 1.0) - n1s / ((s - 1.0) * (s - 1.0)) - 0.5 * ln_n * nf.powf(-s);
    let b = bernoulli();
    // T_k = B_{2k}/(2k)! · P_k(s) N^{-s-2k+1},  P_k(s) = Π_{j=0}^{2k-2} (s+j)
    let mut poly = s;
    let mut dlog_poly = 1.0 / s;
    let mut fact = 2.0;
    let mut npow = nf.powf(-s - 1.0);
    for k in 1..=EM_TERMS {
        let term = b.b2n_f64(k) / fact * poly * npow;
        z += term;
        dz += term * (dlog_poly - ln_n);
        let kk = 2 * k;
        poly *= (s + kk as f64 - 1.0) * (s + kk as f64);
        dlog_poly += 1.0 / (s + kk as f64 - 1.0) + 1.0 / (s + kk as f64);
        fact *= ((kk + 1) * (kk + 2)) as f64;
        npow /= nf * nf;
    }
    Ok((z, dz))
}

/// `ζ'/ζ(σ)` for `σ > 1` via Euler–Maclaurin.
pub fn zeta_log_deriv(sigma: f64) -> Result<f64> {
    let (z, dz) = zeta_and_derivative(sigma)?;
    Ok(dz / z)
}

/// Bound on `Σ_{n > n_max} λ_θ(n) n^{-σ}`: for any `1 < σ₀ < σ` the tail is
/// at most `n_max^{σ₀-σ} exp(-2θ ζ'/ζ(σ₀))`; minimised over a grid of `σ₀`.
pub fn lambda_tail_bound(theta: f64, sigma: f64, n_max: usize) -> Result<f64> {
    if !(sigma > 1.0) {
        return Err(Error::Precondition(format!("sigma must exceed 1, got {sigma}")));
    }
    let nf = n_max as f64;
    let mut best = f64::INFINITY;
    for i in 1..200 {
        let s0 = 1.0 + (sigma - 1.0) * i as f64 / 200.0;
        let bound = (nf.ln() * (s0 - sigma) - 2.0 * theta * zeta_log_deriv(s0)?).exp();
        best = best.min(bound);
    }
    Ok(best)
}
