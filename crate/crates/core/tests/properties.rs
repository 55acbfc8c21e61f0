use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;
use zeta_kernel::arith::{lambda_by_divisor_recursion, lambda_table};
use zeta_kernel::fps::{
    derive_a, derive_c_tilde, fps_exp, fps_log1p, fps_add, FPSeries, RationalPoly, SeriesVar,
};
use zeta_kernel::specfun::{bessel_i, digamma, ln_gamma, RealOrder};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `1 + Σ p_n(θ) x^n` at a rational `θ`, as plain rationals.
fn unit_series(polys: &[RationalPoly], theta: &BigRational) -> Vec<BigRational> {
    std::iter::once(rat(1, 1))
        .chain(polys.iter().map(|p| p.eval_rational(theta)))
        .collect()
}

fn truncated_product(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|j| &a[j] * &b[k - j]).sum())
        .collect()
}

fn small_series() -> impl Strategy<Value = FPSeries> {
    prop::collection::vec(((-9i64..=9), (1i64..=7), (-5i64..=5), (1i64..=5)), 6).prop_map(|cs| {
        let mut coeffs = vec![RationalPoly::zero()];
        coeffs.extend(cs.into_iter().map(|(a, b, c, d)| RationalPoly::from_i64_pairs(&[(a, b), (c, d)])));
        FPSeries::from_coeffs(SeriesVar::U, 6, coeffs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_three_term_recurrence(nu in 1.0f64..6.0, z in 0.05f64..40.0) {
        let i = |v: f64| bessel_i(RealOrder::new(v).unwrap(), z).unwrap();
        let lhs = i(nu - 1.0) - i(nu + 1.0);
        let rhs = 2.0 * nu / z * i(nu);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (i(nu - 1.0) + rhs.abs()), "{lhs} {rhs}");
    }

    #[test]
    fn digamma_and_ln_gamma_shift(x in 0.01f64..80.0) {
        let dpsi = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        prop_assert!((dpsi - 1.0 / x).abs() <= 1e-13 * (1.0 / x).max(digamma(x).unwrap().abs()));
        let dlg = ln_gamma(x + 1.0).unwrap() - ln_gamma(x).unwrap();
        prop_assert!((dlg - x.ln()).abs() <= 1e-13 * ln_gamma(x).unwrap().abs().max(1.0));
    }

    #[test]
    fn exp_inverts_log1p(a in small_series()) {
        let l = fps_log1p(&a).unwrap();
        let back = fps_exp(&l).unwrap();
        let one = FPSeries::one(SeriesVar::U, 6);
        prop_assert_eq!(back, fps_add(&one, &a).unwrap());
    }

    #[test]
    fn expansion_coefficients_are_exponential_in_theta(
        p in 1i64..12, q in 1i64..7, r in 1i64..12, s in 1i64..7
    ) {
        let (t1, t2) = (rat(p, q), rat(r, s));
        let sum = &t1 + &t2;
        for polys in [derive_c_tilde(8).unwrap(), derive_a(8).unwrap()] {
            let prod = truncated_product(&unit_series(&polys, &t1), &unit_series(&polys, &t2));
            prop_assert_eq!(prod, unit_series(&polys, &sum));
        }
    }

    #[test]
    fn lambda_is_multiplicative(m in 1usize..=60, n in 1usize..=33, theta in 1.01f64..4.0) {
        prop_assume!(m.gcd(&n) == 1);
        let t = lambda_table(theta, 2000).unwrap();
        let prod = t.get(m) * t.get(n);
        prop_assert!((t.get(m * n) - prod).abs() <= 1e-12 * prod.abs());
    }

    #[test]
    fn lambda_positive_and_increasing_in_theta(n in 2usize..=500, theta in 1.01f64..4.0, dt in 0.01f64..1.0) {
        let a = lambda_table(theta, 500).unwrap().get(n);
        let b = lambda_table(theta + dt, 500).unwrap().get(n);
        prop_assert!(a >= 0.0 && b >= a);
    }
}

#[test]
fn coefficient_degrees_bounded_by_index() {
    for (n, p) in derive_c_tilde(12).unwrap().iter().enumerate() {
        assert!(p.degree().is_some_and(|d| d <= n + 1), "C̃_{} degree {:?}", n + 1, p.degree());
    }
}

#[test]
fn lambda_sieve_matches_divisor_recursion() {
    for theta in [1.5, 2.0, 3.0] {
        let t = lambda_table(theta, 600).unwrap();
        let r = lambda_by_divisor_recursion(theta, 600).unwrap();
        for n in 1..=600 {
            assert!((t.get(n) - r[n]).abs() <= 1e-11 * r[n].abs().max(1.0), "n={n}");
        }
    }
}
