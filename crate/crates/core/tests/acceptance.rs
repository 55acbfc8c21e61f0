//! Acceptance criteria. Every test writes one `PASS`/`FAIL` line straight to
//! stderr (bypassing the harness capture) and then asserts its verdict.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_integer::Integer;
use zeta_kernel::arith::lambda_table;
use zeta_kernel::fps::{derive_a, derive_c, derive_c_tilde, RationalPoly};
use zeta_kernel::fredholm::{discretize, Discretization, FieldKind, HamiltonianRow};
use zeta_kernel::kernel::{build_kernel, ExponentialKernel, Kernel, ZeroKernel};
use zeta_kernel::verify::{
    mean_series_residual, run_identity_suite, run_identity_suite_with, run_k_properties,
    run_transform_suite, VerifyConfig,
};

const THETAS: [f64; 3] = [1.5, 2.0, 3.0];

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "\ncriterion {id} [{name}]: {tag} ({:.2} s) {detail}",
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn poly(pairs: &[(i64, i64)]) -> RationalPoly {
    RationalPoly::from_i64_pairs(pairs)
}

#[test]
fn criterion_1_coefficient_exactness() {
    let start = Instant::now();
    let ct = derive_c_tilde(3).unwrap();
    let a = derive_a(3).unwrap();
    let c = derive_c(3).unwrap();
    let checks = [
        ("C~_1", &ct[0], poly(&[(0, 1), (-1, 2)])),
        ("C~_2", &ct[1], poly(&[(0, 1), (2, 24), (3, 24)])),
        ("A_1", &a[0], poly(&[(0, 1), (-3, 2)])),
        ("A_2", &a[1], poly(&[(0, 1), (-34, 24), (27, 24)])),
        ("C_2", &c[1], poly(&[(0, 1), (-10, 24), (3, 24)])),
    ];
    let wrong: Vec<&str> = checks.iter().filter(|(_, got, want)| *got != want).map(|c| c.0).collect();
    let elapsed = start.elapsed();
    verdict(
        1,
        "coefficient exactness",
        wrong.is_empty() && elapsed < Duration::from_secs(1),
        elapsed,
        &format!("mismatched={wrong:?}"),
    );
}

#[test]
fn criterion_2_transform_oracles() {
    let start = Instant::now();
    let cfg = VerifyConfig::default();
    let mut failures = Vec::new();
    let mut worst = [0.0f64; 3];
    for theta in THETAS {
        let rows = run_transform_suite(theta, &[2.0, 3.0, 4.0], &cfg).unwrap();
        for (k, (label, tol)) in [("psi_N", 1e-7), ("g_N", 1e-6), ("K_theta", 1e-6)].iter().enumerate() {
            for r in rows.iter().filter(|r| r.label == *label) {
                worst[k] = worst[k].max(r.rel_err);
                let ok = r.rel_err.is_finite() && r.budget() < *tol && r.rel_err <= tol - r.budget();
                if !ok {
                    failures.push(format!(
                        "{label}(θ={theta},σ={}) err={:.1e} budget={:.1e}",
                        r.sigma,
                        r.rel_err,
                        r.budget()
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "transform oracles",
        failures.is_empty() && elapsed < Duration::from_secs(60),
        elapsed,
        &format!(
            "worst psi_N={:.1e} g_N={:.1e} K={:.1e}; failing: {}",
            worst[0],
            worst[1],
            worst[2],
            failures.join(", ")
        ),
    );
}

#[test]
fn criterion_3_identity_chain() {
    let start = Instant::now();
    let cfg = VerifyConfig {
        tol_chain: 1e-6,
        tol_fd: 1e-4,
        fd_step: 1e-3,
        ..VerifyConfig::default()
    };
    let grid = [0.25, 0.5, 1.0, 1.5, 2.0];
    let (mut failures, mut skipped, mut passed) = (Vec::new(), 0usize, 0usize);
    for theta in THETAS {
        for r in run_identity_suite(theta, &grid, &cfg).unwrap() {
            if !r.applicable {
                skipped += 1;
            } else if r.pass {
                passed += 1;
            } else {
                failures.push(format!(
                    "{}(θ={theta},t={}) res={:.1e} budget={:.1e}",
                    r.name, r.t, r.residual, r.budget
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "identity chain",
        failures.is_empty() && skipped == 0 && elapsed < Duration::from_secs(300),
        elapsed,
        &format!(
            "passed={passed} beyond-first-zero={skipped}; failing: {}",
            failures.join(", ")
        ),
    );
}

#[test]
fn criterion_4_boundary_cases() {
    let start = Instant::now();
    let disc = Discretization::default();
    let mut notes = Vec::new();
    for theta in THETAS {
        let k: Arc<dyn Kernel> = Arc::new(build_kernel(theta, 14, 1.0).unwrap());
        let sys = discretize(k, 0.0, disc).unwrap();
        let row = HamiltonianRow::from_system(&sys);
        let phi = sys.solve_field(FieldKind::Phi).unwrap().boundary;
        for (what, v) in [("m", row.m), ("Phi(0,0)", phi), ("det+", row.det_plus), ("det-", row.det_minus)] {
            if (v - 1.0).abs() > 1e-12 {
                notes.push(format!("{what}(θ={theta})={v}"));
            }
        }
    }
    let cfg = VerifyConfig::default();
    for r in run_identity_suite_with(Arc::new(ZeroKernel), 2.0, &[0.0, 0.5, 1.0, 2.0], &cfg).unwrap() {
        if r.applicable && r.residual != 0.0 {
            notes.push(format!("zero kernel {}(t={}) res={:e}", r.name, r.t, r.residual));
        }
    }
    let rank1 = ExponentialKernel { c: 0.3 };
    let k: Arc<dyn Kernel> = Arc::new(rank1);
    let mut worst = 0.0f64;
    for t in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let sys = discretize(k.clone(), t, disc).unwrap();
        for s in [1i8, -1] {
            let want = rank1.det_closed_form(t, s);
            worst = worst.max((sys.fredholm_det(s).value - want).abs());
        }
    }
    if worst > 1e-10 {
        notes.push(format!("rank-one det error {worst:e}"));
    }
    verdict(
        4,
        "boundary and degenerate cases",
        notes.is_empty(),
        start.elapsed(),
        &format!("rank-one worst={worst:.1e} {}", notes.join(", ")),
    );
}

/// Coefficient of `x^k` in `exp(a Σ_{j≥1} x^j)`: `Σ_j C(k-1, j-1) a^j / j!`.
fn local_factor_closed_form(a: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut pow_over_fact = 1.0;
    for j in 1..=k {
        pow_over_fact *= a / j as f64;
        if j > 1 {
            binom *= (k - j + 1) as f64 / (j - 1) as f64;
        }
        sum += binom * pow_over_fact;
    }
    sum
}

#[test]
fn criterion_5_lambda_properties() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pairs = 0usize;
    for theta in THETAS {
        let t = lambda_table(theta, 13usize.pow(5)).unwrap();
        for m in 2..=1000usize {
            for n in m + 1..=2000 / m {
                if m.gcd(&n) != 1 {
                    continue;
                }
                pairs += 1;
                let prod = t.get(m) * t.get(n);
                if (t.get(m * n) - prod).abs() > 1e-12 * prod.abs() {
                    notes.push(format!("θ={theta} ({m},{n})"));
                }
            }
        }
        for p in [2usize, 3, 5, 7, 11, 13] {
            let a = 2.0 * theta * (p as f64).ln();
            for k in 1..=5u32 {
                let want = local_factor_closed_form(a, k);
                let got = t.get(p.pow(k));
                if (got - want).abs() > 1e-12 * want {
                    notes.push(format!("θ={theta} {p}^{k}: {got} vs {want}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        5,
        "lambda properties",
        notes.is_empty() && elapsed < Duration::from_secs(10),
        elapsed,
        &format!("coprime pairs={pairs} {}", notes.join(", ")),
    );
}

#[test]
fn criterion_6_k_properties() {
    let start = Instant::now();
    let report = run_k_properties(2.0, &VerifyConfig::default()).unwrap();
    let v = &report.variation;
    verdict(
        6,
        "kernel property suite",
        report.pass(),
        start.elapsed(),
        &format!(
            "support={} growth C={:.3} variation rel_change={:.1e} sweep budgets certified={} first_near_zero_t={:?} first_zero≈{:?}",
            report.support.pass,
            report.growth.constant,
            v.rel_change,
            report.sweep.pass,
            report.sweep.first_near_zero_t,
            report.sweep.first_zero_estimate
        ),
    );
}

#[test]
fn criterion_7_self_convergence() {
    let start = Instant::now();
    let k: Arc<dyn Kernel> = Arc::new(build_kernel(2.0, 14, 2.5).unwrap());
    let disc = Discretization::default();
    let m = |d| HamiltonianRow::from_system(&discretize(k.clone(), 1.0, d).unwrap()).m;
    let (coarse, fine) = (m(disc), m(disc.doubled()));
    let change = (fine - coarse).abs();
    let residuals: Vec<f64> = (10..=14)
        .map(|n| mean_series_residual(2.0, n, &[2.0, 3.0, 4.0]).unwrap())
        .collect();
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    let fmt: Vec<String> = residuals.iter().map(|r| format!("{r:.2e}")).collect();
    verdict(
        7,
        "self-convergence",
        change < 1e-8 && monotone,
        start.elapsed(),
        &format!(
            "m(1)={fine:.12} doubling change={change:.1e}; mean residual N=10..14: [{}]",
            fmt.join(", ")
        ),
    );
}
