use std::process::{Command, Output};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde_json::Value;
use zeta_kernel::fredholm::{discretize, Discretization, HamiltonianRow};
use zeta_kernel::kernel::{build_kernel, Kernel};

fn zkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Header JSON, column names and parsed rows of a CSV output.
fn csv(out: &Output) -> (Value, Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, columns, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn lambda_rows() {
    let (header, columns, rows) = csv(&zkernel(&["lambda", "--n-max", "12", "--theta", "2"]));
    assert_eq!(columns, ["n", "lambda_theta_n"]);
    assert_eq!(header["meta"]["n_max"], 12);
    assert_eq!(rows[0], ["1", "1.0"]);
    assert!((num(&rows[1][1]) - 4.0 * 2f64.ln()).abs() < 1e-14);
    let l = |n: usize| num(&rows[n - 1][1]);
    assert!((l(6) - l(2) * l(3)).abs() <= 1e-12 * l(6));
}

#[test]
fn kernel_rows_honour_kinks_and_direct_summation() {
    let out = zkernel(&["kernel", "--x-min", "-1", "--step", "0.05", "--t-max", "1", "--x-max", "2.5"]);
    let (header, columns, rows) = csv(&out);
    assert_eq!(columns, ["x", "K_theta_x", "dK_left", "dK_right"]);
    assert_eq!(header["meta"]["N"], 14);
    assert_eq!(header["meta"]["n_cut"], 13);
    assert_eq!(rows[0][0], "-1.0");
    assert_eq!(num(&rows[0][1]), 0.0);

    let ln2 = rows.iter().find(|r| num(&r[0]) == 2f64.ln()).expect("log 2 row");
    assert_ne!(num(&ln2[2]), num(&ln2[3]), "derivative jumps at log 2");

    let k = build_kernel(2.0, 14, 2.5).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let positive: Vec<&Vec<String>> = rows.iter().filter(|r| num(&r[0]) > 0.0).collect();
    for _ in 0..20 {
        let r = positive[rng.gen_range(0..positive.len())];
        let (x, v) = (num(&r[0]), num(&r[1]));
        let direct = k.value_direct(x);
        assert!((v - direct).abs() <= 1e-8 * direct.abs().max(1.0), "x={x}: {v} vs {direct}");
    }
}

#[test]
fn density_columns() {
    let (_, columns, rows) = csv(&zkernel(&["density", "--step", "0.5", "--t-max", "1"]));
    assert_eq!(columns, ["x", "psi0", "psi_N", "g_N", "g_closed_form"]);
    assert_eq!(rows[0][0], "0.0");
    assert_eq!(rows.last().unwrap()[0], "2.5");
}

#[test]
fn hamiltonian_rows() {
    let (_, columns, rows) = csv(&zkernel(&["hamiltonian", "--t-max", "1", "--t-steps", "4"]));
    assert_eq!(columns, ["t", "m", "h11", "h22", "det_plus", "det_minus", "flag"]);
    assert_eq!(&rows[0][..4], ["0.0", "1.0", "1.0", "1.0"]);
    for r in &rows {
        let p = num(&r[2]) * num(&r[3]);
        assert!((p - 1.0).abs() < 1e-12, "h11 h22 = {p}");
    }

    // same engine through the library; the default x_max is 2 t_max + 0.5
    let k: Arc<dyn Kernel> = Arc::new(build_kernel(2.0, 14, 2.5).unwrap());
    let lib = HamiltonianRow::from_system(&discretize(k, 1.0, Discretization::default()).unwrap());
    let cli = num(&rows[4][1]);
    assert_eq!(num(&rows[4][0]), 1.0);
    assert!((cli - lib.m).abs() <= 1e-8 * lib.m, "{cli} vs {}", lib.m);
}

#[test]
fn solve_ends_with_boundary_row() {
    let (header, columns, rows) = csv(&zkernel(&["solve", "--t", "0.25", "--t-max", "0.5"]));
    assert_eq!(columns, ["x", "Phi", "Psi", "phi_plus", "phi_minus"]);
    assert_eq!(rows.len(), header["meta"]["nodes"].as_u64().unwrap() as usize + 1);
    assert_eq!(rows.last().unwrap()[0], "0.25");
    let m = header["meta"]["m"].as_f64().unwrap();
    let b = rows.last().unwrap();
    // m(t) = 1/Φ(t,t) = Ψ(t,t)
    assert!((m * num(&b[1]) - 1.0).abs() < 1e-6);
    assert!((num(&b[2]) / m - 1.0).abs() < 1e-6);
}

#[test]
fn zero_kernel_identities_pass_exactly() {
    let out = zkernel(&["verify", "--suite", "theorem1", "--kernel", "zero", "--t-max", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["version"], zeta_kernel::VERSION);
    let rows = v["suites"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3 * 8);
    assert!(rows.iter().all(|r| r["residual"] == 0.0 && r["pass"] == true));
}

#[test]
fn coeffs_dump() {
    let out = zkernel(&["coeffs", "--order", "3"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["c_tilde"].as_array().unwrap().len(), 3);
    assert_eq!(v["c_tilde"][0]["poly"], serde_json::json!([[0, 1], [-1, 2]]));
    assert_eq!(v["a"][1]["n"], 2);
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["hamiltonian", "--t-max", "0.5", "--t-steps", "5", "--format", "json"];
    let (a, b) = (zkernel(&args), zkernel(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("lambda.csv");
    std::fs::write(&cfg, "# study\ntheta = 3\nformat = csv\n").unwrap();
    let path = out.to_str().unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["lambda", "--n-max", "2", "--config", cfg.to_str().unwrap(), "-o", path];
        args.extend(extra);
        assert!(zkernel(&args).status.success());
        std::fs::read_to_string(&out).unwrap()
    };
    let from_file = run(&[]);
    assert!(from_file.lines().nth(3).unwrap().starts_with(&format!("2,{:?}", 6.0 * 2f64.ln())));
    let overridden = run(&["--theta", "2"]);
    assert!(overridden.lines().nth(3).unwrap().starts_with(&format!("2,{:?}", 4.0 * 2f64.ln())));
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(zkernel(&["lambda", "--theta", "0.5"]).status.code(), Some(2));
    assert_eq!(zkernel(&["hamiltonian", "--t-max", "3", "--x-max", "4"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    let out = zkernel(&["lambda", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn strict_mode_flags_the_first_zero() {
    let args = ["hamiltonian", "--t-max", "1.2", "--t-steps", "2"];
    assert_eq!(zkernel(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(zkernel(&strict).status.code(), Some(3));
}
