use std::sync::Arc;

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use zeta_kernel::archimedean::{self, ArchParams, Density};
use zeta_kernel::arith::lambda_table;
use zeta_kernel::fps::{coefficients_json, derive_a, derive_c_tilde};
use zeta_kernel::fredholm::{discretize, m_of_t, FieldKind, HamiltonianRow, RowFlag};
use zeta_kernel::kernel::{build_kernel_with, Kernel, KernelProfile, ZeroKernel};
use zeta_kernel::report::{IdentityReport, TransformCheckReport};
use zeta_kernel::verify::{
    run_identity_suite, run_identity_suite_with, run_k_properties, run_transform_suite,
    KPropertiesReport, VerifyConfig,
};

use crate::config::{KernelKind, RunConfig};
use crate::error::CliError;
use crate::output::{emit, header, pretty, Cell, Table};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet coefficients `λ_θ(n)`.
    Lambda {
        #[arg(long, default_value_t = 100)]
        n_max: usize,
    },
    /// `K_θ` on a uniform grid merged with every kink `log n`.
    Kernel(GridArgs),
    /// Archimedean densities `Ψ⁰`, `Ψ^N`, `g^N` and the closed-form `g`.
    Density(GridArgs),
    /// `m(t)` and `H(t) = diag(m⁻², m²)` on `t = 0, …, t_max`.
    Hamiltonian,
    /// `Φ`, `Ψ`, `φ±` at the Nyström nodes for one `t`, plus the boundary
    /// values at `x = t`.
    Solve {
        /// Defaults to `t_max`.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Verification suites, written as a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Comma-separated `t` values of the identity suite; defaults to
        /// `0.25, 0.5, 1, 1.5, 2` clipped to `t_max`.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Exact `C̃_n(θ)` and `A_n(θ)`, `n = 1..=N`, as JSON.
    Coeffs,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Transform,
    #[value(alias = "theorem1")]
    Identities,
    Kproperties,
    All,
}

/// What a command found, beyond its output file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    /// An applicable verification row failed.
    pub failed: bool,
    /// A determinant reached or crossed zero, or a factorisation was flagged.
    pub degenerate: bool,
}

impl Outcome {
    fn merge(self, o: Outcome) -> Outcome {
        Outcome {
            failed: self.failed || o.failed,
            degenerate: self.degenerate || o.degenerate,
        }
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Lambda { n_max } => lambda(cfg, *n_max),
        Command::Kernel(g) => kernel(cfg, *g),
        Command::Density(g) => density(cfg, *g),
        Command::Hamiltonian => hamiltonian(cfg),
        Command::Solve { t } => solve(cfg, t.unwrap_or(cfg.t_max)),
        Command::Verify { suite, t_grid } => verify(cfg, *suite, t_grid.as_deref()),
        Command::Coeffs => coeffs(cfg),
    }
}

fn profile(cfg: &RunConfig) -> Result<KernelProfile, CliError> {
    Ok(build_kernel_with(cfg.theta, cfg.order, cfg.x_max, cfg.density.into())?)
}

fn operator_kernel(cfg: &RunConfig) -> Result<Arc<dyn Kernel>, CliError> {
    Ok(match cfg.kernel {
        KernelKind::Theta => Arc::new(profile(cfg)?),
        KernelKind::Zero => Arc::new(ZeroKernel),
    })
}

fn uniform(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(lo <= hi) {
        return Err(CliError::Config(format!("empty grid [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - xs[n] > 1e-9 * step {
        xs.push(hi);
    }
    Ok(xs)
}

fn lambda(cfg: &RunConfig, n_max: usize) -> Result<Outcome, CliError> {
    if n_max == 0 {
        return Err(CliError::Config("n_max must be positive".into()));
    }
    let table = lambda_table(cfg.theta, n_max)?;
    let mut t = Table::new(
        "lambda",
        json!({"theta": cfg.theta, "n_max": n_max}),
        &["n", "lambda_theta_n"],
    );
    for n in 1..=n_max {
        t.push(vec![n.into(), table.get(n).into()]);
    }
    emit(cfg.output.as_deref(), &t.render(cfg))?;
    Ok(Outcome::default())
}

/// One-sided offset at which `K'` is sampled on either side of a kink.
const KINK_PROBE: f64 = 1e-9;

fn kernel(cfg: &RunConfig, g: GridArgs) -> Result<Outcome, CliError> {
    let k = profile(cfg)?;
    let meta = k.meta();
    let kinks: Vec<f64> = (1..=meta.n_cut)
        .map(|n| (n as f64).ln())
        .filter(|&l| l >= g.x_min && l <= cfg.x_max)
        .collect();
    let mut xs = uniform(g.x_min, cfg.x_max, g.step)?;
    xs.extend(&kinks);
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut t = Table::new(
        "kernel",
        serde_json::to_value(meta).expect("metadata serialises"),
        &["x", "K_theta_x", "dK_left", "dK_right"],
    );
    for x in xs {
        let (left, right) = if kinks.contains(&x) {
            let d = KINK_PROBE * x.abs().max(1.0);
            let r = if x + d <= cfg.x_max { k.derivative(x + d) } else { f64::NAN };
            (k.derivative(x - d), r)
        } else {
            (k.derivative(x), k.derivative(x))
        };
        t.push(vec![x.into(), k.value(x).into(), left.into(), right.into()]);
    }
    emit(cfg.output.as_deref(), &t.render(cfg))?;
    Ok(Outcome::default())
}

fn density(cfg: &RunConfig, g: GridArgs) -> Result<Outcome, CliError> {
    let params = ArchParams::new(cfg.theta, cfg.order, cfg.x_max)?;
    let eval = |d: Density, x: f64| d.eval(&params, x).unwrap_or(f64::NAN);
    let mut t = Table::new(
        "density",
        json!({"theta": cfg.theta, "N": cfg.order, "x_max": cfg.x_max, "psi0_alpha": cfg.theta}),
        &["x", "psi0", "psi_N", "g_N", "g_closed_form"],
    );
    for x in uniform(g.x_min.max(0.0), cfg.x_max, g.step)? {
        t.push(vec![
            x.into(),
            eval(Density::Psi0 { alpha: cfg.theta }, x).into(),
            eval(Density::Psi, x).into(),
            eval(Density::G, x).into(),
            archimedean::g_closed_form(&params, x).unwrap_or(f64::NAN).into(),
        ]);
    }
    emit(cfg.output.as_deref(), &t.render(cfg))?;
    Ok(Outcome::default())
}

fn flag_name(f: Option<RowFlag>) -> String {
    match f {
        None => String::new(),
        Some(RowFlag::Singular) => "singular".into(),
        Some(RowFlag::NearSingular) => "near_singular".into(),
    }
}

fn degenerate(r: &HamiltonianRow) -> bool {
    r.flag.is_some() || !(r.det_plus > 0.0) || !(r.det_minus > 0.0)
}

fn hamiltonian(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = operator_kernel(cfg)?;
    let rows = m_of_t(k.clone(), &cfg.t_grid(), cfg.disc()?)?;
    let mut t = Table::new(
        "hamiltonian",
        json!({"kernel": k.name()}),
        &["t", "m", "h11", "h22", "det_plus", "det_minus", "flag"],
    );
    for r in &rows {
        t.push(vec![
            r.t.into(),
            r.m.into(),
            r.h11.into(),
            r.h22.into(),
            r.det_plus.into(),
            r.det_minus.into(),
            Cell::Text(flag_name(r.flag)),
        ]);
    }
    emit(cfg.output.as_deref(), &t.render(cfg))?;
    Ok(Outcome {
        failed: false,
        degenerate: rows.iter().any(degenerate),
    })
}

fn solve(cfg: &RunConfig, t: f64) -> Result<Outcome, CliError> {
    let k = operator_kernel(cfg)?;
    let sys = discretize(k.clone(), t, cfg.disc()?)?;
    let row = HamiltonianRow::from_system(&sys);
    let kinds = [FieldKind::Phi, FieldKind::Psi, FieldKind::PhiPlus, FieldKind::PhiMinus];
    let fields = kinds
        .iter()
        .map(|&f| sys.solve_field(f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(
        "solve",
        json!({"kernel": k.name(), "t": t, "nodes": sys.len(), "m": row.m, "flag": flag_name(row.flag)}),
        &["x", "Phi", "Psi", "phi_plus", "phi_minus"],
    );
    for (i, &x) in sys.nodes().iter().enumerate() {
        let mut cells = vec![Cell::from(x)];
        cells.extend(fields.iter().map(|f| Cell::from(f.values[i])));
        table.push(cells);
    }
    let mut boundary = vec![Cell::from(t)];
    boundary.extend(fields.iter().map(|f| Cell::from(f.boundary)));
    table.push(boundary);
    emit(cfg.output.as_deref(), &table.render(cfg))?;
    Ok(Outcome {
        failed: false,
        degenerate: degenerate(&row),
    })
}

fn verify_config(cfg: &RunConfig) -> Result<VerifyConfig, CliError> {
    Ok(VerifyConfig {
        order: cfg.order,
        density: cfg.density.into(),
        disc: cfg.disc()?,
        sweep_t_max: if cfg.t_max > 0.0 { cfg.t_max } else { VerifyConfig::default().sweep_t_max },
        ..VerifyConfig::default()
    })
}

enum SuiteResult {
    Transform(Vec<TransformCheckReport>),
    Identities(Vec<IdentityReport>),
    Kproperties(KPropertiesReport),
}

impl SuiteResult {
    fn name(&self) -> &'static str {
        match self {
            SuiteResult::Transform(_) => "transform",
            SuiteResult::Identities(_) => "identities",
            SuiteResult::Kproperties(_) => "kproperties",
        }
    }

    fn outcome(&self) -> Outcome {
        match self {
            SuiteResult::Transform(rows) => Outcome {
                failed: rows.iter().any(|r| !r.pass),
                degenerate: false,
            },
            SuiteResult::Identities(rows) => Outcome {
                failed: rows.iter().any(|r| r.applicable && !r.pass),
                degenerate: rows.iter().any(|r| !r.applicable),
            },
            SuiteResult::Kproperties(r) => Outcome {
                failed: !r.pass(),
                degenerate: r.sweep.first_near_zero_t.is_some(),
            },
        }
    }

    fn to_json(&self) -> Value {
        let (rows, extra) = match self {
            SuiteResult::Transform(rows) => (json!(rows), Value::Null),
            SuiteResult::Identities(rows) => (json!(rows), Value::Null),
            SuiteResult::Kproperties(r) => (Value::Null, json!(r)),
        };
        let o = self.outcome();
        let mut v = json!({"suite": self.name(), "pass": !o.failed, "degenerate": o.degenerate});
        if !rows.is_null() {
            v["rows"] = rows;
        }
        if !extra.is_null() {
            v["report"] = extra;
        }
        v
    }
}

fn verify(cfg: &RunConfig, suite: Suite, t_grid: Option<&[f64]>) -> Result<Outcome, CliError> {
    let vcfg = verify_config(cfg)?;
    let grid: Vec<f64> = match t_grid {
        Some(g) => g.to_vec(),
        None => [0.25, 0.5, 1.0, 1.5, 2.0]
            .into_iter()
            .filter(|&t| t <= cfg.t_max)
            .collect(),
    };
    let wanted = match suite {
        Suite::All => vec![Suite::Transform, Suite::Identities, Suite::Kproperties],
        s => vec![s],
    };
    let mut results = Vec::new();
    for s in wanted {
        results.push(match s {
            Suite::Transform => {
                SuiteResult::Transform(run_transform_suite(cfg.theta, &cfg.sigma_grid, &vcfg)?)
            }
            Suite::Identities => SuiteResult::Identities(match cfg.kernel {
                KernelKind::Theta => run_identity_suite(cfg.theta, &grid, &vcfg)?,
                KernelKind::Zero => run_identity_suite_with(Arc::new(ZeroKernel), cfg.theta, &grid, &vcfg)?,
            }),
            Suite::Kproperties => SuiteResult::Kproperties(run_k_properties(cfg.theta, &vcfg)?),
            Suite::All => unreachable!(),
        });
    }
    let outcome = results.iter().fold(Outcome::default(), |a, r| a.merge(r.outcome()));

    let mut doc = header("verify", cfg, &json!({"t_grid": grid}));
    doc["suite"] = json!(suite);
    doc["theta"] = json!(cfg.theta);
    doc["config"] = json!({"run": cfg, "verify": vcfg});
    doc["pass"] = json!(!outcome.failed);
    doc["suites"] = Value::Array(results.iter().map(SuiteResult::to_json).collect());
    emit(cfg.output.as_deref(), &pretty(&doc))?;
    Ok(outcome)
}

fn coeffs(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut doc = header("coeffs", cfg, &json!({"order": cfg.order}));
    // the derivations return indices 1..order-1
    doc["c_tilde"] = coefficients_json(&derive_c_tilde(cfg.order + 1)?);
    doc["a"] = coefficients_json(&derive_a(cfg.order + 1)?);
    emit(cfg.output.as_deref(), &pretty(&doc))?;
    Ok(Outcome::default())
}
