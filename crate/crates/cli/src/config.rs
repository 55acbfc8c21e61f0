//! Run configuration: built-in defaults, then an optional `key = value` file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use zeta_kernel::archimedean::DEFAULT_ORDER;
use zeta_kernel::fredholm::Discretization;
use zeta_kernel::kernel::{DensityModel, MAX_X_MAX};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    ClosedForm,
    Series,
}

impl From<Density> for DensityModel {
    fn from(d: Density) -> Self {
        match d {
            Density::ClosedForm => DensityModel::ClosedForm,
            Density::Series => DensityModel::Series,
        }
    }
}

/// Which kernel the operator commands use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `K_θ` itself.
    Theta,
    /// Synthetic `K ≡ 0`.
    Zero,
}

/// Flags shared by every command; each one mirrors a [`RunConfig`] field.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// `key = value` file supplying defaults (flags override it).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Truncation order `N` of the density expansions.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub x_max: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Number of steps of the `t` sweep (`t_steps + 1` rows).
    #[arg(long, global = true)]
    pub t_steps: Option<usize>,
    #[arg(long, global = true)]
    pub panels_per_unit: Option<usize>,
    #[arg(long, global = true)]
    pub nodes_per_panel: Option<usize>,
    /// Comma-separated `σ` values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub density: Option<Density>,
    #[arg(long, global = true)]
    pub kernel: Option<KernelKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub theta: f64,
    pub order: usize,
    pub x_max: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub panels_per_unit: usize,
    pub nodes_per_panel: usize,
    pub sigma_grid: Vec<f64>,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub density: Density,
    pub kernel: KernelKind,
}

/// Partially specified configuration (one layer of the merge).
#[derive(Debug, Clone, Default)]
struct Layer {
    theta: Option<f64>,
    order: Option<usize>,
    x_max: Option<f64>,
    t_max: Option<f64>,
    t_steps: Option<usize>,
    panels_per_unit: Option<usize>,
    nodes_per_panel: Option<usize>,
    sigma_grid: Option<Vec<f64>>,
    format: Option<Format>,
    output: Option<PathBuf>,
    density: Option<Density>,
    kernel: Option<KernelKind>,
}

impl Layer {
    fn over(self, base: Layer) -> Layer {
        Layer {
            theta: self.theta.or(base.theta),
            order: self.order.or(base.order),
            x_max: self.x_max.or(base.x_max),
            t_max: self.t_max.or(base.t_max),
            t_steps: self.t_steps.or(base.t_steps),
            panels_per_unit: self.panels_per_unit.or(base.panels_per_unit),
            nodes_per_panel: self.nodes_per_panel.or(base.nodes_per_panel),
            sigma_grid: self.sigma_grid.or(base.sigma_grid),
            format: self.format.or(base.format),
            output: self.output.or(base.output),
            density: self.density.or(base.density),
            kernel: self.kernel.or(base.kernel),
        }
    }
}

impl From<&RunArgs> for Layer {
    fn from(a: &RunArgs) -> Self {
        Layer {
            theta: a.theta,
            order: a.order,
            x_max: a.x_max,
            t_max: a.t_max,
            t_steps: a.t_steps,
            panels_per_unit: a.panels_per_unit,
            nodes_per_panel: a.nodes_per_panel,
            sigma_grid: a.sigma_grid.clone(),
            format: a.format,
            output: a.output.clone(),
            density: a.density,
            kernel: a.kernel,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, true).map_err(|_| CliError::Config(format!("invalid {key} = {value:?}")))
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped;
/// keys may use `-` or `_`.
fn parse_file(text: &str) -> Result<Layer, CliError> {
    let mut l = Layer::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "theta" => l.theta = Some(parse(&key, value)?),
            "order" => l.order = Some(parse(&key, value)?),
            "x_max" => l.x_max = Some(parse(&key, value)?),
            "t_max" => l.t_max = Some(parse(&key, value)?),
            "t_steps" => l.t_steps = Some(parse(&key, value)?),
            "panels_per_unit" => l.panels_per_unit = Some(parse(&key, value)?),
            "nodes_per_panel" => l.nodes_per_panel = Some(parse(&key, value)?),
            "sigma_grid" => {
                l.sigma_grid = Some(
                    value
                        .split(',')
                        .map(|s| parse(&key, s.trim()))
                        .collect::<Result<_, _>>()?,
                )
            }
            "format" => l.format = Some(parse_enum(&key, value)?),
            "output" => l.output = Some(PathBuf::from(value)),
            "density" => l.density = Some(parse_enum(&key, &value.replace('_', "-"))?),
            "kernel" => l.kernel = Some(parse_enum(&key, value)?),
            _ => return Err(CliError::Config(format!("line {}: unknown key {key:?}", i + 1))),
        }
    }
    Ok(l)
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => parse_file(&read(path)?)?,
            None => Layer::default(),
        };
        let l = Layer::from(args).over(file);
        let t_max = l.t_max.unwrap_or(2.0);
        let cfg = RunConfig {
            theta: l.theta.unwrap_or(2.0),
            order: l.order.unwrap_or(DEFAULT_ORDER),
            x_max: l.x_max.unwrap_or((2.0 * t_max + 0.5).min(MAX_X_MAX)),
            t_max,
            t_steps: l.t_steps.unwrap_or(40),
            panels_per_unit: l.panels_per_unit.unwrap_or(Discretization::default().panels_per_unit),
            nodes_per_panel: l.nodes_per_panel.unwrap_or(Discretization::default().nodes_per_panel),
            sigma_grid: l.sigma_grid.unwrap_or_else(|| vec![2.0, 3.0, 4.0]),
            format: l.format.unwrap_or(Format::Csv),
            output: l.output,
            density: l.density.unwrap_or(Density::ClosedForm),
            kernel: l.kernel.unwrap_or(KernelKind::Theta),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.theta > 1.0) || !self.theta.is_finite() {
            return bad(format!("theta must exceed 1, got {}", self.theta));
        }
        if !(self.x_max > 0.0 && self.x_max <= MAX_X_MAX) {
            return bad(format!("x_max must lie in (0, {MAX_X_MAX}], got {}", self.x_max));
        }
        if !(self.t_max >= 0.0) || self.t_max > 0.5 * self.x_max {
            return bad(format!("t_max must lie in [0, x_max/2], got {}", self.t_max));
        }
        if self.order == 0 || self.t_steps == 0 || self.panels_per_unit == 0 || self.nodes_per_panel == 0 {
            return bad("order, t_steps, panels_per_unit and nodes_per_panel must be positive".into());
        }
        if self.sigma_grid.iter().any(|s| !s.is_finite()) {
            return bad("sigma grid must be finite".into());
        }
        Ok(())
    }

    pub fn disc(&self) -> Result<Discretization, CliError> {
        Discretization::new(self.panels_per_unit, self.nodes_per_panel).map_err(CliError::config)
    }

    /// `t_k = k t_max / t_steps`.
    pub fn t_grid(&self) -> Vec<f64> {
        (0..=self.t_steps)
            .map(|k| self.t_max * k as f64 / self.t_steps as f64)
            .collect()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = parse_file("# sweep\ntheta = 3\nt-max=1.5 # inline\nsigma_grid = 2, 4\ndensity = closed_form\n").unwrap();
        let flags = Layer {
            theta: Some(2.5),
            ..Layer::default()
        };
        let l = flags.over(file);
        assert_eq!(l.theta, Some(2.5));
        assert_eq!(l.t_max, Some(1.5));
        assert_eq!(l.sigma_grid, Some(vec![2.0, 4.0]));
        assert_eq!(l.density, Some(Density::ClosedForm));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(parse_file("colour = red").is_err());
        assert!(parse_file("theta").is_err());
        let args = RunArgs {
            t_max: Some(3.0),
            x_max: Some(4.0),
            ..RunArgs::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Config(_))));
    }

    #[test]
    fn t_grid_endpoints() {
        let cfg = RunConfig::resolve(&RunArgs {
            t_max: Some(1.0),
            t_steps: Some(4),
            ..RunArgs::default()
        })
        .unwrap();
        assert_eq!(cfg.t_grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
