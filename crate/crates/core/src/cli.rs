//! Command-line front end: configuration, time grids, sweeps and CSV output.
//!
//! Data files carry no run metadata; a `<output>.meta.json` sidecar records
//! the parameters, derived quantities and tool version so that identical
//! configurations give byte-identical CSVs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::engineering::{self, Dynamics, QubitPipeline, DISPLACEMENT_SIGN};
use crate::error::Error;
use crate::evolution::{ExactPropagator, Propagator, RwaPropagator, SmallRotationPropagator};
use crate::fock::DEFAULT_DIM;
use crate::model::{ModelParams, SMALL_ROTATION_LIMIT};
use crate::observables::{self, GridSpec};
use crate::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const MIN_CLI_DIM: usize = 8;

const DEFAULT_T_END: f64 = 100.0;
const DEFAULT_STEPS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    SmallRotation,
    Rwa,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::SmallRotation => "small-rotation",
            Method::Rwa => "rwa",
        }
    }

    pub fn dynamics(self) -> Dynamics {
        match self {
            Method::Exact => Dynamics::Exact,
            Method::SmallRotation => Dynamics::SmallRotation,
            Method::Rwa => Dynamics::Rwa,
        }
    }
}

/// Command run on every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaseCommand {
    Evolve,
    Qubit,
    Wigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Omega,
    Omega0,
    Lambda,
    T,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Omega => "omega",
            SweepParam::Omega0 => "omega0",
            SweepParam::Lambda => "lambda",
            SweepParam::T => "t",
        }
    }
}

/// One swept parameter: `count` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.count)
    }
}

/// Parses `name=min:max:count`.
fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    let (name, range) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=min:max:count, got '{s}'"))?;
    let param = match name {
        "omega" => SweepParam::Omega,
        "omega0" => SweepParam::Omega0,
        "lambda" => SweepParam::Lambda,
        "t" => SweepParam::T,
        other => {
            return Err(format!(
                "cannot sweep '{other}'; expected omega, omega0, lambda or t"
            ))
        }
    };
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected min:max:count, got '{range}'"));
    }
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok(SweepAxis {
        param,
        min: num(parts[0])?,
        max: num(parts[1])?,
        count: parts[2]
            .parse()
            .map_err(|e| format!("'{}': {e}", parts[2]))?,
    })
}

fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let span = end - start;
    (0..count)
        .map(|k| start + span * k as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "cavity-qubit",
    version,
    about = "Atom-cavity dynamics beyond the rotating-wave approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Atomic inversion and photon number over a time grid.
    Evolve(RunArgs),
    /// Field qubit left after measuring the atom in |+>.
    Qubit(RunArgs),
    /// Wigner function of the measured field at --t-start.
    Wigner {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Runs a base command over one or two swept parameters.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Swept parameter as name=min:max:count (name: omega, omega0, lambda, t); at most two.
        #[arg(long = "sweep", value_parser = parse_axis)]
        sweep: Vec<SweepAxis>,
        #[arg(long, value_enum)]
        base: Option<BaseCommand>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Fock-space truncation N (>= 8).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    t_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Number of time points; 1 evaluates --t-start only.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination (standard output when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    re_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    re_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    im_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    im_max: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    re_min: Option<f64>,
    re_max: Option<f64>,
    im_min: Option<f64>,
    im_max: Option<f64>,
    resolution: Option<f64>,
}

/// Contents of a `--config` file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    omega: Option<f64>,
    omega0: Option<f64>,
    lambda: Option<f64>,
    dim: Option<usize>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    steps: Option<usize>,
    method: Option<Method>,
    output: Option<PathBuf>,
    grid: Option<GridFile>,
    sweep: Option<Vec<SweepAxis>>,
    base: Option<BaseCommand>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub dim: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub method: Method,
    pub output: Option<PathBuf>,
    pub grid: GridSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim < MIN_CLI_DIM {
            return Err(CliError::Usage(format!(
                "dim must be >= {MIN_CLI_DIM}, got {}",
                self.dim
            )));
        }
        if self.steps < 1 {
            return Err(CliError::Usage("steps must be >= 1".into()));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(CliError::Usage("time grid bounds must be finite".into()));
        }
        if self.t_end < self.t_start {
            return Err(CliError::Usage(format!(
                "t-end ({}) must be >= t-start ({})",
                self.t_end, self.t_start
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        linspace(self.t_start, self.t_end, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub command: BaseCommand,
    pub axes: Vec<SweepAxis>,
    /// Whether the base dimension was chosen by the user (otherwise wigner
    /// cells size it to their grid).
    dim_explicit: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(CliError::Usage(format!(
                "sweep needs one or two --sweep axes, got {}",
                self.axes.len()
            )));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(CliError::Usage(format!(
                "'{}' swept twice",
                self.axes[0].param.name()
            )));
        }
        for axis in &self.axes {
            if axis.count < 2 {
                return Err(CliError::Usage(format!(
                    "sweep count for '{}' must be >= 2, got {}",
                    axis.param.name(),
                    axis.count
                )));
            }
            if !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(CliError::Usage(format!(
                    "sweep range for '{}' must be finite",
                    axis.param.name()
                )));
            }
        }
        Ok(())
    }

    /// Swept values of every cell, first axis outermost.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut cells = vec![Vec::new()];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    axis.values().into_iter().map(move |v| {
                        let mut cell = prefix.clone();
                        cell.push(v);
                        cell
                    })
                })
                .collect();
        }
        cells
    }

    fn cell_config(&self, values: &[f64]) -> Result<RunConfig, CliError> {
        let mut cfg = self.base.clone();
        let (mut omega, mut omega0, mut lambda) =
            (cfg.params.omega(), cfg.params.omega0(), cfg.params.lambda());
        for (axis, &v) in self.axes.iter().zip(values) {
            match axis.param {
                SweepParam::Omega => omega = v,
                SweepParam::Omega0 => omega0 = v,
                SweepParam::Lambda => lambda = v,
                SweepParam::T => {
                    cfg.t_start = v;
                    cfg.t_end = v;
                    cfg.steps = 1;
                }
            }
        }
        cfg.params =
            ModelParams::new(omega, omega0, lambda).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.command == BaseCommand::Wigner && !self.dim_explicit {
            cfg.dim = grid_dim(&cfg.grid);
        }
        Ok(cfg)
    }
}

/// Smallest dimension (at least the default) whose guard band covers the
/// whole grid.
fn grid_dim(grid: &GridSpec) -> usize {
    let re = grid.re_min.abs().max(grid.re_max.abs());
    let im = grid.im_min.abs().max(grid.im_max.abs());
    let needed = (8.0 * (re * re + im * im)).ceil();
    if needed.is_finite() && needed > DEFAULT_DIM as f64 {
        needed as usize
    } else {
        DEFAULT_DIM
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, configuration or I/O; exit code 1.
    Usage(String),
    /// Guard-band, truncation or probability failures, one message per
    /// offending point; exit code 2.
    Numerical(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn from_error(context: &str, e: Error) -> Self {
        let prefix = if context.is_empty() {
            String::new()
        } else {
            format!("{context}: ")
        };
        match e {
            Error::GridGuard { points, limit, dim } => CliError::Numerical(
                points
                    .iter()
                    .map(|(re, im)| {
                        format!(
                            "{prefix}grid point ({re}, {im}) has |alpha|^2 = {} > {limit} (N = {dim})",
                            re * re + im * im
                        )
                    })
                    .collect(),
            ),
            e if e.is_numerical_guard() => CliError::Numerical(vec![format!("{prefix}{e}")]),
            e => CliError::Usage(format!("{prefix}{e}")),
        }
    }

    /// Merges per-point failures; any usage error wins.
    fn collect(errors: Vec<CliError>) -> Self {
        let mut messages = Vec::new();
        for e in errors {
            match e {
                CliError::Usage(m) => return CliError::Usage(m),
                CliError::Numerical(m) => messages.extend(m),
            }
        }
        CliError::Numerical(messages)
    }
}

/// Header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Comma-separated, LF-terminated, 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{x:.14e}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates `f` at every time in parallel, keeping time order and
/// reporting every failing point.
fn rows_over_times<F>(times: &[f64], f: F) -> Result<Vec<Vec<f64>>, CliError>
where
    F: Fn(f64) -> crate::Result<Vec<f64>> + Sync,
{
    let results: Vec<_> = times
        .par_iter()
        .map(|&t| f(t).map_err(|e| CliError::from_error(&format!("t = {t}"), e)))
        .collect();
    let (ok, failed): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.is_ok());
    if !failed.is_empty() {
        return Err(CliError::collect(
            failed.into_iter().filter_map(|r| r.err()).collect(),
        ));
    }
    Ok(ok.into_iter().filter_map(|r| r.ok()).collect())
}

/// `t, inversion, mean_photon[, fidelity_to_exact]` from the initial state
/// `|+> ⊗ |-delta>`.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let p = &cfg.params;
    let n = cfg.dim;
    let tol = Tolerances::default();
    let setup = |e| CliError::from_error("setup", e);
    let psi0 = engineering::initial_state(p, n).map_err(setup)?;
    let exact = ExactPropagator::new(p, n).map_err(setup)?;
    let approx: Option<Box<dyn Propagator>> = match cfg.method {
        Method::Exact => None,
        Method::SmallRotation => Some(Box::new(SmallRotationPropagator::new(p, n).map_err(setup)?)),
        Method::Rwa => Some(Box::new(RwaPropagator::new(p))),
    };

    let mut table = if approx.is_some() {
        Table::new(&["t", "inversion", "mean_photon", "fidelity_to_exact"])
    } else {
        Table::new(&["t", "inversion", "mean_photon"])
    };
    table.rows = rows_over_times(&cfg.times(), |t| {
        let reference = exact.propagate(&psi0, t)?;
        reference.check_truncation(&tol)?;
        match &approx {
            None => Ok(vec![
                t,
                observables::atomic_inversion(&reference),
                observables::mean_photon(&reference),
            ]),
            Some(prop) => {
                let state = prop.propagate(&psi0, t)?;
                state.check_truncation(&tol)?;
                Ok(vec![
                    t,
                    observables::atomic_inversion(&state),
                    observables::mean_photon(&state),
                    observables::fidelity(reference.amplitudes(), state.amplitudes())?,
                ])
            }
        }
    })?;
    Ok(table)
}

/// `t, c0sq, c1sq, relative_phase, leak, fidelity_to_exact,
/// measure_probability` for the field left after measuring `|+>`.
pub fn cmd_qubit(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let pipeline =
        QubitPipeline::new(&cfg.params, cfg.dim).map_err(|e| CliError::from_error("setup", e))?;
    let dynamics = cfg.method.dynamics();
    let mut table = Table::new(&[
        "t",
        "c0sq",
        "c1sq",
        "relative_phase",
        "leak",
        "fidelity_to_exact",
        "measure_probability",
    ]);
    table.rows = rows_over_times(&cfg.times(), |t| {
        let measured = pipeline.measured_field(t, dynamics)?;
        let fidelity = if dynamics == Dynamics::Exact {
            1.0
        } else {
            let reference = pipeline.measured_field(t, Dynamics::Exact)?;
            observables::fidelity(reference.field.amplitudes(), measured.field.amplitudes())?
        };
        let readout = pipeline.readout(&measured.field)?;
        let (c0sq, c1sq) = readout.amplitudes.populations();
        Ok(vec![
            t,
            c0sq,
            c1sq,
            readout.amplitudes.relative_phase(),
            readout.leak,
            fidelity,
            measured.probability,
        ])
    })?;
    Ok(table)
}

/// `re, im, W` of the measured field at `t_start`, real part outermost.
pub fn cmd_wigner(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let t = cfg.t_start;
    let context = format!("t = {t}");
    let err = |e| CliError::from_error(&context, e);
    cfg.grid.points().map_err(err)?;
    let pipeline = QubitPipeline::new(&cfg.params, cfg.dim).map_err(err)?;
    let measured = pipeline
        .measured_field(t, cfg.method.dynamics())
        .map_err(err)?;
    let grid = observables::wigner(&measured.field, &cfg.grid).map_err(err)?;
    let mut table = Table::new(&["re", "im", "W"]);
    table.rows = grid
        .points
        .iter()
        .zip(&grid.values)
        .map(|(a, &w)| vec![a.re, a.im, w])
        .collect();
    Ok(table)
}

fn run_base(command: BaseCommand, cfg: &RunConfig) -> Result<Table, CliError> {
    match command {
        BaseCommand::Evolve => cmd_evolve(cfg),
        BaseCommand::Qubit => cmd_qubit(cfg),
        BaseCommand::Wigner => cmd_wigner(cfg),
    }
}

/// Base-command rows for every cell, with `sweep_<param>` columns prepended;
/// cells run in parallel and are emitted in grid order.
pub fn cmd_sweep(cfg: &SweepConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let cells = cfg.cells();
    let results: Vec<Result<Table, CliError>> = cells
        .par_iter()
        .map(|values| {
            let label = cfg
                .axes
                .iter()
                .zip(values)
                .map(|(a, v)| format!("{} = {v}", a.param.name()))
                .collect::<Vec<_>>()
                .join(", ");
            let prefix = |e: CliError| match e {
                CliError::Usage(m) => CliError::Usage(format!("{label}: {m}")),
                CliError::Numerical(ms) => {
                    CliError::Numerical(ms.into_iter().map(|m| format!("{label}: {m}")).collect())
                }
            };
            let cell = cfg.cell_config(values).map_err(prefix)?;
            run_base(cfg.command, &cell).map_err(prefix)
        })
        .collect();

    let mut header: Vec<String> = cfg
        .axes
        .iter()
        .map(|a| format!("sweep_{}", a.param.name()))
        .collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (values, result) in cells.iter().zip(results) {
        match result {
            Ok(table) => {
                if rows.is_empty() && header.len() == cfg.axes.len() {
                    header.extend(table.header.iter().cloned());
                }
                rows.extend(table.rows.into_iter().map(|row| {
                    let mut full = values.clone();
                    full.extend(row);
                    full
                }));
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::collect(errors));
    }
    Ok(Table { header, rows })
}

fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Merges flags over the config file over defaults; returns whether the
/// dimension was set explicitly.
fn resolve(
    run: &RunArgs,
    grid: Option<&GridArgs>,
    file: &ConfigFile,
) -> Result<(RunConfig, bool), CliError> {
    let reference = ModelParams::reference();
    let params = ModelParams::new(
        run.omega.or(file.omega).unwrap_or(reference.omega()),
        run.omega0.or(file.omega0).unwrap_or(reference.omega0()),
        run.lambda.or(file.lambda).unwrap_or(reference.lambda()),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let default_grid = GridSpec::default();
    let fg = file.grid.as_ref();
    let pick = |flag: Option<f64>, from_file: Option<f64>, default: f64| {
        flag.or(from_file).unwrap_or(default)
    };
    let spec = GridSpec {
        re_min: pick(
            grid.and_then(|g| g.re_min),
            fg.and_then(|g| g.re_min),
            default_grid.re_min,
        ),
        re_max: pick(
            grid.and_then(|g| g.re_max),
            fg.and_then(|g| g.re_max),
            default_grid.re_max,
        ),
        im_min: pick(
            grid.and_then(|g| g.im_min),
            fg.and_then(|g| g.im_min),
            default_grid.im_min,
        ),
        im_max: pick(
            grid.and_then(|g| g.im_max),
            fg.and_then(|g| g.im_max),
            default_grid.im_max,
        ),
        resolution: pick(
            grid.and_then(|g| g.resolution),
            fg.and_then(|g| g.resolution),
            default_grid.resolution,
        ),
    };

    let dim = run.dim.or(file.dim);
    let cfg = RunConfig {
        params,
        dim: dim.unwrap_or(DEFAULT_DIM),
        t_start: run.t_start.or(file.t_start).unwrap_or(0.0),
        t_end: run.t_end.or(file.t_end).unwrap_or(DEFAULT_T_END),
        steps: run.steps.or(file.steps).unwrap_or(DEFAULT_STEPS),
        method: run.method.or(file.method).unwrap_or(Method::SmallRotation),
        output: run.output.clone().or_else(|| file.output.clone()),
        grid: spec,
    };
    Ok((cfg, dim.is_some()))
}

fn read_file_for(run: &RunArgs) -> Result<ConfigFile, CliError> {
    match &run.config {
        Some(path) => load_config(path),
        None => Ok(ConfigFile::default()),
    }
}

fn metadata(command: &str, cfg: &RunConfig, sweep: Option<&SweepConfig>) -> serde_json::Value {
    let p = &cfg.params;
    let mut meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "params": { "omega": p.omega(), "omega0": p.omega0(), "lambda": p.lambda() },
        "derived": { "delta": p.delta(), "epsilon": p.epsilon(), "detuning": p.detuning() },
        "displacement_sign": DISPLACEMENT_SIGN,
        "dim": cfg.dim,
        "method": cfg.method.name(),
        "time_grid": { "t_start": cfg.t_start, "t_end": cfg.t_end, "steps": cfg.steps },
    });
    if command == "wigner" || sweep.is_some_and(|s| s.command == BaseCommand::Wigner) {
        meta["grid"] = json!(cfg.grid);
    }
    if let Some(s) = sweep {
        meta["sweep"] = json!({ "base": s.command, "axes": s.axes });
    }
    meta
}

fn warn_if_large_rotation(params: &[ModelParams], err: &mut dyn Write) {
    if let Some(p) = params.iter().find(|p| !p.is_small_rotation_valid()) {
        let _ = writeln!(
            err,
            "warning: rotation angle delta = {} >= {SMALL_ROTATION_LIMIT}; the small-rotation approximation is outside its range",
            p.delta()
        );
    }
}

fn emit(
    table: &Table,
    meta: serde_json::Value,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let csv = table.to_csv();
    match output {
        None => out
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".meta.json");
            let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
            text.push('\n');
            std::fs::write(&sidecar, text).map_err(|e| {
                CliError::Usage(format!(
                    "cannot write {}: {e}",
                    Path::new(&sidecar).display()
                ))
            })
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(run) => {
            let (cfg, _) = resolve(&run, None, &read_file_for(&run)?)?;
            warn_if_large_rotation(&[cfg.params], err);
            let table = cmd_evolve(&cfg)?;
            emit(
                &table,
                metadata("evolve", &cfg, None),
                cfg.output.as_deref(),
                out,
            )
        }
        Command::Qubit(run) => {
            let (cfg, _) = resolve(&run, None, &read_file_for(&run)?)?;
            warn_if_large_rotation(&[cfg.params], err);
            let table = cmd_qubit(&cfg)?;
            emit(
                &table,
                metadata("qubit", &cfg, None),
                cfg.output.as_deref(),
                out,
            )
        }
        Command::Wigner { run, grid } => {
            let (mut cfg, dim_explicit) = resolve(&run, Some(&grid), &read_file_for(&run)?)?;
            if !dim_explicit {
                cfg.dim = grid_dim(&cfg.grid);
            }
            warn_if_large_rotation(&[cfg.params], err);
            let table = cmd_wigner(&cfg)?;
            emit(
                &table,
                metadata("wigner", &cfg, None),
                cfg.output.as_deref(),
                out,
            )
        }
        Command::Sweep {
            run,
            grid,
            sweep,
            base,
        } => {
            let file = read_file_for(&run)?;
            let (cfg, dim_explicit) = resolve(&run, Some(&grid), &file)?;
            let axes = if sweep.is_empty() {
                file.sweep.clone().unwrap_or_default()
            } else {
                sweep
            };
            let sweep_cfg = SweepConfig {
                base: cfg,
                command: base.or(file.base).unwrap_or(BaseCommand::Evolve),
                axes,
                dim_explicit,
            };
            sweep_cfg.validate()?;
            let params: Vec<ModelParams> = sweep_cfg
                .cells()
                .iter()
                .filter_map(|v| sweep_cfg.cell_config(v).ok().map(|c| c.params))
                .collect();
            warn_if_large_rotation(&params, err);
            let table = cmd_sweep(&sweep_cfg)?;
            let meta = metadata("sweep", &sweep_cfg.base, Some(&sweep_cfg));
            emit(&table, meta, sweep_cfg.base.output.as_deref(), out)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
                CliError::Numerical(ms) => {
                    for m in ms {
                        let _ = writeln!(err, "error: {m}");
                    }
                }
            }
            e.exit_code()
        }
    }
}
