//! Config-driven runs: read a JSON problem description, solve, write CSV or
//! JSON.
//!
//! Exit status: 0 on success, 2 for a bad config, 3 for a numerical failure
//! (including a failed invariant check), 4 for an infeasible target.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::{classical_block_rdf, BaConfig};
use crate::error::RdfError;
use crate::measures::{joint_law, markov_chain_check, McVariant};
use crate::model::{DistortionSpec, Horizon, Memory, SourceModel, StageAlphabets};
use crate::solver::{
    fixed_point_solve, rate_limit_estimate, solve_for_target_distortion, trace_curve,
    verify_stationarity, CurvePoint, RdCurve, SolveResult, SolverConfig, TargetOutcome,
};

pub const CSV_HEADER: &str = "s,D_per_symbol,R_total,R_per_symbol,sweeps,converged,residual";
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

const DOMINANCE_TOL: f64 = 1e-9;
const CURVE_CHECK_TOL: f64 = 1e-9;
const MC_TOL: f64 = 1e-10;
const STATIONARITY_TOL: f64 = 1e-8;
const STATIONARITY_DIRECTIONS: usize = 100;
const STATIONARITY_EPS: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(
    name = "causal-rdf",
    version,
    about = "Nonanticipative rate-distortion solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the problem described by a JSON config.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Override the config's mode.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Override the output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the invariant checks (dominance, convexity, mc-residual, stationarity).
    #[arg(long)]
    pub check: bool,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the rate units.
    #[arg(long, value_enum)]
    pub units: Option<Units>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    SolveS,
    TargetD,
    Curve,
    HorizonSweep,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub horizon: usize,
    pub source: SourceConfig,
    /// Reproduction alphabet sizes per stage; defaults to the source sizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_sizes: Option<Vec<usize>>,
    pub distortion: DistortionConfig,
    pub mode: Mode,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Iid {
        p: Vec<f64>,
    },
    Markov {
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    /// `kernels[i][ctx]` is the law of `X_i` given context `ctx`.
    General {
        #[serde(default = "full_memory")]
        memory: MemoryConfig,
        kernels: Vec<Vec<Vec<f64>>>,
    },
}

fn full_memory() -> MemoryConfig {
    MemoryConfig::Full
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryConfig {
    Full,
    Last(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistortionConfig {
    Hamming,
    SingleLetter {
        table: Vec<Vec<f64>>,
    },
    /// `tables[i][x_code][y_code]` over stage-`i` histories.
    StageTables {
        tables: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_target: Option<f64>,
    /// Horizons of a sweep; defaults to `1..=horizon`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    pub fp_tol: f64,
    pub max_sweeps: usize,
    pub damping: f64,
    pub distortion_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            s: None,
            s_values: None,
            d_target: None,
            horizons: None,
            fp_tol: d.fp_tol,
            max_sweeps: d.max_sweeps,
            damping: d.damping,
            distortion_tol: d.distortion_tol,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub units: Units,
}

/// Why a run stopped, with the exit status it maps to.
#[derive(Clone, Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Infeasible(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_NUMERICAL,
            RunError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Infeasible(m) => write!(f, "infeasible: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<RdfError> for RunError {
    fn from(e: RdfError) -> Self {
        match e {
            RdfError::InvalidArgument(_) | RdfError::Budget { .. } | RdfError::InvalidSource(_) => {
                RunError::Config(e.to_string())
            }
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

/// Parses a config; schema errors name the offending field path.
pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| RunError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(RunError::Config(format!(
            "at `schema_version`: unsupported version {}, expected {SCHEMA_VERSION}",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn build_source(&self, horizon: usize) -> Result<SourceModel, RunError> {
        let h = Horizon::new(horizon)?;
        let source = match &self.source {
            SourceConfig::Iid { p } => SourceModel::iid(h, p)?,
            SourceConfig::Markov {
                initial,
                transition,
            } => SourceModel::markov(h, initial, transition)?,
            SourceConfig::General { memory, kernels } => {
                if kernels.len() != horizon {
                    return Err(RunError::Config(format!(
                        "at `source.general.kernels`: {} stages given, horizon is {horizon}",
                        kernels.len()
                    )));
                }
                let mut x_sizes = Vec::with_capacity(horizon);
                for (i, rows) in kernels.iter().enumerate() {
                    let w = rows.first().map_or(0, Vec::len);
                    if w == 0 || rows.iter().any(|r| r.len() != w) {
                        return Err(RunError::Config(format!(
                            "at `source.general.kernels[{i}]`: rows must be nonempty and of equal length"
                        )));
                    }
                    x_sizes.push(w);
                }
                let ab = StageAlphabets::new(h, x_sizes.clone(), x_sizes)?;
                let memory = match memory {
                    MemoryConfig::Full => Memory::Full,
                    MemoryConfig::Last(m) => Memory::Last(*m),
                };
                let flat = kernels
                    .iter()
                    .map(|rows| rows.iter().flatten().copied().collect())
                    .collect();
                SourceModel::new(ab, memory, flat)?
            }
        };
        match &self.y_sizes {
            Some(y) => Ok(source.with_y_sizes(y.clone())?),
            None => Ok(source),
        }
    }

    pub fn build_distortion(&self, alphabets: &StageAlphabets) -> Result<DistortionSpec, RunError> {
        let spec = match &self.distortion {
            DistortionConfig::Hamming => {
                let nx = alphabets.x_sizes().iter().max().copied().unwrap_or(0);
                let ny = alphabets.y_sizes().iter().max().copied().unwrap_or(0);
                DistortionSpec::hamming(nx.max(ny))
            }
            DistortionConfig::SingleLetter { table } => DistortionSpec::single_letter(table)?,
            DistortionConfig::StageTables { tables } => {
                let flat = tables
                    .iter()
                    .map(|rows| rows.iter().flatten().copied().collect())
                    .collect();
                DistortionSpec::stage_tables(alphabets, flat)?
            }
        };
        spec.check_shape(alphabets)?;
        Ok(spec)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            s: self.solver.s.unwrap_or(0.0),
            fp_tol: self.solver.fp_tol,
            max_sweeps: self.solver.max_sweeps,
            damping: self.solver.damping,
            distortion_tol: self.solver.distortion_tol,
            ..SolverConfig::default()
        }
    }
}

/// One reported outcome of the invariant suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A curve row with rates in the report's units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub s: f64,
    pub d_per_symbol: f64,
    pub d_total: f64,
    pub r_total: f64,
    pub r_per_symbol: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub mode: Mode,
    pub units: Units,
    pub points: Vec<PointRow>,
    pub checks: Vec<CheckOutcome>,
    /// Wall-clock seconds per phase.
    pub timing: BTreeMap<String, f64>,
}

/// Renders `v` like C's `%.{digits}g`.
pub fn format_g(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= p as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_fields(p: &CurvePoint, units: Units) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        format_g(p.s, 12),
        format_g(p.d_per_symbol, 12),
        format_g(units.convert(p.r_total), 12),
        format_g(units.convert(p.r_per_symbol), 12),
        p.sweeps,
        p.converged,
        format_g(p.residual, 12)
    )
}

/// CSV text of a curve: the fixed header and one row per point.
pub fn render_csv(curve: &RdCurve, units: Units) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&csv_fields(p, units));
        out.push('\n');
    }
    out
}

pub fn emit_csv(curve: &RdCurve, units: Units, path: &Path) -> std::io::Result<()> {
    if curve.points.is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty curve",
        ));
    }
    fs::write(path, render_csv(curve, units))
}

/// CSV of report rows, whose rates are already in the report's units.
fn render_rows(rows: &[PointRow]) -> String {
    let mut out = String::new();
    if rows.iter().any(|r| r.horizon.is_some()) {
        out.push_str("horizon,");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        if let Some(h) = r.horizon {
            let _ = write!(out, "{h},");
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_g(r.s, 12),
            format_g(r.d_per_symbol, 12),
            format_g(r.r_total, 12),
            format_g(r.r_per_symbol, 12),
            r.sweeps,
            r.converged,
            format_g(r.residual, 12)
        );
    }
    out
}

/// Curve row of a single solve.
pub fn point_of(r: &SolveResult) -> CurvePoint {
    CurvePoint {
        s: r.s,
        d_per_symbol: r.distortion_per_symbol,
        d_total: r.distortion_total,
        r_total: r.rate_nats,
        r_per_symbol: r.rate_per_symbol(),
        sweeps: r.sweeps_used,
        converged: r.converged,
        residual: r.residual,
        error: None,
    }
}

fn row_of(horizon: Option<usize>, p: &CurvePoint, units: Units) -> PointRow {
    PointRow {
        horizon,
        s: p.s,
        d_per_symbol: p.d_per_symbol,
        d_total: p.d_total,
        r_total: units.convert(p.r_total),
        r_per_symbol: units.convert(p.r_per_symbol),
        sweeps: p.sweeps,
        converged: p.converged,
        residual: p.residual,
        error: p.error.clone(),
    }
}

fn require<T: Copy>(v: Option<T>, field: &str, mode: Mode) -> Result<T, RunError> {
    v.ok_or_else(|| RunError::Config(format!("at `solver.{field}`: required by mode {mode:?}")))
}

struct Outcome {
    /// Rows in canonical order, with the horizon for sweeps.
    rows: Vec<(Option<usize>, CurvePoint)>,
    /// Solves the per-point checks run on, with their source.
    solves: Vec<(SourceModel, SolveResult)>,
    curve: Option<RdCurve>,
    failure: Option<RunError>,
}

fn execute(
    cfg: &RunConfig,
    mode: Mode,
    source: &SourceModel,
    spec: &DistortionSpec,
    checking: bool,
    timing: &mut BTreeMap<String, f64>,
) -> Result<Outcome, RunError> {
    let base = cfg.solver_config();
    let t = Instant::now();
    let mut out = Outcome {
        rows: Vec::new(),
        solves: Vec::new(),
        curve: None,
        failure: None,
    };
    match mode {
        Mode::SolveS | Mode::Verify => {
            let s = require(cfg.solver.s, "s", mode)?;
            let r = fixed_point_solve(source, spec, &SolverConfig { s, ..base.clone() })?;
            out.rows.push((None, point_of(&r)));
            out.solves.push((source.clone(), r));
            if mode == Mode::Verify {
                if let Some(sv) = &cfg.solver.s_values {
                    out.curve = Some(trace_curve(source, spec, sv, &base)?);
                }
            }
        }
        Mode::TargetD => {
            let d = require(cfg.solver.d_target, "d_target", mode)?;
            match solve_for_target_distortion(source, spec, d, &base)? {
                TargetOutcome::Achieved(r) => {
                    out.rows.push((None, point_of(&r)));
                    out.solves.push((source.clone(), r));
                }
                TargetOutcome::Infeasible {
                    min_distortion_per_symbol,
                } => {
                    return Err(RunError::Infeasible(format!(
                        "target {d} is below the smallest achievable distortion \
                         {min_distortion_per_symbol}"
                    )))
                }
            }
        }
        Mode::Curve => {
            let sv = cfg.solver.s_values.as_ref().ok_or_else(|| {
                RunError::Config("at `solver.s_values`: required by mode Curve".into())
            })?;
            let curve = trace_curve(source, spec, sv, &base)?;
            out.rows = curve.points.iter().map(|p| (None, p.clone())).collect();
            out.curve = Some(curve);
            if checking {
                // the curve keeps no policies; the per-point checks need them
                for &s in sv {
                    if let Ok(r) =
                        fixed_point_solve(source, spec, &SolverConfig { s, ..base.clone() })
                    {
                        out.solves.push((source.clone(), r));
                    }
                }
            }
        }
        Mode::HorizonSweep => {
            let d = require(cfg.solver.d_target, "d_target", mode)?;
            if matches!(cfg.source, SourceConfig::General { .. }) {
                return Err(RunError::Config(
                    "at `source`: horizon_sweep needs an iid or markov source".into(),
                ));
            }
            let horizons = cfg
                .solver
                .horizons
                .clone()
                .unwrap_or_else(|| (1..=cfg.horizon).collect());
            let rates = rate_limit_estimate(
                |n| {
                    cfg.build_source(n)
                        .map_err(|e| RdfError::InvalidArgument(e.to_string()))
                },
                spec,
                d,
                &horizons,
                &base,
            )?;
            for h in rates {
                let p = match &h.outcome {
                    TargetOutcome::Achieved(r) => {
                        out.solves.push((cfg.build_source(h.n_stages)?, r.clone()));
                        point_of(r)
                    }
                    TargetOutcome::Infeasible { .. } => CurvePoint {
                        s: f64::NEG_INFINITY,
                        d_per_symbol: d,
                        d_total: d * h.n_stages as f64,
                        r_total: f64::INFINITY,
                        r_per_symbol: f64::INFINITY,
                        sweeps: 0,
                        converged: false,
                        residual: f64::NAN,
                        error: Some("infeasible".into()),
                    },
                };
                out.rows.push((Some(h.n_stages), p));
            }
            if out.rows.iter().any(|(_, p)| p.error.is_some()) {
                out.failure = Some(RunError::Infeasible(format!(
                    "target {d} is infeasible at some horizon"
                )));
            }
        }
    }
    timing.insert("solve".into(), t.elapsed().as_secs_f64());
    if out.failure.is_none() {
        if let Some((_, p)) = out
            .rows
            .iter()
            .find(|(_, p)| !p.converged || p.error.is_some())
        {
            out.failure = Some(RunError::Numerical(match &p.error {
                Some(e) => format!("point at s = {}: {e}", p.s),
                None => format!(
                    "solve at s = {} did not converge (residual {:e} after {} sweeps)",
                    p.s, p.residual, p.sweeps
                ),
            }));
        }
    }
    Ok(out)
}

fn outcome(name: &str, value: f64, tolerance: f64, detail: Option<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: value <= tolerance,
        value,
        tolerance,
        detail,
    }
}

/// The invariant suite over the solves and curve of a run.
fn run_checks(
    spec: &DistortionSpec,
    out: &Outcome,
    seed: u64,
    timing: &mut BTreeMap<String, f64>,
) -> Result<Vec<CheckOutcome>, RunError> {
    let mut checks = Vec::new();
    let converged: Vec<_> = out.solves.iter().filter(|(_, r)| r.converged).collect();

    let t = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for (src, r) in &converged {
        let classical =
            classical_block_rdf(src, spec, r.distortion_per_symbol, &BaConfig::default())?;
        worst = worst.max(classical - r.rate_nats);
    }
    if !converged.is_empty() {
        checks.push(outcome(
            "dominance",
            worst,
            DOMINANCE_TOL,
            Some("classical block rate minus nonanticipative rate, nats".into()),
        ));
    }
    timing.insert("check_dominance".into(), t.elapsed().as_secs_f64());

    if let Some(curve) = &out.curve {
        let t = Instant::now();
        checks.push(outcome(
            "monotonicity",
            curve.monotonicity_violation(),
            CURVE_CHECK_TOL,
            None,
        ));
        checks.push(outcome(
            "convexity",
            curve.convexity_violation(),
            CURVE_CHECK_TOL,
            None,
        ));
        timing.insert("check_curve".into(), t.elapsed().as_secs_f64());
    }

    let t = Instant::now();
    for v in McVariant::ALL {
        let mut worst = 0.0f64;
        for (src, r) in &converged {
            let j = joint_law(src, &r.policy)?;
            worst = worst.max(markov_chain_check(&j, v));
        }
        if !converged.is_empty() {
            checks.push(outcome(
                &format!("mc_residual_{}", v as u8),
                worst,
                MC_TOL,
                None,
            ));
        }
    }
    timing.insert("check_mc_residual".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for (src, r) in &converged {
        let d = verify_stationarity(
            src,
            spec,
            r,
            STATIONARITY_DIRECTIONS,
            STATIONARITY_EPS,
            seed,
        )?;
        worst = worst.max(d);
    }
    if !converged.is_empty() {
        checks.push(outcome(
            "stationarity",
            worst,
            STATIONARITY_TOL,
            Some(format!(
                "largest Lagrangian decrease over {STATIONARITY_DIRECTIONS} directions at step {STATIONARITY_EPS}"
            )),
        ));
    }
    timing.insert("check_stationarity".into(), t.elapsed().as_secs_f64());
    Ok(checks)
}

/// Runs a config with command-line overrides; the report is returned and,
/// when an output path is set, written to disk (also on numerical failure).
pub fn run_config(mut cfg: RunConfig, args: &RunArgs) -> (Option<RunReport>, Option<RunError>) {
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(u) = args.units {
        cfg.output.units = u;
    }
    if let Some(p) = &args.out {
        cfg.output.path = Some(p.clone());
    }
    let mode = cfg.mode;
    let units = cfg.output.units;
    let mut timing = BTreeMap::new();

    let t = Instant::now();
    let built = cfg
        .build_source(cfg.horizon)
        .and_then(|s| cfg.build_distortion(s.alphabets()).map(|d| (s, d)));
    let (source, spec) = match built {
        Ok(v) => v,
        Err(e) => return (None, Some(e)),
    };
    if let Err(e) = cfg.solver_config().validate() {
        return (None, Some(RunError::Config(format!("at `solver`: {e}"))));
    }
    timing.insert("setup".into(), t.elapsed().as_secs_f64());

    let checking = args.check || mode == Mode::Verify;
    let out = match execute(&cfg, mode, &source, &spec, checking, &mut timing) {
        Ok(o) => o,
        Err(e) => return (None, Some(e)),
    };
    let mut failure = out.failure.clone();

    let mut checks = Vec::new();
    if checking {
        match run_checks(&spec, &out, args.seed, &mut timing) {
            Ok(c) => checks = c,
            Err(e) => failure = failure.or(Some(e)),
        }
        if let Some(c) = checks.iter().find(|c| !c.passed) {
            failure = failure.or(Some(RunError::Numerical(format!(
                "check {} failed: {:e} > {:e}",
                c.name, c.value, c.tolerance
            ))));
        }
    }

    let report = RunReport {
        config: cfg.clone(),
        mode,
        units,
        points: out.rows.iter().map(|(h, p)| row_of(*h, p, units)).collect(),
        checks,
        timing,
    };
    if let Some(path) = &cfg.output.path {
        if let Err(e) = write_report(&report, path, cfg.output.format) {
            failure = failure.or(Some(e));
        }
    }
    (Some(report), failure)
}

fn write_report(report: &RunReport, path: &Path, format: Format) -> Result<(), RunError> {
    let text = match format {
        Format::Json => {
            serde_json::to_string_pretty(report).map_err(|e| RunError::Io(e.to_string()))?
        }
        Format::Csv => render_rows(&report.points),
    };
    fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Loads and runs `args.config`; prints a summary and returns the exit status.
pub fn run(args: &RunArgs) -> i32 {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let (report, failure) = run_config(cfg, args);
    if let Some(r) = &report {
        if r.config.output.path.is_none() {
            print!("{}", render_rows(&r.points));
        }
        for c in &r.checks {
            eprintln!(
                "{} {}: {:e} (tol {:e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            );
        }
    }
    match failure {
        Some(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
        None => EXIT_OK,
    }
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match cli.command {
            Command::Run(a) => run(&a),
        },
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
