//! Command-line front end: config assembly (defaults < config file < CLI
//! flags), the run/sweep/verify commands, and CSV/JSON emission. Everything
//! here is deterministic: the same effective config produces byte-identical
//! outputs.

use crate::distributed::{run_synchronous, SyncConfig};
use crate::error::{Error, Result};
use crate::optimizer::{Hyperparams, Schedule};
use crate::problems::{LogisticProblem, MlpProblem, Problem, QuadraticProblem};
use crate::quantize::Quantizer;
use crate::trace::{ConfigEcho, Trace};
use crate::verify::{
    check_ef_identity, check_lemma1, check_moment_bound, check_sum_bounds,
    check_theorem_diagnostic, compute_constants, BoundsInput, CheckReport, Theorem,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QADAM_OUT_DIR";

// Fixed shapes for problems built from a (name, dim, seed) spec. These are
// part of the harness contract: a trace's config echo plus these constants
// reconstructs the exact objective.
const QUADRATIC_CONDITION: f64 = 10.0;
const QUADRATIC_NOISE: f64 = 0.05;
const QUADRATIC_RADIUS: f64 = 10.0;
const LOGISTIC_SAMPLES: usize = 500;
const LOGISTIC_BATCH: usize = 32;
const MLP_HIDDEN: usize = 8;
const MLP_OUT: usize = 1;
const MLP_SAMPLES: usize = 128;
const MLP_BATCH: usize = 16;

/// Everything one run needs, after merging defaults, config file, and CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// "quadratic", "logistic", or "mlp[:input_dim]".
    pub problem: String,
    pub dim: usize,
    pub workers: usize,
    pub steps: u64,
    pub kg: Quantizer,
    pub kx: Quantizer,
    pub ef: bool,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub snapshots: bool,
    /// Output path prefix; files are written as {out}.csv, {out}.trace.json,
    /// {out}.summary.json (and {out}.messages.bin with message_log).
    pub out: PathBuf,
    pub message_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "quadratic".into(),
            dim: 10,
            workers: 1,
            steps: 1000,
            kg: Quantizer::Identity,
            kx: Quantizer::Identity,
            ef: true,
            hyperparams: Hyperparams::default(),
            seed: 42,
            snapshots: false,
            out: default_out_dir().join("run"),
            message_log: false,
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key} must be on/off (or true/false), got {value:?}"
        ))),
    }
}

/// Parses a `key=value` config file: one pair per line, `#` starts a comment,
/// blank lines ignored. Returns the pairs in file order (later keys win).
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "config line {}: expected key=value, got {raw:?}",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Applies one key=value pair (config-file or CLI origin).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad {what} value {value:?}"));
        match key {
            "problem" => self.problem = value.to_string(),
            "dim" => self.dim = value.parse().map_err(|_| bad("dim"))?,
            "workers" => self.workers = value.parse().map_err(|_| bad("workers"))?,
            "steps" => self.steps = value.parse().map_err(|_| bad("steps"))?,
            "kg" => self.kg = value.parse()?,
            "kx" => self.kx = value.parse()?,
            "ef" => self.ef = parse_bool(key, value)?,
            "alpha" => self.hyperparams.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "beta" => self.hyperparams.beta = value.parse().map_err(|_| bad("beta"))?,
            "theta" => self.hyperparams.theta = value.parse().map_err(|_| bad("theta"))?,
            "eps" => self.hyperparams.epsilon = value.parse().map_err(|_| bad("eps"))?,
            "schedule" => self.hyperparams.schedule = Schedule::from_str(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "snapshots" => self.snapshots = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "message_log" => self.message_log = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_pairs<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        self.hyperparams.validate()?;
        Ok(())
    }
}

/// Deterministic per-worker gradient-stream seed.
pub fn worker_seed(master: u64, worker: usize) -> u64 {
    master.wrapping_add((worker as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Builds the objective named by a problem spec. Returns the problem and its
/// canonical spec string (echoed into traces so verify can rebuild it).
pub fn build_problem(spec: &str, dim: usize, seed: u64) -> Result<(Box<dyn Problem>, String)> {
    if dim == 0 {
        return Err(Error::Config("dim must be >= 1".into()));
    }
    match spec {
        "quadratic" => Ok((
            Box::new(QuadraticProblem::new(
                dim,
                QUADRATIC_CONDITION,
                vec![QUADRATIC_NOISE, -QUADRATIC_NOISE],
                QUADRATIC_RADIUS,
            )?),
            "quadratic".into(),
        )),
        "logistic" => Ok((
            Box::new(LogisticProblem::synthetic(
                dim,
                LOGISTIC_SAMPLES,
                LOGISTIC_BATCH,
                seed,
            )?),
            "logistic".into(),
        )),
        _ => {
            let in_dim = match spec.strip_prefix("mlp") {
                Some("") => dim,
                Some(rest) => rest
                    .strip_prefix(':')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad problem spec {spec:?}")))?,
                None => {
                    return Err(Error::Config(format!(
                        "unknown problem {spec:?}; expected quadratic, logistic, or mlp"
                    )))
                }
            };
            Ok((
                Box::new(MlpProblem::synthetic(
                    in_dim, MLP_HIDDEN, MLP_OUT, MLP_SAMPLES, MLP_BATCH, seed,
                )?),
                format!("mlp:{in_dim}"),
            ))
        }
    }
}

fn rebuild_problem(echo: &ConfigEcho) -> Result<(Box<dyn Problem>, String)> {
    build_problem(&echo.problem, echo.dim, echo.seed)
}

/// JSON run summary written next to the trace.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_loss: f64,
    pub best_loss: f64,
    pub final_grad_norm: f64,
    /// Trace-minimum empirical contraction of the gradient quantizer.
    pub delta_g_min: Option<f64>,
    /// Trace-minimum empirical contraction of the weight quantizer.
    pub delta_x_min: Option<f64>,
    /// Post hoc iterate bound max_t ||x_t||.
    pub max_x_norm: f64,
    pub cum_bits: u64,
    pub config: ConfigEcho,
}

impl RunSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        let last = trace.records.last().expect("run produces >= 1 round");
        RunSummary {
            final_loss: last.loss,
            best_loss: trace
                .records
                .iter()
                .map(|r| r.loss)
                .fold(f64::INFINITY, f64::min),
            final_grad_norm: last.grad_norm,
            delta_g_min: trace.min_contraction_g(),
            delta_x_min: trace.min_contraction_x(),
            max_x_norm: trace.max_x_norm(),
            cum_bits: last.cum_bits,
            config: trace.config.clone(),
        }
    }
}

/// Output paths produced by one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub trace_json: PathBuf,
    pub summary_json: PathBuf,
    pub messages: Option<PathBuf>,
}

/// Runs the simulation in memory only (library entry point).
pub fn execute(config: &RunConfig) -> Result<Trace> {
    execute_with_log(config, None)
}

fn execute_with_log(config: &RunConfig, message_log: Option<PathBuf>) -> Result<Trace> {
    config.validate()?;
    let (problem, canonical) = build_problem(&config.problem, config.dim, config.seed)?;
    run_synchronous(&SyncConfig {
        problem: problem.as_ref(),
        problem_name: canonical,
        workers: config.workers,
        rounds: config.steps,
        hyperparams: config.hyperparams,
        qg: config.kg,
        qx: config.kx,
        error_feedback: config.ef,
        seed: config.seed,
        worker_seeds: (0..config.workers)
            .map(|i| worker_seed(config.seed, i))
            .collect(),
        snapshots: config.snapshots,
        message_log,
    })
}

/// Runs and writes {out}.csv, {out}.trace.json, {out}.summary.json.
pub fn run_cmd(config: &RunConfig) -> Result<(RunSummary, RunArtifacts)> {
    let artifacts = RunArtifacts {
        csv: config.out.with_extension("csv"),
        trace_json: config.out.with_extension("trace.json"),
        summary_json: config.out.with_extension("summary.json"),
        messages: config
            .message_log
            .then(|| config.out.with_extension("messages.bin")),
    };
    if let Some(dir) = config.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let trace = execute_with_log(config, artifacts.messages.clone())?;
    trace.write_csv(&artifacts.csv)?;
    trace.write_json(&artifacts.trace_json)?;
    let summary = RunSummary::from_trace(&trace);
    std::fs::write(
        &artifacts.summary_json,
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok((summary, artifacts))
}

/// Axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Kg,
    Kx,
    Alpha,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kg" => Ok(SweepAxis::Kg),
            "kx" => Ok(SweepAxis::Kx),
            "alpha" => Ok(SweepAxis::Alpha),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?}; expected kg, kx, or alpha"
            ))),
        }
    }
}

impl SweepAxis {
    fn key(&self) -> &'static str {
        match self {
            SweepAxis::Kg => "kg",
            SweepAxis::Kx => "kx",
            SweepAxis::Alpha => "alpha",
        }
    }
}

/// One row of the sweep comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub final_loss: f64,
    pub best_loss: f64,
    pub final_grad_norm: f64,
    pub cum_bits: u64,
}

/// Runs one configuration per value of the chosen axis; each run's outputs
/// are written under `{out}_{axis}{value}` and the table under
/// `{out}.sweep.json`.
pub fn sweep_cmd(base: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.len() < 2 {
        return Err(Error::Config(
            "sweep needs at least two values (got fewer)".into(),
        ));
    }
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let mut config = base.clone();
        config.set(axis.key(), value)?;
        let base_name = config
            .out
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        config.out = config
            .out
            .with_file_name(format!("{base_name}_{}{value}", axis.key()));
        let (summary, _) = run_cmd(&config)?;
        rows.push(SweepRow {
            value: value.clone(),
            final_loss: summary.final_loss,
            best_loss: summary.best_loss,
            final_grad_norm: summary.final_grad_norm,
            cum_bits: summary.cum_bits,
        });
    }
    std::fs::write(
        base.out.with_extension("sweep.json"),
        serde_json::to_string_pretty(&rows)?,
    )?;
    Ok(rows)
}

pub fn sweep_table(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>14} {:>14} {:>16} {:>14}",
        axis.key(),
        "final_loss",
        "best_loss",
        "final_grad_norm",
        "cum_bits"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>14.6e} {:>14.6e} {:>16.6e} {:>14}",
            r.value, r.final_loss, r.best_loss, r.final_grad_norm, r.cum_bits
        );
    }
    out
}

/// All checks for one trace, in report order.
pub fn verify_trace(trace: &Trace) -> Result<Vec<CheckReport>> {
    let (problem, _) = rebuild_problem(&trace.config)?;
    let declared = problem.bounds();
    let grad_bound = declared
        .grad_bound
        .unwrap_or_else(|| trace.max_grad_sample_norm());
    let delta_g = if trace.config.kg == "fp" {
        1.0
    } else {
        trace.min_contraction_g().unwrap_or(1.0)
    };
    let delta_x = if trace.config.kx == "fp" {
        1.0
    } else {
        trace.min_contraction_x().unwrap_or(1.0)
    };
    let hyperparams = hyperparams_from_echo(&trace.config)?;

    let mut reports = vec![
        check_ef_identity(trace),
        check_lemma1(trace, delta_g),
    ];
    reports.extend(check_sum_bounds(trace, grad_bound));

    let bounds = BoundsInput {
        grad_bound,
        smoothness: declared.smoothness.unwrap_or(0.0),
        iterate_bound: declared.iterate_bound.unwrap_or_else(|| trace.max_x_norm()),
        f_x1: trace.records.first().map(|r| r.loss).unwrap_or(0.0),
        f_star: declared.f_star.unwrap_or(0.0),
    };
    match compute_constants(
        &hyperparams,
        trace.config.dim,
        &bounds,
        delta_g,
        delta_x,
        None,
    ) {
        Ok(consts) => {
            reports.push(check_moment_bound(trace, &consts));
            if declared.smoothness.is_some() {
                reports.push(check_theorem_diagnostic(trace, &consts, Theorem::Three));
            } else {
                reports.push(CheckReport {
                    name: "theorem_rhs".into(),
                    status: crate::verify::CheckStatus::NotApplicable,
                    margin: None,
                    detail: "problem declares no smoothness constant".into(),
                });
            }
        }
        Err(e) => {
            return Err(e);
        }
    }
    Ok(reports)
}

/// Verifies each trace file (full-trace JSON as written by `run`); returns
/// the textual report and whether every applicable check passed.
pub fn verify_cmd(paths: &[PathBuf]) -> Result<(String, bool)> {
    if paths.is_empty() {
        return Err(Error::Config("verify needs at least one trace path".into()));
    }
    let mut out = String::new();
    let mut all_ok = true;
    for path in paths {
        if path.extension().is_some_and(|e| e == "csv") {
            return Err(Error::Config(format!(
                "{}: verify consumes the full-trace JSON written by `run` \
                 (summary CSVs lack per-worker series)",
                path.display()
            )));
        }
        let trace = Trace::read_json(path)?;
        let _ = writeln!(out, "{}:", path.display());
        for report in verify_trace(&trace)? {
            all_ok &= !report.is_failure();
            let _ = writeln!(out, "  {}", report.line());
        }
    }
    Ok((out, all_ok))
}

/// Reconstructs the optimizer hyperparameters from a trace's config echo.
pub fn hyperparams_from_echo(echo: &ConfigEcho) -> Result<Hyperparams> {
    Ok(Hyperparams {
        alpha: echo.alpha,
        beta: echo.beta,
        theta: echo.theta,
        epsilon: echo.eps,
        schedule: Schedule::from_str(&echo.schedule)?,
    })
}

/// Process exit code for an error, per the CLI contract: 2 for configuration
/// problems, 3 for verification failures, 4 for I/O and data errors.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Shape(_) => 2,
        Error::Verification(_) => 3,
        Error::Io(_) | Error::Json(_) | Error::Format(_) | Error::Corruption(_)
        | Error::Protocol(_) => 4,
    }
}

/// Exit code used when a verify run reports at least one failing check.
pub const EXIT_VERIFY_FAILED: i32 = 3;
