//! CLI for the quantized-Adam simulator: `run` one configuration, `sweep` an
//! axis over several values, or `verify` recorded traces against the analysis
//! inequalities.
//!
//! Exit codes: 0 success, 2 configuration error, 3 verification failure,
//! 4 I/O or data error.

use clap::{Args, Parser, Subcommand};
use qadam::harness::{
    exit_code, parse_config_file, run_cmd, sweep_cmd, sweep_table, verify_cmd, RunConfig,
    SweepAxis, EXIT_VERIFY_FAILED,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "qadam", version, about = "Quantized Adam with error feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write trace CSV/JSON plus a summary.
    Run(RunArgs),
    /// Run one configuration per value of an axis and tabulate the results.
    Sweep(SweepArgs),
    /// Check recorded traces against the analysis inequalities.
    Verify(VerifyArgs),
}

/// Every flag has a config-file equivalent (same name, key=value, `#`
/// comments); flags given on the command line override the file.
#[derive(Args)]
struct RunArgs {
    /// key=value config file applied before any flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// quadratic, logistic, or mlp[:input_dim]
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    /// Gradient quantizer: fp, ternary, or a bit width 2..=16
    #[arg(long)]
    kg: Option<String>,
    /// Weight quantizer: fp, ternary, or a bit width 2..=16
    #[arg(long)]
    kx: Option<String>,
    /// Error feedback: on or off
    #[arg(long)]
    ef: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// decay_sqrt_t, fixed_horizon:T, or epoch_halving:P
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record full state snapshots (small dim only): on or off
    #[arg(long)]
    snapshots: Option<String>,
    /// Output path prefix; default $QADAM_OUT_DIR/run
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append quantized messages to {out}.messages.bin: on or off
    #[arg(long)]
    message_log: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// kg, kx, or alpha
    #[arg(long)]
    axis: String,
    /// Comma-separated values for the axis (at least two)
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Full-trace JSON files written by `run`
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Also write the report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> qadam::Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        let pairs = parse_config_file(path)?;
        config.apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut push = |key: &'static str, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((key, v));
        }
    };
    push("problem", args.problem.clone());
    push("dim", args.dim.map(|v| v.to_string()));
    push("workers", args.workers.map(|v| v.to_string()));
    push("steps", args.steps.map(|v| v.to_string()));
    push("kg", args.kg.clone());
    push("kx", args.kx.clone());
    push("ef", args.ef.clone());
    push("alpha", args.alpha.map(|v| v.to_string()));
    push("beta", args.beta.map(|v| v.to_string()));
    push("theta", args.theta.map(|v| v.to_string()));
    push("eps", args.eps.map(|v| v.to_string()));
    push("schedule", args.schedule.clone());
    push("seed", args.seed.map(|v| v.to_string()));
    push("snapshots", args.snapshots.clone());
    push("out", args.out.as_ref().map(|p| p.display().to_string()));
    push("message_log", args.message_log.clone());
    config.apply_pairs(overrides.iter().map(|(k, v)| (*k, v.as_str())))?;
    Ok(config)
}

fn run(cli: Cli) -> qadam::Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let config = build_config(&args)?;
            let (summary, artifacts) = run_cmd(&config)?;
            println!(
                "wrote {} ({} rounds): final loss {:.6e}, final grad norm {:.6e}",
                artifacts.csv.display(),
                summary.config.steps,
                summary.final_loss,
                summary.final_grad_norm
            );
            Ok(0)
        }
        Command::Sweep(args) => {
            let config = build_config(&args.run)?;
            let axis = SweepAxis::from_str(&args.axis)?;
            let rows = sweep_cmd(&config, axis, &args.values)?;
            print!("{}", sweep_table(axis, &rows));
            Ok(0)
        }
        Command::Verify(args) => {
            let (report, ok) = verify_cmd(&args.traces)?;
            print!("{report}");
            if let Some(path) = &args.out {
                std::fs::write(path, &report)?;
            }
            Ok(if ok { 0 } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn main() -> ExitCode {
    // Clap handles --help/--version and argument errors itself.
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
