//! Synchronous parameter-server simulation: one server holding the
//! full-precision parameters, N workers each running the quantized Adam step
//! on their own seeded gradient stream. Per round the server broadcasts the
//! quantized weights, every worker answers with a quantized update, and the
//! server subtracts the mean of the dequantized reports.
//!
//! Worker computations within a round are pure given the broadcast, so any
//! execution order yields the same result; the server reduces reports in
//! ascending worker-id order, making traces bit-identical across schedules.

use crate::error::{Error, Result};
use crate::optimizer::{Hyperparams, QuantizedAdam, StepOutput};
use crate::problems::{GradientStream, Problem};
use crate::quantize::{CompressedTensor, Quantizer};
use crate::tensor::{Norm, Tensor};
use crate::trace::{ConfigEcho, RoundRecord, RoundSnapshot, Trace, WorkerSnapshot};
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::PathBuf;

/// Server-to-worker message: quantized weights tagged with the round they
/// open.
#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub round: u64,
    pub payload: CompressedTensor,
}

/// Worker-to-server message: the quantized update for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub round: u64,
    pub worker_id: usize,
    pub payload: CompressedTensor,
}

/// The parameter server: full-precision iterate, weight quantizer, and the
/// 1-based index of the round currently open.
#[derive(Debug, Clone)]
pub struct ServerState {
    pub x: Tensor,
    pub round: u64,
    pub qx: Quantizer,
    pub n_workers: usize,
}

impl ServerState {
    pub fn new(x0: Tensor, qx: Quantizer, n_workers: usize) -> Result<Self> {
        qx.validate()?;
        if n_workers == 0 {
            return Err(Error::Config("need at least one worker".into()));
        }
        Ok(ServerState {
            x: x0,
            round: 1,
            qx,
            n_workers,
        })
    }

    /// Q_x(x_t) for the currently open round.
    pub fn broadcast(&self) -> Result<Broadcast> {
        Ok(Broadcast {
            round: self.round,
            payload: self.qx.compress(&self.x)?,
        })
    }

    /// Applies one round's reports: x' = x - (1/N) sum dequantize(report_i),
    /// reduced in ascending worker-id order, then opens the next round.
    pub fn apply_reports(&mut self, reports: &[Report]) -> Result<()> {
        if reports.len() != self.n_workers {
            return Err(Error::Protocol(format!(
                "round {}: expected {} reports, got {}",
                self.round,
                self.n_workers,
                reports.len()
            )));
        }
        let mut by_id: Vec<&Report> = reports.iter().collect();
        by_id.sort_by_key(|r| r.worker_id);
        for (expected, r) in by_id.iter().enumerate() {
            if r.round != self.round {
                return Err(Error::Protocol(format!(
                    "report from worker {} carries round {}, server is at round {}",
                    r.worker_id, r.round, self.round
                )));
            }
            if r.worker_id != expected {
                return Err(Error::Protocol(format!(
                    "round {}: duplicate or missing worker id (saw {}, expected {})",
                    self.round, r.worker_id, expected
                )));
            }
            if r.payload.len() != self.x.len() {
                return Err(Error::Corruption(format!(
                    "worker {} report has length {}, parameters have length {}",
                    r.worker_id,
                    r.payload.len(),
                    self.x.len()
                )));
            }
        }
        let mut mean = Tensor::zeros(self.x.len());
        for r in by_id {
            mean = mean.add(&r.payload.decompress()?)?;
        }
        mean = mean.scale(1.0 / self.n_workers as f64);
        self.x = self.x.sub(&mean)?;
        self.round += 1;
        Ok(())
    }
}

/// Convenience wrapper matching the protocol shape: apply a round's reports
/// and emit the next round's broadcast.
pub fn server_round(s: &mut ServerState, reports: &[Report]) -> Result<Broadcast> {
    s.apply_reports(reports)?;
    s.broadcast()
}

/// One worker: its own optimizer state (moments + residual) and gradient
/// stream. Workers never share mutable state.
#[derive(Debug, Clone)]
pub struct WorkerState {
    pub id: usize,
    pub opt: QuantizedAdam,
    pub stream: GradientStream,
}

impl WorkerState {
    pub fn new(
        id: usize,
        dim: usize,
        hyperparams: Hyperparams,
        qg: Quantizer,
        error_feedback: bool,
        stream_seed: u64,
    ) -> Result<Self> {
        Ok(WorkerState {
            id,
            opt: QuantizedAdam::new(dim, hyperparams, qg, error_feedback)?,
            stream: GradientStream::new(stream_seed),
        })
    }

    /// The round this worker expects next (its optimizer step counter).
    pub fn expected_round(&self) -> u64 {
        self.opt.state.t
    }
}

/// What one worker did in one round, for trace recording.
#[derive(Debug, Clone)]
pub struct WorkerRoundOutput {
    pub step: StepOutput,
    /// l2 norm of the stochastic gradient this worker drew.
    pub grad_sample_norm: f64,
}

/// Algorithm executed by worker `w` on receiving a broadcast: dequantize the
/// weights, draw a gradient there, run the quantized Adam update, and report
/// the quantized step.
pub fn worker_round(
    w: &mut WorkerState,
    broadcast: &Broadcast,
    problem: &dyn Problem,
) -> Result<(Report, WorkerRoundOutput)> {
    if broadcast.round != w.expected_round() {
        return Err(Error::Protocol(format!(
            "worker {} expected round {}, broadcast is for round {}",
            w.id,
            w.expected_round(),
            broadcast.round
        )));
    }
    let x_hat = broadcast.payload.decompress()?;
    if x_hat.len() != w.opt.state.m.len() {
        return Err(Error::Corruption(format!(
            "broadcast length {} does not match worker dimension {}",
            x_hat.len(),
            w.opt.state.m.len()
        )));
    }
    let g = problem.stochastic_gradient(&x_hat, &mut w.stream);
    let grad_sample_norm = g.norm(Norm::L2);
    let (payload, step) = w.opt.prepare_update(&g)?;
    Ok((
        Report {
            round: broadcast.round,
            worker_id: w.id,
            payload,
        },
        WorkerRoundOutput {
            step,
            grad_sample_norm,
        },
    ))
}

/// Configuration for a full synchronous run.
pub struct SyncConfig<'a> {
    pub problem: &'a dyn Problem,
    /// Name echoed into the trace config (the problem itself is opaque).
    pub problem_name: String,
    pub workers: usize,
    pub rounds: u64,
    pub hyperparams: Hyperparams,
    pub qg: Quantizer,
    pub qx: Quantizer,
    pub error_feedback: bool,
    /// Master seed: picks the initial point and is echoed into the trace.
    pub seed: u64,
    /// Per-worker gradient-stream seeds; must have `workers` entries.
    pub worker_seeds: Vec<u64>,
    /// Record full state snapshots every round (small d only).
    pub snapshots: bool,
    /// When set, every quantized message is appended to this file in the
    /// wire format (full-precision messages have no frame and are skipped).
    pub message_log: Option<PathBuf>,
}

impl SyncConfig<'_> {
    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if self.worker_seeds.len() != self.workers {
            return Err(Error::Config(format!(
                "need {} worker seeds, got {}",
                self.workers,
                self.worker_seeds.len()
            )));
        }
        self.hyperparams.validate()?;
        self.qg.validate()?;
        self.qx.validate()?;
        Ok(())
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            problem: self.problem_name.clone(),
            dim: self.problem.dim(),
            workers: self.workers,
            steps: self.rounds,
            kg: self.qg.to_string(),
            kx: self.qx.to_string(),
            ef: self.error_feedback,
            alpha: self.hyperparams.alpha,
            beta: self.hyperparams.beta,
            theta: self.hyperparams.theta,
            eps: self.hyperparams.epsilon,
            schedule: self.hyperparams.schedule.to_string(),
            seed: self.seed,
            snapshots: self.snapshots,
        }
    }
}

fn log_message(log: &mut Option<std::fs::File>, payload: &CompressedTensor) -> Result<()> {
    if let (Some(file), CompressedTensor::Quantized(q)) = (log.as_mut(), payload) {
        file.write_all(&crate::wire::encode(q)?)?;
    }
    Ok(())
}

/// Runs T synchronous rounds and records one trace entry per round. The run
/// is fully deterministic given the config: same config, byte-identical
/// trace.
pub fn run_synchronous(config: &SyncConfig) -> Result<Trace> {
    config.validate()?;
    let dim = config.problem.dim();
    let mut server = ServerState::new(
        config.problem.initial_point(config.seed),
        config.qx,
        config.workers,
    )?;
    let mut workers: Vec<WorkerState> = (0..config.workers)
        .map(|i| {
            WorkerState::new(
                i,
                dim,
                config.hyperparams,
                config.qg,
                config.error_feedback,
                config.worker_seeds[i],
            )
        })
        .collect::<Result<_>>()?;

    let mut log = match &config.message_log {
        Some(path) => Some(
            OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(path)?,
        ),
        None => None,
    };

    let mut trace = Trace::new(config.echo(), server.x.to_vec());
    let mut cum_bits: u64 = 0;

    for round in 1..=config.rounds {
        let broadcast = server.broadcast()?;
        cum_bits += broadcast.payload.bits();
        log_message(&mut log, &broadcast.payload)?;
        let contraction_x = broadcast.payload.measure_contraction(&server.x)?;

        // Metrics are taken at the quantized broadcast, the point the theory
        // bounds; the server's full-precision x is tracked via x_norm.
        let x_hat = broadcast.payload.decompress()?;
        let loss = config.problem.loss(&x_hat);
        let grad_norm = config.problem.full_gradient(&x_hat).norm(Norm::L2);

        let mut reports = Vec::with_capacity(config.workers);
        let mut outputs = Vec::with_capacity(config.workers);
        for w in workers.iter_mut() {
            let (report, out) = worker_round(w, &broadcast, config.problem)?;
            cum_bits += report.payload.bits();
            log_message(&mut log, &report.payload)?;
            reports.push(report);
            outputs.push(out);
        }
        server.apply_reports(&reports)?;

        let n = config.workers as f64;
        let record = RoundRecord {
            round,
            loss,
            grad_norm,
            mean_delta_norm: outputs
                .iter()
                .map(|o| o.step.delta.norm(Norm::L2))
                .sum::<f64>()
                / n,
            mean_err_norm: outputs.iter().map(|o| o.step.new_error_norm).sum::<f64>() / n,
            cum_bits,
            alpha_t: outputs[0].step.alpha_t,
            theta_t: outputs[0].step.theta_t,
            delta_norms: outputs
                .iter()
                .map(|o| o.step.delta.norm(Norm::L2))
                .collect(),
            err_norms: outputs.iter().map(|o| o.step.new_error_norm).collect(),
            min_contraction_g: outputs
                .iter()
                .filter_map(|o| o.step.contraction)
                .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c)))),
            contraction_x,
            x_norm: server.x.norm(Norm::L2),
            max_grad_sample_norm: outputs
                .iter()
                .fold(0.0, |a, o| a.max(o.grad_sample_norm)),
        };
        let snapshot = config.snapshots.then(|| RoundSnapshot {
            x_after: server.x.to_vec(),
            workers: workers
                .iter()
                .zip(&outputs)
                .map(|(w, o)| WorkerSnapshot {
                    delta: o.step.delta.to_vec(),
                    applied: o.step.applied_update.to_vec(),
                    e_after: w.opt.state.e.to_vec(),
                    m: w.opt.state.m.to_vec(),
                    v: w.opt.state.v.to_vec(),
                })
                .collect(),
        });
        trace.push(record, snapshot);
    }
    Ok(trace)
}
