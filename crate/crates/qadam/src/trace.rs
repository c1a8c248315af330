//! Per-round run records plus optional full state snapshots, with CSV and
//! JSON export. The CSV carries the fixed summary columns; the JSON carries
//! the complete trace (per-worker series, snapshots, config echo) that the
//! verify checks consume.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// The effective configuration of a run, echoed verbatim into every trace so
/// outputs are self-describing and replayable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub dim: usize,
    pub workers: usize,
    pub steps: u64,
    /// Gradient quantizer: "fp", "ternary", or a bit width.
    pub kg: String,
    /// Weight quantizer: "fp", "ternary", or a bit width.
    pub kx: String,
    pub ef: bool,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub eps: f64,
    pub schedule: String,
    pub seed: u64,
    pub snapshots: bool,
}

/// One synchronous round as observed at the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: u64,
    /// f evaluated at the dequantized broadcast x̂_t.
    pub loss: f64,
    /// l2 norm of the full gradient at x̂_t.
    pub grad_norm: f64,
    /// Mean over workers of ‖Δ_t^{(i)}‖₂.
    pub mean_delta_norm: f64,
    /// Mean over workers of the post-step residual norm ‖e^{(i)}‖₂.
    pub mean_err_norm: f64,
    /// Total bits transferred up to and including this round.
    pub cum_bits: u64,
    pub alpha_t: f64,
    pub theta_t: f64,
    /// Per-worker ‖Δ_t^{(i)}‖₂ in worker-id order (empty when parsed from CSV).
    #[serde(default)]
    pub delta_norms: Vec<f64>,
    /// Per-worker post-step ‖e^{(i)}‖₂ in worker-id order.
    #[serde(default)]
    pub err_norms: Vec<f64>,
    /// Smallest empirical gradient-quantizer contraction across workers this
    /// round; None when every quantizer input was zero or Q_g is identity.
    #[serde(default)]
    pub min_contraction_g: Option<f64>,
    /// Empirical weight-quantizer contraction for this round's broadcast.
    #[serde(default)]
    pub contraction_x: Option<f64>,
    /// l2 norm of the server's full-precision iterate after the round.
    #[serde(default)]
    pub x_norm: f64,
    /// Largest stochastic-gradient norm drawn by any worker this round.
    #[serde(default)]
    pub max_grad_sample_norm: f64,
}

/// Full state captured after one round; recorded only when snapshots are
/// enabled (small d).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSnapshot {
    /// Server's full-precision iterate after applying the round's mean update.
    pub x_after: Vec<f64>,
    pub workers: Vec<WorkerSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerSnapshot {
    /// Unquantized adaptive step Δ_t^{(i)}.
    pub delta: Vec<f64>,
    /// Dequantized report actually sent to the server.
    pub applied: Vec<f64>,
    /// Residual after the step (the algorithm's e_{t+1}).
    pub e_after: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: ConfigEcho,
    /// Server iterate before round 1.
    pub initial_x: Vec<f64>,
    pub records: Vec<RoundRecord>,
    /// Present only when the run recorded snapshots.
    pub snapshots: Option<Vec<RoundSnapshot>>,
}

pub const CSV_HEADER: &str =
    "round,loss,grad_norm,mean_delta_norm,mean_err_norm,cum_bits,alpha_t,theta_t";

impl Trace {
    pub fn new(config: ConfigEcho, initial_x: Vec<f64>) -> Self {
        let snapshots = config.snapshots.then(Vec::new);
        Trace {
            config,
            initial_x,
            records: Vec::new(),
            snapshots,
        }
    }

    pub fn push(&mut self, record: RoundRecord, snapshot: Option<RoundSnapshot>) {
        debug_assert_eq!(record.round, self.records.len() as u64 + 1);
        self.records.push(record);
        if let Some(all) = &mut self.snapshots {
            all.push(snapshot.expect("snapshot-enabled trace needs a snapshot per round"));
        }
    }

    /// Smallest empirical gradient contraction over the whole trace; this is
    /// the δ_g the lemma checks use.
    pub fn min_contraction_g(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.min_contraction_g)
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c))))
    }

    pub fn min_contraction_x(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.contraction_x)
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c))))
    }

    /// Largest ‖x_t‖ observed, the post-hoc iterate bound D.
    pub fn max_x_norm(&self) -> f64 {
        self.records.iter().fold(0.0, |a, r| a.max(r.x_norm))
    }

    /// Largest sampled gradient norm, a fallback for G when the problem
    /// declares no bound.
    pub fn max_grad_sample_norm(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0, |a, r| a.max(r.max_grad_sample_norm))
    }

    /// Summary CSV. Floats print with Rust's shortest round-trip formatting,
    /// so re-parsing reproduces them bit-exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.round,
                r.loss,
                r.grad_norm,
                r.mean_delta_norm,
                r.mean_err_norm,
                r.cum_bits,
                r.alpha_t,
                r.theta_t
            )
            .expect("writing to String cannot fail");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Trace> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Parses the summary CSV back into records. Per-worker series,
    /// contractions, and snapshots are absent in CSV form; checks that need
    /// them report not-applicable.
    pub fn read_csv(path: &Path, config: ConfigEcho) -> Result<Trace> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty trace CSV".into()))?;
        if header != CSV_HEADER {
            return Err(Error::Format(format!(
                "unexpected trace CSV header: {header:?}"
            )));
        }
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Format(format!(
                    "trace CSV row {}: expected 8 fields, got {}",
                    lineno + 2,
                    f.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|e| Error::Format(format!("trace CSV row {}: {e}", lineno + 2)))
            };
            records.push(RoundRecord {
                round: f[0]
                    .parse()
                    .map_err(|e| Error::Format(format!("trace CSV row {}: {e}", lineno + 2)))?,
                loss: parse(f[1])?,
                grad_norm: parse(f[2])?,
                mean_delta_norm: parse(f[3])?,
                mean_err_norm: parse(f[4])?,
                cum_bits: f[5]
                    .parse()
                    .map_err(|e| Error::Format(format!("trace CSV row {}: {e}", lineno + 2)))?,
                alpha_t: parse(f[6])?,
                theta_t: parse(f[7])?,
                delta_norms: Vec::new(),
                err_norms: Vec::new(),
                min_contraction_g: None,
                contraction_x: None,
                x_norm: 0.0,
                max_grad_sample_norm: 0.0,
            });
        }
        Ok(Trace {
            config,
            initial_x: Vec::new(),
            records,
            snapshots: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_config() -> ConfigEcho {
        ConfigEcho {
            problem: "quadratic".into(),
            dim: 2,
            workers: 1,
            steps: 2,
            kg: "2".into(),
            kx: "fp".into(),
            ef: true,
            alpha: 0.001,
            beta: 0.99,
            theta: 0.999,
            eps: 1e-5,
            schedule: "decay_sqrt_t".into(),
            seed: 7,
            snapshots: false,
        }
    }

    fn sample_record(round: u64) -> RoundRecord {
        RoundRecord {
            round,
            loss: 0.1 / round as f64,
            grad_norm: 0.3 + round as f64 * 1e-17, // exercises round-trip printing
            mean_delta_norm: 0.001,
            mean_err_norm: 0.0005,
            cum_bits: round * 200,
            alpha_t: 0.001 / (round as f64).sqrt(),
            theta_t: 1.0 - 0.999 / round as f64,
            delta_norms: vec![0.001],
            err_norms: vec![0.0005],
            min_contraction_g: Some(0.5),
            contraction_x: None,
            x_norm: 1.25,
            max_grad_sample_norm: 0.9,
        }
    }

    #[test]
    fn csv_round_trips_floats_exactly() {
        let mut t = Trace::new(sample_config(), vec![1.0, -1.0]);
        t.push(sample_record(1), None);
        t.push(sample_record(2), None);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        t.write_csv(&path).unwrap();
        let back = Trace::read_csv(&path, sample_config()).unwrap();
        assert_eq!(back.records.len(), 2);
        for (a, b) in t.records.iter().zip(&back.records) {
            assert_eq!(a.round, b.round);
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
            assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            assert_eq!(a.alpha_t.to_bits(), b.alpha_t.to_bits());
            assert_eq!(a.theta_t.to_bits(), b.theta_t.to_bits());
            assert_eq!(a.cum_bits, b.cum_bits);
        }
    }

    #[test]
    fn json_round_trips_whole_trace() {
        let mut config = sample_config();
        config.snapshots = true;
        let mut t = Trace::new(config, vec![0.5, 0.5]);
        t.push(
            sample_record(1),
            Some(RoundSnapshot {
                x_after: vec![0.4, 0.6],
                workers: vec![WorkerSnapshot {
                    delta: vec![0.1, -0.1],
                    applied: vec![0.1, -0.1],
                    e_after: vec![0.0, 0.0],
                    m: vec![0.01, -0.01],
                    v: vec![0.001, 0.001],
                }],
            }),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.json");
        t.write_json(&path).unwrap();
        assert_eq!(Trace::read_json(&path).unwrap(), t);
    }

    #[test]
    fn csv_header_mismatch_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "round,loss\n1,0.5\n").unwrap();
        assert!(Trace::read_csv(&path, sample_config()).is_err());
    }

    #[test]
    fn trace_minima_and_maxima() {
        let mut t = Trace::new(sample_config(), vec![]);
        let mut r1 = sample_record(1);
        r1.min_contraction_g = Some(0.7);
        r1.x_norm = 2.0;
        let mut r2 = sample_record(2);
        r2.min_contraction_g = Some(0.4);
        r2.x_norm = 1.0;
        t.push(r1, None);
        t.push(r2, None);
        assert_eq!(t.min_contraction_g(), Some(0.4));
        assert_eq!(t.max_x_norm(), 2.0);
        assert_eq!(t.min_contraction_x(), None);
    }
}
