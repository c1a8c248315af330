//! Binary logistic regression over a fixed synthetic dataset (or a CSV
//! import). Minibatch gradients are uniform with replacement; the gradient
//! norm is bounded by the largest feature norm by construction.

use super::{Bounds, GradientStream, Problem};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct LogisticProblem {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>, // +1 / -1
    batch: usize,
}

impl LogisticProblem {
    /// Synthetic separable-ish dataset from a random ground-truth separator.
    pub fn synthetic(dim: usize, n_samples: usize, batch: usize, seed: u64) -> Result<Self> {
        if dim == 0 || n_samples == 0 {
            return Err(Error::Config("dim and n_samples must be >= 1".into()));
        }
        let mut rng = GradientStream::rng_at(seed ^ 0x10c1_571c, 0);
        let separator: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut features = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let margin: f64 = row.iter().zip(&separator).map(|(a, b)| a * b).sum();
            // 5% label noise keeps the optimum finite
            let flip = rng.gen_range(0.0..1.0) < 0.05;
            let label = if (margin >= 0.0) != flip { 1.0 } else { -1.0 };
            features.push(row);
            labels.push(label);
        }
        Self::from_data(features, labels, batch)
    }

    /// Rows = samples, last column = label (0/1 or +/-1), header row required.
    pub fn from_csv(path: &Path, batch: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV: header row required".into()))?;
        let cols = header.split(',').count();
        if cols < 2 {
            return Err(Error::Format("CSV needs at least one feature column".into()));
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::Format(format!(
                    "row {}: expected {cols} columns, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let mut row = Vec::with_capacity(cols - 1);
            for f in &fields[..cols - 1] {
                row.push(f.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("row {}: bad float {f:?}: {e}", lineno + 2))
                })?);
            }
            let raw: f64 = fields[cols - 1].trim().parse().map_err(|e| {
                Error::Format(format!("row {}: bad label: {e}", lineno + 2))
            })?;
            let label = if raw > 0.0 { 1.0 } else { -1.0 };
            features.push(row);
            labels.push(label);
        }
        Self::from_data(features, labels, batch)
    }

    fn from_data(features: Vec<Vec<f64>>, labels: Vec<f64>, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if batch > features.len() {
            return Err(Error::Config(format!(
                "batch {batch} exceeds sample count {}",
                features.len()
            )));
        }
        Ok(LogisticProblem {
            features,
            labels,
            batch,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    fn sample_gradient(&self, x: &Tensor, idx: usize, out: &mut [f64]) {
        let row = &self.features[idx];
        let y = self.labels[idx];
        let z: f64 = row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        // d/dw ln(1+exp(-y z)) = -y sigma(-y z) x
        let s = sigmoid(-y * z);
        for (o, xi) in out.iter_mut().zip(row) {
            *o += -y * s * xi;
        }
    }

    fn max_row_norm(&self) -> f64 {
        self.features
            .iter()
            .map(|r| r.iter().fold(0.0, |a, v| a + v * v).sqrt())
            .fold(0.0, f64::max)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Problem for LogisticProblem {
    fn dim(&self) -> usize {
        self.features[0].len()
    }

    fn loss(&self, x: &Tensor) -> f64 {
        let n = self.n_samples() as f64;
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(row, y)| {
                let z: f64 = row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
                log1p_exp(-y * z)
            })
            .sum::<f64>()
            / n
    }

    fn full_gradient(&self, x: &Tensor) -> Tensor {
        let mut g = vec![0.0; self.dim()];
        for idx in 0..self.n_samples() {
            self.sample_gradient(x, idx, &mut g);
        }
        let n = self.n_samples() as f64;
        Tensor::from_vec(g.into_iter().map(|v| v / n).collect()).expect("finite by construction")
    }

    fn stochastic_gradient(&self, x: &Tensor, stream: &mut GradientStream) -> Tensor {
        if self.batch == self.n_samples() {
            return self.full_gradient(x);
        }
        let mut rng = stream.next_rng();
        let mut g = vec![0.0; self.dim()];
        for _ in 0..self.batch {
            let idx = rng.gen_range(0..self.n_samples());
            self.sample_gradient(x, idx, &mut g);
        }
        let b = self.batch as f64;
        Tensor::from_vec(g.into_iter().map(|v| v / b).collect()).expect("finite by construction")
    }

    fn bounds(&self) -> Bounds {
        let r = self.max_row_norm();
        Bounds {
            grad_bound: Some(r),
            smoothness: Some(0.25 * r * r),
            iterate_bound: None,
            f_star: Some(0.0),
        }
    }

    fn initial_point(&self, seed: u64) -> Tensor {
        let mut rng = GradientStream::rng_at(seed ^ 0x1091_57ad, 0);
        Tensor::from_vec((0..self.dim()).map(|_| rng.gen_range(-0.1..0.1)).collect())
            .expect("finite by construction")
    }
}

/// ln(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
