//! One-hidden-layer tanh regression network with mean-squared-error loss and
//! handwritten backpropagation. Small by design: the point is a non-convex
//! objective whose exact gradient we can cross-check by finite differences.

use super::{Bounds, GradientStream, Problem};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;

/// Parameters are flattened as [W1 (hidden x in, row-major), b1 (hidden),
/// W2 (out x hidden, row-major), b2 (out)].
#[derive(Debug, Clone)]
pub struct MlpProblem {
    in_dim: usize,
    hidden: usize,
    out_dim: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    batch: usize,
}

impl MlpProblem {
    /// Synthetic regression data: targets come from a fixed random teacher
    /// network of the same shape, so zero training loss is attainable.
    pub fn synthetic(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        n_samples: usize,
        batch: usize,
        seed: u64,
    ) -> Result<Self> {
        if in_dim == 0 || hidden == 0 || out_dim == 0 || n_samples == 0 {
            return Err(Error::Config("all MLP dimensions must be >= 1".into()));
        }
        if batch == 0 || batch > n_samples {
            return Err(Error::Config(format!(
                "batch must be in 1..={n_samples}, got {batch}"
            )));
        }
        let mut rng = GradientStream::rng_at(seed ^ 0x3151_a9ed, 0);
        let n_params = Self::param_count(in_dim, hidden, out_dim);
        let teacher: Vec<f64> = (0..n_params).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let teacher = Tensor::from_vec(teacher).expect("finite by construction");
        let mut inputs = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            inputs.push((0..in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        let skeleton = MlpProblem {
            in_dim,
            hidden,
            out_dim,
            inputs,
            targets: Vec::new(),
            batch,
        };
        let targets = skeleton
            .inputs
            .iter()
            .map(|x| skeleton.forward(&teacher, x).output)
            .collect();
        Ok(MlpProblem { targets, ..skeleton })
    }

    pub fn param_count(in_dim: usize, hidden: usize, out_dim: usize) -> usize {
        hidden * in_dim + hidden + out_dim * hidden + out_dim
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.len()
    }

    fn forward(&self, w: &Tensor, input: &[f64]) -> Forward {
        let p = w.as_slice();
        let (w1, rest) = p.split_at(self.hidden * self.in_dim);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.out_dim * self.hidden);
        let mut act = Vec::with_capacity(self.hidden);
        for h in 0..self.hidden {
            let row = &w1[h * self.in_dim..(h + 1) * self.in_dim];
            let z: f64 = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + b1[h];
            act.push(z.tanh());
        }
        let mut output = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &w2[o * self.hidden..(o + 1) * self.hidden];
            let z: f64 = row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>() + b2[o];
            output.push(z);
        }
        Forward { act, output }
    }

    /// Accumulates d/dw of 1/2 ||net(x) - y||^2 for one sample into `grad`.
    fn sample_backprop(&self, w: &Tensor, idx: usize, grad: &mut [f64]) -> f64 {
        let input = &self.inputs[idx];
        let target = &self.targets[idx];
        let fwd = self.forward(w, input);

        let w1_len = self.hidden * self.in_dim;
        let b1_off = w1_len;
        let w2_off = b1_off + self.hidden;
        let b2_off = w2_off + self.out_dim * self.hidden;
        let w2 = &w.as_slice()[w2_off..b2_off];

        let resid: Vec<f64> = fwd
            .output
            .iter()
            .zip(target)
            .map(|(o, t)| o - t)
            .collect();
        let loss = 0.5 * resid.iter().fold(0.0, |a, r| a + r * r);

        // Output layer: dL/dW2[o][h] = r_o * act_h, dL/db2[o] = r_o.
        for o in 0..self.out_dim {
            for h in 0..self.hidden {
                grad[w2_off + o * self.hidden + h] += resid[o] * fwd.act[h];
            }
            grad[b2_off + o] += resid[o];
        }
        // Hidden layer through tanh' = 1 - act^2.
        for h in 0..self.hidden {
            let upstream: f64 = (0..self.out_dim)
                .map(|o| resid[o] * w2[o * self.hidden + h])
                .sum();
            let dz = upstream * (1.0 - fwd.act[h] * fwd.act[h]);
            for i in 0..self.in_dim {
                grad[h * self.in_dim + i] += dz * input[i];
            }
            grad[b1_off + h] += dz;
        }
        loss
    }
}

struct Forward {
    act: Vec<f64>,
    output: Vec<f64>,
}

impl Problem for MlpProblem {
    fn dim(&self) -> usize {
        Self::param_count(self.in_dim, self.hidden, self.out_dim)
    }

    fn loss(&self, w: &Tensor) -> f64 {
        let n = self.n_samples() as f64;
        (0..self.n_samples())
            .map(|idx| {
                let fwd = self.forward(w, &self.inputs[idx]);
                0.5 * fwd
                    .output
                    .iter()
                    .zip(&self.targets[idx])
                    .fold(0.0, |a, (o, t)| a + (o - t) * (o - t))
            })
            .sum::<f64>()
            / n
    }

    fn full_gradient(&self, w: &Tensor) -> Tensor {
        let mut g = vec![0.0; self.dim()];
        for idx in 0..self.n_samples() {
            self.sample_backprop(w, idx, &mut g);
        }
        let n = self.n_samples() as f64;
        Tensor::from_vec(g.into_iter().map(|v| v / n).collect()).expect("finite by construction")
    }

    fn stochastic_gradient(&self, w: &Tensor, stream: &mut GradientStream) -> Tensor {
        if self.batch == self.n_samples() {
            return self.full_gradient(w);
        }
        let mut rng = stream.next_rng();
        let mut g = vec![0.0; self.dim()];
        for _ in 0..self.batch {
            let idx = rng.gen_range(0..self.n_samples());
            self.sample_backprop(w, idx, &mut g);
        }
        let b = self.batch as f64;
        Tensor::from_vec(g.into_iter().map(|v| v / b).collect()).expect("finite by construction")
    }

    fn bounds(&self) -> Bounds {
        // No closed-form global gradient bound on an unbounded parameter
        // space; callers measure G from traces instead.
        Bounds {
            grad_bound: None,
            smoothness: None,
            iterate_bound: None,
            f_star: Some(0.0),
        }
    }

    fn initial_point(&self, seed: u64) -> Tensor {
        let mut rng = GradientStream::rng_at(seed ^ 0x71e9_a01d, 0);
        let scale = 1.0 / (self.in_dim as f64).sqrt();
        Tensor::from_vec(
            (0..self.dim())
                .map(|_| rng.gen_range(-scale..scale))
                .collect(),
        )
        .expect("finite by construction")
    }
}
