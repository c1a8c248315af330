//! Diagonal quadratic objective f(x) = 1/2 (x - x*)' A (x - x*) with
//! finite-support coordinatewise noise, so the gradient-norm bound is exact
//! rather than high-probability.

use super::{Bounds, GradientStream, Problem};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    eigenvalues: Vec<f64>,
    minimizer: Tensor,
    /// Zero-mean finite noise set; each coordinate draws independently.
    noise_levels: Vec<f64>,
    /// Radius of the domain on which the declared G bound holds.
    domain_radius: f64,
}

impl QuadraticProblem {
    /// Hessian eigenvalues are spaced linearly in [1, condition_number];
    /// the minimizer is the origin, so f* = 0.
    pub fn new(
        dim: usize,
        condition_number: f64,
        noise_levels: Vec<f64>,
        domain_radius: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if !(condition_number >= 1.0) {
            return Err(Error::Config(format!(
                "condition number must be >= 1, got {condition_number}"
            )));
        }
        if !noise_levels.is_empty() {
            let mean: f64 = noise_levels.iter().sum::<f64>() / noise_levels.len() as f64;
            if mean.abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "noise set must have zero mean, got mean {mean}"
                )));
            }
        }
        if !(domain_radius > 0.0) {
            return Err(Error::Config("domain radius must be > 0".into()));
        }
        let eigenvalues = (0..dim)
            .map(|i| {
                if dim == 1 {
                    1.0
                } else {
                    1.0 + (condition_number - 1.0) * i as f64 / (dim - 1) as f64
                }
            })
            .collect();
        Ok(QuadraticProblem {
            eigenvalues,
            minimizer: Tensor::zeros(dim),
            noise_levels,
            domain_radius,
        })
    }

    fn max_noise(&self) -> f64 {
        self.noise_levels.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn mean_noise_sq(&self) -> f64 {
        if self.noise_levels.is_empty() {
            0.0
        } else {
            self.noise_levels.iter().map(|v| v * v).sum::<f64>() / self.noise_levels.len() as f64
        }
    }
}

impl Problem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.minimizer.len()
    }

    fn loss(&self, x: &Tensor) -> f64 {
        let diff = x.sub(&self.minimizer).expect("dim checked at construction");
        diff.as_slice()
            .iter()
            .zip(&self.eigenvalues)
            .fold(0.0, |acc, (d, a)| acc + 0.5 * a * d * d)
    }

    fn full_gradient(&self, x: &Tensor) -> Tensor {
        let diff = x.sub(&self.minimizer).expect("dim checked at construction");
        Tensor::from_vec(
            diff.as_slice()
                .iter()
                .zip(&self.eigenvalues)
                .map(|(d, a)| a * d)
                .collect(),
        )
        .expect("finite by construction")
    }

    fn stochastic_gradient(&self, x: &Tensor, stream: &mut GradientStream) -> Tensor {
        let g = self.full_gradient(x);
        if self.noise_levels.is_empty() {
            return g;
        }
        let mut rng = stream.next_rng();
        Tensor::from_vec(
            g.as_slice()
                .iter()
                .map(|v| v + self.noise_levels[rng.gen_range(0..self.noise_levels.len())])
                .collect(),
        )
        .expect("finite by construction")
    }

    fn bounds(&self) -> Bounds {
        let l = self.eigenvalues.iter().fold(0.0f64, |a, v| a.max(*v));
        let g = l * self.domain_radius + self.max_noise() * (self.dim() as f64).sqrt();
        Bounds {
            grad_bound: Some(g),
            smoothness: Some(l),
            iterate_bound: Some(self.domain_radius),
            f_star: Some(0.0),
        }
    }

    fn second_moment(&self, x: &Tensor) -> Option<Tensor> {
        // E[(a + xi)^2] = a^2 + E[xi^2] with E[xi] = 0
        let g = self.full_gradient(x);
        let c2 = self.mean_noise_sq();
        Some(g.square().add_scalar(c2))
    }

    fn initial_point(&self, seed: u64) -> Tensor {
        let mut rng = GradientStream::rng_at(seed ^ 0x51ab_eed5, 0);
        let r = self.domain_radius * 0.5;
        Tensor::from_vec((0..self.dim()).map(|_| rng.gen_range(-r..r)).collect())
            .expect("finite by construction")
    }
}
