//! Test objectives with exact full gradients, seeded stochastic oracles with
//! hard gradient-norm bounds, and known constants where derivable.

mod logistic;
mod mlp;
mod quadratic;
mod stream;

pub use logistic::LogisticProblem;
pub use mlp::MlpProblem;
pub use quadratic::QuadraticProblem;
pub use stream::GradientStream;

use crate::error::Result;
use crate::tensor::Tensor;

/// Known analysis constants for a problem. `grad_bound` and `smoothness` are
/// hard bounds on the declared domain; `iterate_bound` is reported post hoc
/// from traces when absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bounds {
    pub grad_bound: Option<f64>,
    pub smoothness: Option<f64>,
    pub iterate_bound: Option<f64>,
    pub f_star: Option<f64>,
}

pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn loss(&self, x: &Tensor) -> f64;

    fn full_gradient(&self, x: &Tensor) -> Tensor;

    /// Unbiased at the evaluation point: the expectation over the stream's
    /// distribution equals `full_gradient(x)`. The norm bound holds by
    /// construction, never by clipping.
    fn stochastic_gradient(&self, x: &Tensor, stream: &mut GradientStream) -> Tensor;

    fn bounds(&self) -> Bounds;

    /// Exact per-coordinate E[g^2] at x, when available in closed form.
    fn second_moment(&self, _x: &Tensor) -> Option<Tensor> {
        None
    }

    /// Deterministic starting point for a run.
    fn initial_point(&self, seed: u64) -> Tensor;
}

/// Central finite differences, the independent gradient oracle for tests.
pub fn finite_difference_gradient<P: Problem + ?Sized>(p: &P, x: &Tensor, h: f64) -> Result<Tensor> {
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let fp = p.loss(&Tensor::from_vec(plus)?);
        let fm = p.loss(&Tensor::from_vec(minus)?);
        g.push((fp - fm) / (2.0 * h));
    }
    Tensor::from_vec(g)
}
