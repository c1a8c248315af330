//! Single-machine quantized generic Adam: time-varying EMA moments, the
//! adaptive step delta = alpha_t * m / sqrt(v + eps), and gradient
//! quantization with error feedback. Epsilon sits under the square root with
//! v, not outside it.

use crate::error::{Error, Result};
use crate::quantize::{CompressedTensor, Quantizer};
use crate::tensor::{Norm, Tensor};
use serde::{Deserialize, Serialize};

/// Learning-rate / EMA schedule variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// alpha_t = alpha/sqrt(t), theta_t = 1 - theta/t.
    DecaySqrtT,
    /// alpha_t = alpha/sqrt(T), theta_t = 1 - theta/T for all t (fixed horizon T).
    FixedHorizon(u64),
    /// alpha_t = alpha * 2^(-floor(t/period)), theta_t as in DecaySqrtT.
    EpochHalving(u64),
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::DecaySqrtT => write!(f, "decay_sqrt_t"),
            Schedule::FixedHorizon(t) => write!(f, "fixed_horizon:{t}"),
            Schedule::EpochHalving(p) => write!(f, "epoch_halving:{p}"),
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "decay_sqrt_t" {
            return Ok(Schedule::DecaySqrtT);
        }
        let parse_arg = |arg: &str, what: &str| -> Result<u64> {
            arg.parse()
                .map_err(|e| Error::Config(format!("bad {what} in schedule {s:?}: {e}")))
        };
        if let Some(arg) = s.strip_prefix("fixed_horizon:") {
            return Ok(Schedule::FixedHorizon(parse_arg(arg, "horizon")?));
        }
        if let Some(arg) = s.strip_prefix("epoch_halving:") {
            return Ok(Schedule::EpochHalving(parse_arg(arg, "period")?));
        }
        Err(Error::Config(format!(
            "unknown schedule {s:?}; expected decay_sqrt_t, fixed_horizon:T, or epoch_halving:P"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub schedule: Schedule,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.001,
            beta: 0.99,
            theta: 0.999,
            epsilon: 1e-5,
            schedule: Schedule::DecaySqrtT,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0,1), got {}", self.beta)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must be in (0,1], got {}", self.theta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        match self.schedule {
            Schedule::DecaySqrtT | Schedule::EpochHalving(_) => {
                // theta_1 = 1 - theta must stay positive
                if self.theta >= 1.0 {
                    return Err(Error::Config(
                        "theta must be < 1 for the 1 - theta/t schedule".into(),
                    ));
                }
            }
            Schedule::FixedHorizon(t) => {
                if t == 0 {
                    return Err(Error::Config("fixed horizon T must be >= 1".into()));
                }
            }
        }
        if let Schedule::EpochHalving(p) = self.schedule {
            if p == 0 {
                return Err(Error::Config("halving period must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// (alpha_t, theta_t) at step t >= 1.
    pub fn schedule_at(&self, t: u64) -> (f64, f64) {
        assert!(t >= 1, "step counter starts at 1");
        match self.schedule {
            Schedule::DecaySqrtT => {
                let tf = t as f64;
                (self.alpha / tf.sqrt(), 1.0 - self.theta / tf)
            }
            Schedule::FixedHorizon(horizon) => {
                let tf = horizon as f64;
                (self.alpha / tf.sqrt(), 1.0 - self.theta / tf)
            }
            Schedule::EpochHalving(period) => {
                let tf = t as f64;
                let halvings = (t / period) as i32;
                (self.alpha * 2f64.powi(-halvings), 1.0 - self.theta / tf)
            }
        }
    }
}

/// Per-machine optimizer state: first/second moments, error-feedback
/// residual, and the 1-based step counter for the next step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub m: Tensor,
    pub v: Tensor,
    pub e: Tensor,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        OptimizerState {
            m: Tensor::zeros(dim),
            v: Tensor::zeros(dim),
            e: Tensor::zeros(dim),
            t: 1,
        }
    }

    /// v' = theta_t*v + (1-theta_t)*g^2, m' = beta*m + (1-beta)*g.
    /// The step counter is advanced by the caller.
    pub fn update_moments(&mut self, g: &Tensor, theta_t: f64, beta: f64) -> Result<()> {
        self.v = self.v.scale(theta_t).add(&g.square().scale(1.0 - theta_t))?;
        self.m = self.m.scale(beta).add(&g.scale(1.0 - beta))?;
        Ok(())
    }
}

/// delta_t = alpha_t * m / sqrt(v + eps), coordinatewise.
pub fn compute_delta(m: &Tensor, v: &Tensor, alpha_t: f64, epsilon: f64) -> Result<Tensor> {
    debug_assert!(epsilon > 0.0);
    let denom = v.add_scalar(epsilon).sqrt()?;
    Ok(m.div(&denom)?.scale(alpha_t))
}

/// What one step actually did, for trace recording.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Dequantized Q_g(delta + e), the vector subtracted from x.
    pub applied_update: Tensor,
    /// The unquantized adaptive step alpha_t*m/sqrt(v+eps).
    pub delta: Tensor,
    /// l2 norm of the residual after the step.
    pub new_error_norm: f64,
    /// Wire cost of the quantized update.
    pub bits_sent: u64,
    /// Empirical contraction factor measured on the quantizer input,
    /// None when the input was zero.
    pub contraction: Option<f64>,
    pub alpha_t: f64,
    pub theta_t: f64,
}

/// One machine running quantized generic Adam.
#[derive(Debug, Clone)]
pub struct QuantizedAdam {
    pub hyperparams: Hyperparams,
    pub gradient_quantizer: Quantizer,
    /// When false the residual is discarded every step (e stays zero).
    pub error_feedback: bool,
    pub state: OptimizerState,
}

impl QuantizedAdam {
    pub fn new(
        dim: usize,
        hyperparams: Hyperparams,
        gradient_quantizer: Quantizer,
        error_feedback: bool,
    ) -> Result<Self> {
        hyperparams.validate()?;
        gradient_quantizer.validate()?;
        Ok(QuantizedAdam {
            hyperparams,
            gradient_quantizer,
            error_feedback,
            state: OptimizerState::new(dim),
        })
    }

    /// Produces the quantized update message for the current gradient and
    /// advances moments, residual, and step counter. The caller applies the
    /// dequantized message by subtraction (worker role in the parameter-server
    /// protocol; `step` composes both for the single-machine case).
    pub fn prepare_update(&mut self, g: &Tensor) -> Result<(CompressedTensor, StepOutput)> {
        let (alpha_t, theta_t) = self.hyperparams.schedule_at(self.state.t);
        self.state.update_moments(g, theta_t, self.hyperparams.beta)?;
        let delta = compute_delta(
            &self.state.m,
            &self.state.v,
            alpha_t,
            self.hyperparams.epsilon,
        )?;
        let to_quantize = delta.add(&self.state.e)?;
        let message = self.gradient_quantizer.compress(&to_quantize)?;
        let applied = message.decompress()?;
        if self.error_feedback {
            self.state.e = to_quantize.sub(&applied)?;
        } else {
            self.state.e = Tensor::zeros(g.len());
        }
        let contraction = message.measure_contraction(&to_quantize)?;
        let out = StepOutput {
            new_error_norm: self.state.e.norm(Norm::L2),
            bits_sent: message.bits(),
            applied_update: applied,
            delta,
            contraction,
            alpha_t,
            theta_t,
        };
        self.state.t += 1;
        Ok((message, out))
    }

    /// Full single-machine step: x' = x - dequantize(Q_g(delta + e)).
    /// The gradient must have been sampled at Q_x(x) by the caller.
    pub fn step(&mut self, x: &Tensor, g: &Tensor) -> Result<(Tensor, StepOutput)> {
        let (_, out) = self.prepare_update(g)?;
        let x_next = x.sub(&out.applied_update)?;
        Ok((x_next, out))
    }
}
