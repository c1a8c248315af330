//! Analysis constants and runnable inequality checks over recorded traces:
//! the error-feedback telescoping identity, the residual/step prefix
//! inequality, the coordinatewise moment bound, the step-size sum bounds, and
//! the theorem right-hand sides as loose diagnostics.
//!
//! The constant C1 = prod theta_j/theta' underflows binary64 for plausible
//! hyperparameters, so every quantity touching it is computed in log space
//! and exponentiated only at the end.

use crate::error::{Error, Result};
use crate::optimizer::Hyperparams;
use crate::trace::Trace;
use serde::{Deserialize, Serialize};

/// Problem-level bounds the constants need.
#[derive(Debug, Clone, Copy)]
pub struct BoundsInput {
    /// Hard bound G on every stochastic gradient norm.
    pub grad_bound: f64,
    /// Smoothness constant L.
    pub smoothness: f64,
    /// Iterate bound D (post hoc max ||x_t|| when not declared).
    pub iterate_bound: f64,
    /// Loss at the first iterate.
    pub f_x1: f64,
    /// Lower bound f* on the loss.
    pub f_star: f64,
}

/// Every constant appearing in the convergence statements, evaluated for one
/// configuration. All fields are finite and positive (zero allowed where a
/// (1 - delta) factor vanishes).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalysisConstants {
    pub theta_prime: f64,
    /// gamma = beta / theta'.
    pub gamma: f64,
    /// max { j : theta_j < theta' }.
    pub n_cut: u64,
    /// ln C1 where C1 = prod_{j=1}^{n_cut} theta_j / theta'.
    pub log_c1: f64,
    /// exp(log_c1); may underflow to 0 for extreme schedules, use log_c1 then.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Theorem-1 numerator constant C.
    pub c: f64,
    /// Theorem-1 harmonic-sum coefficient C'.
    pub c_prime: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
}

/// Which convergence statement's right-hand side to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Gradient quantization only (Q_x identity).
    One,
    /// Weight quantization only.
    Two,
    /// Both quantizations, multi-worker.
    Three,
}

const N_CUT_LIMIT: u64 = 10_000_000;

/// Evaluates every analysis constant. `theta_prime` defaults to the midpoint
/// (1 + beta^2)/2 of its admissible interval (beta^2, 1).
pub fn compute_constants(
    h: &Hyperparams,
    dim: usize,
    bounds: &BoundsInput,
    delta_g: f64,
    delta_x: f64,
    theta_prime: Option<f64>,
) -> Result<AnalysisConstants> {
    h.validate()?;
    let beta = h.beta;
    let tp = theta_prime.unwrap_or((1.0 + beta * beta) / 2.0);
    if !(tp > beta * beta && tp < 1.0) {
        return Err(Error::Config(format!(
            "theta' must lie in (beta^2, 1) = ({}, 1), got {tp}",
            beta * beta
        )));
    }
    for (name, v) in [("delta_g", delta_g), ("delta_x", delta_x)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Config(format!("{name} must be in (0,1], got {v}")));
        }
    }
    if !(bounds.grad_bound > 0.0) {
        return Err(Error::Config("gradient bound G must be > 0".into()));
    }

    let gamma = beta / tp;
    // N_cut = max{j : theta_j < theta'}; theta_j is non-decreasing for every
    // supported schedule, so stop at the first j at or above theta'. The
    // fixed-horizon schedule has constant theta_j, hence the hard iteration
    // guard.
    let mut n_cut: u64 = 0;
    let mut log_c1 = 0.0f64;
    let mut j = 1u64;
    loop {
        let (_, theta_j) = h.schedule_at(j);
        if theta_j >= tp {
            break;
        }
        if theta_j <= 0.0 {
            return Err(Error::Config(format!(
                "theta_{j} = {theta_j} <= 0; the moment bound is vacuous"
            )));
        }
        n_cut = j;
        log_c1 += (theta_j / tp).ln();
        j += 1;
        if j > N_CUT_LIMIT {
            return Err(Error::Config(format!(
                "theta_j stays below theta' = {tp} beyond j = {N_CUT_LIMIT}; \
                 C1 is effectively zero for this schedule"
            )));
        }
    }
    let c1 = log_c1.exp();

    let g = bounds.grad_bound;
    let l = bounds.smoothness;
    let d_bound = bounds.iterate_bound;
    let dim_f = dim as f64;
    let alpha = h.alpha;
    let theta = h.theta;
    let eps = h.epsilon;
    let (_, theta_1) = h.schedule_at(1);

    // ln(theta_1 * C1 * (1-gamma)), the denominator block C2 keeps dividing by.
    let log_block = theta_1.ln() + log_c1 + (1.0 - gamma).ln();
    let inv_block = (-log_block).exp();
    let inv_sqrt_block = (-0.5 * log_block).exp();

    // C2, five terms verbatim (Lemma "Mt"); theta_1 in the denominators is the
    // schedule's first-step value.
    let c2 = {
        let lead = 5.0 * alpha * g.powi(3) / (2.0 * eps * theta.sqrt());
        let t1 = lead * (1.0 - beta) * (beta / (1.0 - beta) * inv_sqrt_block + 1.0).powi(2);
        let t2 = lead;
        let t3 = 5.0 * beta * beta * alpha * dim_f * eps.sqrt() / (2.0 * theta.sqrt() * (1.0 - beta))
            * inv_block;
        let t4 = 5.0 * alpha * (g * g + eps).sqrt() * g * g * beta * beta
            / (2.0 * (1.0 - beta) * theta.sqrt() * eps)
            * inv_block;
        let t5 = 5.0 * alpha * (g * g + eps).sqrt() * beta * beta * dim_f
            / (2.0 * (1.0 - beta) * theta.sqrt())
            * inv_block;
        t1 + t2 + t3 + t4 + t5
    };

    // 1 / (sqrt(C1) (1 - sqrt(gamma))), in log space for the C1 half.
    let amp = (-0.5 * log_c1).exp() / (1.0 - gamma.sqrt());

    let c3 = amp * (l * (2.0 - delta_g) * g * g * alpha * alpha / (eps * delta_g) + c2 * theta);
    let front = 2.0 * (g * g + eps * dim_f).sqrt() / ((1.0 - beta) * alpha);
    let c = front * (bounds.f_x1 - bounds.f_star);
    let c_prime = front * c3;

    let c5 = c;
    let c6 = front * amp * (l * g * g * alpha * alpha / eps + c2 * theta);
    let c7 = 8.0 * (1.0 - delta_x) * (g * g + eps * dim_f).sqrt() * l * d_bound * g
        / ((1.0 - beta) * eps.sqrt())
        * amp;

    let c8 = c;
    let c9 = c_prime;
    let c10 = 4.0 * (g * g + eps * dim_f).sqrt() * (1.0 - delta_x) * l * d_bound * g
        / (eps.sqrt() * (1.0 - beta))
        * amp;

    let consts = AnalysisConstants {
        theta_prime: tp,
        gamma,
        n_cut,
        log_c1,
        c1,
        c2,
        c3,
        c,
        c_prime,
        c5,
        c6,
        c7,
        c8,
        c9,
        c10,
    };
    for (name, v) in [
        ("C2", c2),
        ("C3", c3),
        ("C", c),
        ("C'", c_prime),
        ("C5", c5),
        ("C6", c6),
        ("C7", c7),
        ("C8", c8),
        ("C9", c9),
        ("C10", c10),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Verification(format!(
                "constant {name} evaluated to {v}; hyperparameters are outside \
                 the analysis regime"
            )));
        }
    }
    Ok(consts)
}

/// Numeric right-hand side of the selected convergence statement at horizon T.
pub fn theoretical_bound(consts: &AnalysisConstants, t: u64, theorem: Theorem) -> f64 {
    let harmonic: f64 = (1..=t).map(|i| 1.0 / i as f64).sum();
    let sqrt_t = (t as f64).sqrt();
    match theorem {
        Theorem::One => (consts.c + consts.c_prime * harmonic) / sqrt_t,
        Theorem::Two => (consts.c5 + consts.c6 * harmonic) / sqrt_t + consts.c7,
        Theorem::Three => (consts.c8 + consts.c9 * harmonic) / sqrt_t + consts.c10,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

/// Outcome of one inequality check over a trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    /// Worst slack observed: >= 0 means the inequality held everywhere.
    pub margin: Option<f64>,
    pub detail: String,
}

impl CheckReport {
    fn pass(name: &str, margin: f64, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Pass,
            margin: Some(margin),
            detail,
        }
    }

    fn fail(name: &str, margin: f64, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Fail,
            margin: Some(margin),
            detail,
        }
    }

    fn not_applicable(name: &str, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            status: CheckStatus::NotApplicable,
            margin: None,
            detail,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.status == CheckStatus::Fail
    }

    /// One report line: name, verdict, margin, detail.
    pub fn line(&self) -> String {
        let verdict = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A ",
        };
        match self.margin {
            Some(m) => format!("{verdict} {:<24} margin={m:.3e} {}", self.name, self.detail),
            None => format!("{verdict} {:<24} {}", self.name, self.detail),
        }
    }
}

const EF_IDENTITY_TOLERANCE: f64 = 1e-10;

/// Telescoping identity of error feedback: the mean-residual-corrected
/// iterate moves by exactly the mean unquantized step,
/// (x_{t+1} - mean e_{t+1}) = (x_t - mean e_t) - mean delta_t.
/// Needs snapshots; not applicable when EF is off.
pub fn check_ef_identity(trace: &Trace) -> CheckReport {
    const NAME: &str = "ef_identity";
    if !trace.config.ef {
        return CheckReport::not_applicable(
            NAME,
            "error feedback disabled; residuals are discarded".into(),
        );
    }
    let Some(snapshots) = &trace.snapshots else {
        return CheckReport::not_applicable(NAME, "trace has no state snapshots".into());
    };
    let dim = trace.initial_x.len();
    let n = trace.config.workers;
    let mut x_prev = trace.initial_x.clone();
    let mut e_prev = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for snap in snapshots {
        for i in 0..dim {
            let mean_delta: f64 = snap.workers.iter().map(|w| w.delta[i]).sum::<f64>() / n as f64;
            let mean_e: f64 = snap.workers.iter().map(|w| w.e_after[i]).sum::<f64>() / n as f64;
            let violation =
                ((snap.x_after[i] - mean_e) - (x_prev[i] - e_prev[i] - mean_delta)).abs();
            worst = worst.max(violation);
            e_prev[i] = mean_e;
        }
        x_prev = snap.x_after.clone();
    }
    let margin = EF_IDENTITY_TOLERANCE - worst;
    let detail = format!("max per-coordinate violation {worst:.3e} over {} rounds", snapshots.len());
    if worst <= EF_IDENTITY_TOLERANCE {
        CheckReport::pass(NAME, margin, detail)
    } else {
        CheckReport::fail(NAME, margin, detail)
    }
}

/// Residual/step prefix inequality, per worker:
/// sum_{t<=T'} ||e_t|| ||delta_t|| <= (1-delta_g)/delta_g sum_{t<=T'} ||delta_t||^2
/// at every prefix T', where e_t is the residual produced by round t and
/// delta_g is the trace-minimum empirical contraction.
pub fn check_lemma1(trace: &Trace, delta_g: f64) -> CheckReport {
    const NAME: &str = "lemma1_prefix";
    if !trace.config.ef {
        return CheckReport::not_applicable(NAME, "error feedback disabled".into());
    }
    if !(delta_g > 0.0 && delta_g <= 1.0) {
        return CheckReport::fail(
            NAME,
            f64::NEG_INFINITY,
            format!("empirical delta_g {delta_g} outside (0,1]"),
        );
    }
    if trace.records.iter().any(|r| r.delta_norms.is_empty()) {
        return CheckReport::not_applicable(
            NAME,
            "trace lacks per-worker series (summary CSV only)".into(),
        );
    }
    let factor = (1.0 - delta_g) / delta_g;
    let n = trace.config.workers;
    let mut worst = f64::INFINITY;
    for w in 0..n {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for r in &trace.records {
            lhs += r.err_norms[w] * r.delta_norms[w];
            rhs += factor * r.delta_norms[w] * r.delta_norms[w];
            worst = worst.min(rhs - lhs);
        }
    }
    let detail = format!(
        "delta_g={delta_g:.6}, {} workers x {} rounds, worst prefix slack {worst:.3e}",
        n,
        trace.records.len()
    );
    if worst >= 0.0 {
        CheckReport::pass(NAME, worst, detail)
    } else {
        CheckReport::fail(NAME, worst, detail)
    }
}

/// Coordinatewise second-moment bound m_t^2 <= v_t / (C1 (1-gamma)(1-theta_t)),
/// checked in log space on every snapshot of every worker.
pub fn check_moment_bound(trace: &Trace, consts: &AnalysisConstants) -> CheckReport {
    const NAME: &str = "moment_bound";
    let Some(snapshots) = &trace.snapshots else {
        return CheckReport::not_applicable(NAME, "trace has no state snapshots".into());
    };
    // ln of the bound's constant: -(ln C1 + ln(1-gamma) + ln(1-theta_t)).
    let log_const_t = |theta_t: f64| -(consts.log_c1 + (1.0 - consts.gamma).ln() + (1.0 - theta_t).ln());
    let mut worst = f64::INFINITY;
    for (snap, rec) in snapshots.iter().zip(&trace.records) {
        let log_const = log_const_t(rec.theta_t);
        for w in &snap.workers {
            for (mi, vi) in w.m.iter().zip(&w.v) {
                if *mi == 0.0 {
                    continue; // 0 <= anything nonnegative
                }
                // slack in log space: ln v + ln(const) - 2 ln|m| >= 0
                let slack = vi.ln() + log_const - 2.0 * mi.abs().ln();
                worst = worst.min(slack);
            }
        }
    }
    let detail = if worst == f64::INFINITY {
        "all first moments zero; bound trivial".into()
    } else {
        format!("worst log-space slack {worst:.3e} over {} rounds", snapshots.len())
    };
    if worst >= -1e-9 {
        CheckReport::pass(NAME, worst.min(f64::MAX), detail)
    } else {
        CheckReport::fail(NAME, worst, detail)
    }
}

/// The three sum bounds driven by ||g|| <= G:
/// per step ||delta_t||^2 <= G^2 alpha_t^2 / eps,
/// per prefix sum ||delta_t||^2 <= (G^2/eps) sum alpha_t^2 and
///            sum ||delta_t|| <= (G/sqrt(eps)) sum alpha_t,
/// plus ||v_t||_1 <= G^2 when snapshots carry v.
pub fn check_sum_bounds(trace: &Trace, grad_bound: f64) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    let g2 = grad_bound * grad_bound;
    let eps = trace.config.eps;

    if trace.records.iter().any(|r| r.delta_norms.is_empty()) {
        reports.push(CheckReport::not_applicable(
            "delta_bounds",
            "trace lacks per-worker series (summary CSV only)".into(),
        ));
    } else {
        let n = trace.config.workers;
        let mut worst = f64::INFINITY;
        for w in 0..n {
            let mut sum_sq = 0.0;
            let mut sum_norm = 0.0;
            let mut rhs_sq = 0.0;
            let mut rhs_norm = 0.0;
            for r in &trace.records {
                let dn = r.delta_norms[w];
                // per-step bound
                worst = worst.min(g2 * r.alpha_t * r.alpha_t / eps - dn * dn);
                sum_sq += dn * dn;
                sum_norm += dn;
                rhs_sq += g2 * r.alpha_t * r.alpha_t / eps;
                rhs_norm += grad_bound * r.alpha_t / eps.sqrt();
                worst = worst.min(rhs_sq - sum_sq);
                worst = worst.min(rhs_norm - sum_norm);
            }
        }
        let detail = format!("G={grad_bound:.6}, worst slack {worst:.3e}");
        reports.push(if worst >= -1e-12 {
            CheckReport::pass("delta_bounds", worst, detail)
        } else {
            CheckReport::fail("delta_bounds", worst, detail)
        });
    }

    match &trace.snapshots {
        None => reports.push(CheckReport::not_applicable(
            "v_l1_bound",
            "trace has no state snapshots".into(),
        )),
        Some(snapshots) => {
            let mut worst = f64::INFINITY;
            for snap in snapshots {
                for w in &snap.workers {
                    let l1: f64 = w.v.iter().map(|v| v.abs()).sum();
                    worst = worst.min(g2 - l1);
                }
            }
            let detail = format!("G^2={g2:.6}, worst slack {worst:.3e}");
            reports.push(if worst >= -1e-12 {
                CheckReport::pass("v_l1_bound", worst, detail)
            } else {
                CheckReport::fail("v_l1_bound", worst, detail)
            });
        }
    }
    reports
}

/// Mean over rounds of the squared full-gradient norm at the broadcast, the
/// empirical counterpart of the theorems' left-hand side.
pub fn empirical_mean_grad_norm_sq(trace: &Trace) -> f64 {
    if trace.records.is_empty() {
        return 0.0;
    }
    trace
        .records
        .iter()
        .map(|r| r.grad_norm * r.grad_norm)
        .sum::<f64>()
        / trace.records.len() as f64
}

/// Loose-bound diagnostic: the theorem RHS must evaluate finite and sit above
/// the observed mean squared gradient norm.
pub fn check_theorem_diagnostic(
    trace: &Trace,
    consts: &AnalysisConstants,
    theorem: Theorem,
) -> CheckReport {
    const NAME: &str = "theorem_rhs";
    let t = trace.records.len() as u64;
    if t == 0 {
        return CheckReport::not_applicable(NAME, "empty trace".into());
    }
    let rhs = theoretical_bound(consts, t, theorem);
    let lhs = empirical_mean_grad_norm_sq(trace);
    let detail = format!("empirical mean ||grad||^2 = {lhs:.6e}, theorem RHS = {rhs:.6e}");
    if rhs.is_finite() && lhs <= rhs {
        CheckReport::pass(NAME, rhs - lhs, detail)
    } else {
        CheckReport::fail(NAME, rhs - lhs, detail)
    }
}
