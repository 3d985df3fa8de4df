use serde::{Deserialize, Serialize};

use super::{check_keep_probability, check_target_len, debias_sequence, sup_norm};
use crate::error::{Error, Result};
use crate::graph::{BiDegreeSequence, IntegerBiSequence};
use crate::model::Theta;
use crate::privacy::PrivacyBudget;

/// Consecutive non-improving iterations tolerated before the damping
/// fallback kicks in.
const OSCILLATION_PATIENCE: usize = 25;
const FALLBACK_DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on `||F(theta)||_inf`, measured on the flipped-degree scale.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Divergence guard on `||theta||_inf`.
    pub parameter_bound: f64,
    /// Step length in `(0, 1]`.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-8, max_iterations: 5000, parameter_bound: 30.0, damping: 1.0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::domain(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        if !(self.parameter_bound > 0.0) {
            return Err(Error::domain(format!("parameter_bound must be positive, got {}", self.parameter_bound)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    DegreeOutOfRange,
    Diverged,
    MaxIterations,
}

impl FailureReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::None => "none",
            FailureReason::DegreeOutOfRange => "degree_out_of_range",
            FailureReason::Diverged => "diverged",
            FailureReason::MaxIterations => "max_iterations",
        }
    }
}

/// Invariant: `converged` implies `failure_reason == None` and
/// `residual_inf <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub converged: bool,
    pub iterations: usize,
    pub residual_inf: f64,
    pub failure_reason: FailureReason,
}

/// Solves the moment equations for `target` (length `2n`) under keep
/// probability `p`.
///
/// The target is debiased, its last in-degree coordinate is replaced by the
/// value that makes out- and in-sums agree, and the fixed-point map
///
/// ```text
/// alpha_i <- log t_i     - log sum_{k != i} e^{beta_k} / (1 + e^{alpha_i + beta_k})
/// beta_j  <- log t_{n+j} - log sum_{k != j} e^{alpha_k} / (1 + e^{alpha_k + beta_j})
/// ```
///
/// is applied to every coordinate, followed by the shift
/// `(alpha + beta_n, beta - beta_n)` that restores `beta_n = 0`. The shift
/// leaves every edge probability unchanged, so the first `2n - 1` residuals
/// are those of the pinned system.
pub fn solve_p0(target: &[f64], p: f64, options: &SolverOptions) -> Result<FitResult> {
    solve_p0_observed(target, p, options, |_, _| {})
}

/// [`solve_p0`] with a callback receiving `(iteration, theta)` after each
/// update.
pub fn solve_p0_observed<F>(target: &[f64], p: f64, options: &SolverOptions, mut observe: F) -> Result<FitResult>
where
    F: FnMut(usize, &Theta),
{
    check_keep_probability(p)?;
    options.validate()?;
    let n = check_target_len(target.len())?;
    if target.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("target contains a non-finite value"));
    }
    let mut t = debias_sequence(target, p)?;
    let upper = (n - 1) as f64;
    let completed: f64 = t[..n].iter().sum::<f64>() - t[n..2 * n - 1].iter().sum::<f64>();
    let in_range = |x: f64| x > 0.0 && x < upper;
    let mut theta = Theta::zeros(n);
    let scale = 2.0 * p - 1.0;

    if !t.iter().all(|&x| in_range(x)) || !in_range(completed) {
        let residual_inf = sup_norm(&super::residual_f(&theta, target, p)?);
        return Ok(FitResult {
            theta_hat: theta,
            converged: false,
            iterations: 0,
            residual_inf,
            failure_reason: FailureReason::DegreeOutOfRange,
        });
    }
    t[2 * n - 1] = completed;
    let log_t: Vec<f64> = t.iter().map(|x| x.ln()).collect();

    let mut damping = options.damping;
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    let mut ea = vec![0.0; n];
    let mut eb = vec![0.0; n];
    let mut s_out = vec![0.0; n];
    let mut s_in = vec![0.0; n];
    let mut next_alpha = vec![0.0; n];
    let mut next_beta = vec![0.0; n];
    let mut iterations = 0usize;

    loop {
        for i in 0..n {
            ea[i] = theta.alpha[i].exp();
            eb[i] = theta.beta[i].exp();
        }
        // s_out[i] = sum_{k != i} e^{b_k}/(1 + e^{a_i + b_k}), s_in mirrored.
        s_in.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let denom = 1.0 + ea[i] * eb[k];
                acc += eb[k] / denom;
                s_in[k] += ea[i] / denom;
            }
            s_out[i] = acc;
        }
        // Sum of edge probabilities in row i is e^{a_i} s_out[i].
        let mut residual_inf: f64 = 0.0;
        for i in 0..n {
            let m = (1.0 - p) * upper + scale * ea[i] * s_out[i];
            residual_inf = residual_inf.max((m - target[i]).abs());
        }
        for j in 0..n - 1 {
            let m = (1.0 - p) * upper + scale * eb[j] * s_in[j];
            residual_inf = residual_inf.max((m - target[n + j]).abs());
        }
        if !residual_inf.is_finite() {
            return Ok(failed(theta, iterations, residual_inf, FailureReason::Diverged));
        }
        if residual_inf <= options.tolerance {
            return Ok(FitResult {
                theta_hat: theta,
                converged: true,
                iterations,
                residual_inf,
                failure_reason: FailureReason::None,
            });
        }
        if iterations >= options.max_iterations {
            return Ok(failed(theta, iterations, residual_inf, FailureReason::MaxIterations));
        }
        if residual_inf < best {
            best = residual_inf;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= OSCILLATION_PATIENCE && damping > FALLBACK_DAMPING {
                damping = FALLBACK_DAMPING;
                stalled = 0;
            }
        }

        for i in 0..n {
            next_alpha[i] = log_t[i] - s_out[i].ln();
            next_beta[i] = log_t[n + i] - s_in[i].ln();
        }
        let shift = next_beta[n - 1];
        for i in 0..n {
            let a = next_alpha[i] + shift;
            let b = next_beta[i] - shift;
            theta.alpha[i] += damping * (a - theta.alpha[i]);
            theta.beta[i] += damping * (b - theta.beta[i]);
        }
        theta.beta[n - 1] = 0.0;
        iterations += 1;
        observe(iterations, &theta);

        let norm = theta.sup_norm();
        if !(norm <= options.parameter_bound) {
            let residual_inf = sup_norm(&super::residual_f(&theta, target, p)?);
            return Ok(failed(theta, iterations, residual_inf, FailureReason::Diverged));
        }
    }
}

fn failed(theta: Theta, iterations: usize, residual_inf: f64, reason: FailureReason) -> FitResult {
    FitResult { theta_hat: theta, converged: false, iterations, residual_inf, failure_reason: reason }
}

/// Maximum likelihood estimate from an observed bi-degree sequence.
pub fn fit_mle(d: &BiDegreeSequence, options: &SolverOptions) -> Result<FitResult> {
    solve_p0(&d.to_f64_vec(), 1.0, options)
}

/// Estimate from a Laplace-noised sequence used as-is.
pub fn fit_laplace(z: &IntegerBiSequence, options: &SolverOptions) -> Result<FitResult> {
    solve_p0(&z.to_f64_vec(), 1.0, options)
}

/// Estimate from a denoised Laplace release. Same equations as the MLE.
pub fn fit_denoised(d: &BiDegreeSequence, options: &SolverOptions) -> Result<FitResult> {
    fit_mle(d, options)
}

/// Estimate from the bi-degree sequence of an edge-flipped graph.
pub fn fit_ldp(dprime: &BiDegreeSequence, budget: &PrivacyBudget, options: &SolverOptions) -> Result<FitResult> {
    solve_p0(&dprime.to_f64_vec(), budget.keep_probability(), options)
}
