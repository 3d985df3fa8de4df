//! Moment estimation in the p0 model from original, noisy or flipped
//! bi-degree sequences, and the asymptotic-variance machinery around it.
//!
//! All four estimators solve the same system. With keep probability `p`
//! the flipped-graph moment equations read
//!
//! ```text
//! d'_i = sum_{k != i} (p e^{x_ik} + 1 - p) / (1 + e^{x_ik}),  x_ik = alpha_i + beta_k
//! ```
//!
//! and since `(p e^x + 1 - p)/(1 + e^x) = (1 - p) + (2p - 1) e^x/(1 + e^x)`
//! they are the likelihood equations of the non-private MLE evaluated at
//! the debiased degrees `(d' - (n-1)(1-p)) / (2p - 1)`. The MLE and the
//! Laplace estimators are the `p = 1` case.

mod solver;
mod variance;

pub use solver::{
    fit_denoised, fit_laplace, fit_ldp, fit_mle, solve_p0, solve_p0_observed, FailureReason, FitResult,
    SolverOptions,
};
pub use variance::{
    approx_inverse_s, asymptotic_covariance, edge_flip_variances, jacobian_v, laplace_variance_s_n2,
    mle_variances, nondenoised_laplace_variances, sigma_squared, standardized_stats, v_completion,
    v_diagonal, DenseMatrix, StatKind, VarianceReport,
};

use crate::error::{Error, Result};
use crate::model::{logistic, Theta};

pub(crate) fn check_keep_probability(p: f64) -> Result<()> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::domain(format!(
            "keep probability must lie in (1/2, 1], got {p}; the flip is not invertible at 1/2"
        )));
    }
    Ok(())
}

fn check_target_len(len: usize) -> Result<usize> {
    if len < 4 || !len.is_multiple_of(2) {
        return Err(Error::domain(format!("target length must be 2n with n >= 2, got {len}")));
    }
    Ok(len / 2)
}

/// `(d'_i - (n-1)(1-p)) / (2p - 1)` for every coordinate of a flipped
/// bi-degree sequence of length `2n`. The identity at `p = 1`.
pub fn debias_sequence(dprime: &[f64], p: f64) -> Result<Vec<f64>> {
    check_keep_probability(p)?;
    let n = check_target_len(dprime.len())?;
    if p == 1.0 {
        return Ok(dprime.to_vec());
    }
    let shift = (n - 1) as f64 * (1.0 - p);
    let scale = 2.0 * p - 1.0;
    Ok(dprime.iter().map(|d| (d - shift) / scale).collect())
}

/// Expected flipped degrees minus the target, all `2n` equations.
pub fn residual_full(theta: &Theta, target: &[f64], p: f64) -> Result<Vec<f64>> {
    let n = theta.n();
    if target.len() != 2 * n {
        return Err(Error::domain(format!("target has length {}, expected {}", target.len(), 2 * n)));
    }
    let mut f: Vec<f64> = target.iter().map(|t| -t).collect();
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let m = (1.0 - p) + (2.0 * p - 1.0) * logistic(theta.alpha[i] + theta.beta[k]);
            f[i] += m;
            f[n + k] += m;
        }
    }
    Ok(f)
}

/// The moment residual `F(theta)`: out-degree equations for every node and
/// in-degree equations for nodes `1..n-1` (the last one is implied by the
/// others when degree sums agree, and dropped).
pub fn residual_f(theta: &Theta, target: &[f64], p: f64) -> Result<Vec<f64>> {
    let mut f = residual_full(theta, target, p)?;
    f.pop();
    Ok(f)
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
