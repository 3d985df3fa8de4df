//! Jacobian, approximate inverse and asymptotic variances of the moment
//! estimator.
//!
//! Coordinates of the free parameter follow `(alpha_1..alpha_n,
//! beta_1..beta_{n-1})`; vectors of length `2n` append the pinned
//! `beta_n` slot.

use serde::{Deserialize, Serialize};

use super::check_keep_probability;
use crate::error::{Error, Result};
use crate::model::{logistic, Theta};
use crate::privacy::{discrete_laplace_variance, PrivacyBudget};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::domain(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `self - I`.
    pub fn max_abs_deviation_from_identity(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                m = m.max((self.get(i, j) - target).abs());
            }
        }
        m
    }
}

#[inline]
fn weight(x: f64, p: f64) -> f64 {
    let s = logistic(x);
    (2.0 * p - 1.0) * s * (1.0 - s)
}

#[inline]
fn flipped_variance_term(x: f64, p: f64) -> f64 {
    // [p e^x + 1 - p][(1 - p) e^x + p] / (1 + e^x)^2 written in s = logistic(x).
    let s = logistic(x);
    (p * s + (1.0 - p) * (1.0 - s)) * ((1.0 - p) * s + p * (1.0 - s))
}

/// Row sums `v_ii` for all `2n` rows; the last is the completion
/// `v_{2n,2n} = sum_{i != n} v_{i, n+n}`.
pub fn v_diagonal(theta: &Theta, p: f64) -> Result<Vec<f64>> {
    check_keep_probability(p)?;
    theta.validate()?;
    let n = theta.n();
    let mut v = vec![0.0; 2 * n];
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let w = weight(theta.alpha[i] + theta.beta[k], p);
                v[i] += w;
                v[n + k] += w;
            }
        }
    }
    Ok(v)
}

/// `v_{2n,2n}`.
pub fn v_completion(theta: &Theta, p: f64) -> Result<f64> {
    Ok(*v_diagonal(theta, p)?.last().expect("n >= 2"))
}

/// The `(2n-1) x (2n-1)` Jacobian of the moment residual.
pub fn jacobian_v(theta: &Theta, p: f64) -> Result<DenseMatrix> {
    let diag = v_diagonal(theta, p)?;
    let n = theta.n();
    let dim = 2 * n - 1;
    let mut v = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        v.set(i, i, diag[i]);
        for j in 0..n - 1 {
            if i != j {
                let w = weight(theta.alpha[i] + theta.beta[j], p);
                v.set(i, n + j, w);
                v.set(n + j, i, w);
            }
        }
    }
    for j in 0..n - 1 {
        v.set(n + j, n + j, diag[n + j]);
    }
    Ok(v)
}

fn structure_error(msg: String) -> Error {
    Error::domain(format!("matrix is not in the expected block class: {msg}"))
}

/// Entrywise approximate inverse of a Jacobian with the block structure
/// produced by [`jacobian_v`]: zero within-block off-diagonals, symmetric
/// nonnegative cross blocks with zero "diagonal" `(i, n+i)`, and diagonal
/// entries equal to row sums (the out rows including the dropped column).
///
/// `S_ij = delta_ij / v_ii + s_ij / v_{2n,2n}` where `s_ij` is `+1` for
/// two out coordinates, `+1` for two in coordinates and `-1` across blocks.
pub fn approx_inverse_s(v: &DenseMatrix) -> Result<DenseMatrix> {
    let dim = v.rows();
    if dim != v.cols() || dim < 3 || dim.is_multiple_of(2) {
        return Err(structure_error(format!("shape {}x{}", v.rows(), v.cols())));
    }
    let n = dim.div_ceil(2);
    let scale = v.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    for i in 0..dim {
        for j in 0..dim {
            let x = v.get(i, j);
            if !x.is_finite() {
                return Err(structure_error(format!("non-finite entry at ({i},{j})")));
            }
            if (x - v.get(j, i)).abs() > tol {
                return Err(structure_error(format!("asymmetric at ({i},{j})")));
            }
            let same_block = (i < n) == (j < n);
            if i != j && same_block && x.abs() > tol {
                return Err(structure_error(format!("nonzero within-block entry at ({i},{j})")));
            }
            if !same_block && x < -tol {
                return Err(structure_error(format!("negative entry at ({i},{j})")));
            }
        }
    }
    for j in 0..n - 1 {
        if v.get(j, n + j).abs() > tol {
            return Err(structure_error(format!("nonzero self-pair entry at ({j},{})", n + j)));
        }
    }
    // The dropped in-column of out row i is v_ii minus its retained cross entries.
    let mut v2n = 0.0;
    for i in 0..n {
        let cross: f64 = (n..dim).map(|j| v.get(i, j)).sum();
        let dropped = v.get(i, i) - cross;
        if dropped < -tol {
            return Err(structure_error(format!("row {i} is not diagonally dominant")));
        }
        if i != n - 1 {
            v2n += dropped.max(0.0);
        } else if dropped.abs() > tol {
            return Err(structure_error("out row n has a nonzero self-pair entry".into()));
        }
    }
    for j in n..dim {
        let cross: f64 = (0..n).map(|i| v.get(j, i)).sum();
        if (v.get(j, j) - cross).abs() > tol {
            return Err(structure_error(format!("in row {j} diagonal is not its row sum")));
        }
    }
    if !(v2n > 0.0) {
        return Err(structure_error("completed entry v_2n,2n is not positive".into()));
    }
    for i in 0..dim {
        if !(v.get(i, i) > 0.0) {
            return Err(structure_error(format!("diagonal entry {i} is not positive")));
        }
    }
    let mut s = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let sign = if (i < n) == (j < n) { 1.0 } else { -1.0 };
            let mut x = sign / v2n;
            if i == j {
                x += 1.0 / v.get(i, i);
            }
            s.set(i, j, x);
        }
    }
    Ok(s)
}

/// `Var(d'_i)` for all `2n` coordinates.
pub fn sigma_squared(theta: &Theta, p: f64) -> Result<Vec<f64>> {
    check_keep_probability(p)?;
    theta.validate()?;
    let n = theta.n();
    let mut s = vec![0.0; 2 * n];
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let t = flipped_variance_term(theta.alpha[i] + theta.beta[k], p);
                s[i] += t;
                s[n + k] += t;
            }
        }
    }
    Ok(s)
}

/// Upper-left `k x k` block of the limiting covariance
/// `diag(sigma_i^2 / v_ii^2) + s_ij sigma_2n^2 / v_2n,2n^2`.
pub fn asymptotic_covariance(theta: &Theta, p: f64, k: usize) -> Result<DenseMatrix> {
    let n = theta.n();
    if k == 0 || k > 2 * n - 1 {
        return Err(Error::domain(format!("block size must lie in 1..={}, got {k}", 2 * n - 1)));
    }
    let v = v_diagonal(theta, p)?;
    let s2 = sigma_squared(theta, p)?;
    let tail = s2[2 * n - 1] / (v[2 * n - 1] * v[2 * n - 1]);
    let mut m = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let sign = if (i < n) == (j < n) { 1.0 } else { -1.0 };
            let mut x = sign * tail;
            if i == j {
                x += s2[i] / (v[i] * v[i]);
            }
            m.set(i, j, x);
        }
    }
    Ok(m)
}

/// Asymptotic variances of the MLE and the denoised-Laplace estimator:
/// `1/v_ii + 1/v_2n,2n` at `p = 1`, for the `2n - 1` free coordinates.
pub fn mle_variances(theta: &Theta) -> Result<Vec<f64>> {
    let v = v_diagonal(theta, 1.0)?;
    let last = v[v.len() - 1];
    Ok(v[..v.len() - 1].iter().map(|x| 1.0 / x + 1.0 / last).collect())
}

/// `(2n - 1)` times the variance of one discrete Laplace draw at
/// `lambda = e^{-epsilon/2}`.
pub fn laplace_variance_s_n2(n: usize, epsilon: f64) -> Result<f64> {
    let budget = PrivacyBudget::new(epsilon)?;
    Ok((2 * n - 1) as f64 * discrete_laplace_variance(budget.laplace_scale()))
}

/// Asymptotic variances of the Laplace estimator that skips denoising:
/// the MLE variance plus `s_n^2 / v_2n,2n^2`.
pub fn nondenoised_laplace_variances(theta: &Theta, epsilon: f64) -> Result<Vec<f64>> {
    let s = laplace_variance_s_n2(theta.n(), epsilon)?;
    let last = v_completion(theta, 1.0)?;
    Ok(mle_variances(theta)?.into_iter().map(|x| x + s / (last * last)).collect())
}

/// Diagonal of the limiting covariance of the edge-flip estimator.
pub fn edge_flip_variances(theta: &Theta, epsilon: f64) -> Result<Vec<f64>> {
    let p = PrivacyBudget::new(epsilon)?.keep_probability();
    let m = asymptotic_covariance(theta, p, 2 * theta.n() - 1)?;
    Ok((0..m.rows()).map(|i| m.get(i, i)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub p: f64,
    /// Which parameter the quantities were evaluated at, e.g. "estimate".
    pub evaluated_at: String,
    pub v_diag: Vec<f64>,
    pub v_2n_2n: f64,
    pub sigma2: Vec<f64>,
    pub per_coordinate_variance: Vec<f64>,
    pub covariance_block: Vec<Vec<f64>>,
}

impl VarianceReport {
    pub fn compute(theta: &Theta, p: f64, k: usize, evaluated_at: &str) -> Result<Self> {
        let v = v_diagonal(theta, p)?;
        let sigma2 = sigma_squared(theta, p)?;
        let dim = 2 * theta.n() - 1;
        let full = asymptotic_covariance(theta, p, dim)?;
        let per_coordinate_variance = (0..dim).map(|i| full.get(i, i)).collect();
        let k = k.min(dim);
        let covariance_block = (0..k).map(|i| full.row(i)[..k].to_vec()).collect();
        Ok(VarianceReport {
            p,
            evaluated_at: evaluated_at.to_string(),
            v_2n_2n: v[2 * theta.n() - 1],
            v_diag: v,
            sigma2,
            per_coordinate_variance,
            covariance_block,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    /// `alpha_i - alpha_j`
    Xi,
    /// `alpha_i + beta_j`
    Zeta,
    /// `beta_i - beta_j`
    Eta,
}

impl StatKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatKind::Xi => "xi",
            StatKind::Zeta => "zeta",
            StatKind::Eta => "eta",
        }
    }
}

/// Studentized contrasts for zero-based index pairs, with `v` and
/// `sigma^2` evaluated at `eval_theta` (normally the estimate).
///
/// `beta_n` is pinned, so `eta` pairs and the `beta` index of `zeta` pairs
/// may refer to node `n - 1` only through its fixed zero.
pub fn standardized_stats(
    theta_hat: &Theta,
    theta_star: &Theta,
    eval_theta: &Theta,
    p: f64,
    pairs: &[(usize, usize)],
    kind: StatKind,
) -> Result<Vec<f64>> {
    let n = theta_hat.n();
    if theta_star.n() != n || eval_theta.n() != n {
        return Err(Error::domain("parameter vectors have different sizes"));
    }
    let v = v_diagonal(eval_theta, p)?;
    let s2 = sigma_squared(eval_theta, p)?;
    let var = |idx: usize| s2[idx] / (v[idx] * v[idx]);
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::domain(format!("pair ({i},{j}) out of range for n={n}")));
            }
            let (est, truth, denom) = match kind {
                StatKind::Xi => (
                    theta_hat.alpha[i] - theta_hat.alpha[j],
                    theta_star.alpha[i] - theta_star.alpha[j],
                    var(i) + var(j),
                ),
                StatKind::Zeta => (
                    theta_hat.alpha[i] + theta_hat.beta[j],
                    theta_star.alpha[i] + theta_star.beta[j],
                    var(i) + var(n + j),
                ),
                StatKind::Eta => (
                    theta_hat.beta[i] - theta_hat.beta[j],
                    theta_star.beta[i] - theta_star.beta[j],
                    var(n + i) + var(n + j),
                ),
            };
            if !(denom > 0.0) || !denom.is_finite() {
                return Err(Error::domain(format!("non-positive variance for pair ({i},{j})")));
            }
            Ok((est - truth) / denom.sqrt())
        })
        .collect()
}
