//! The p0 model: independent edges with logit `alpha_i + beta_j`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Degree parameters of the p0 model.
///
/// `alpha` are the outgoingness and `beta` the incomingness parameters.
/// The model is invariant under `(alpha + c, beta - c)`, so `beta[n-1]` is
/// pinned to zero; it is stored so that indices line up with node labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Theta {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let theta = Self { alpha, beta };
        theta.validate()?;
        Ok(theta)
    }

    pub fn zeros(n: usize) -> Self {
        Self { alpha: vec![0.0; n], beta: vec![0.0; n] }
    }

    /// Builds a theta from the `2n - 1` free coordinates
    /// `(alpha_1..alpha_n, beta_1..beta_{n-1})`.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        if free.len() < 3 || free.len().is_multiple_of(2) {
            return Err(Error::domain(format!("{} is not a valid free-parameter length", free.len())));
        }
        let n = free.len().div_ceil(2);
        let mut beta = free[n..].to_vec();
        beta.push(0.0);
        Self::new(free[..n].to_vec(), beta)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.len();
        if n < 2 || self.beta.len() != n {
            return Err(Error::domain(format!(
                "theta needs equal alpha/beta lengths >= 2, got {} and {}",
                n,
                self.beta.len()
            )));
        }
        if self.beta[n - 1] != 0.0 {
            return Err(Error::domain("the last beta must be pinned to 0"));
        }
        if self.alpha.iter().chain(&self.beta).any(|x| !x.is_finite()) {
            return Err(Error::domain("theta has non-finite entries"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// The free coordinates `(alpha, beta_1..beta_{n-1})`.
    pub fn free(&self) -> Vec<f64> {
        let n = self.n();
        self.alpha.iter().chain(&self.beta[..n - 1]).copied().collect()
    }

    /// `max |theta_k|` over all stored coordinates.
    pub fn sup_norm(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn linf_distance(&self, other: &Theta) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .chain(self.beta.iter().zip(&other.beta))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The logistic function `e^x / (1 + e^x)` without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `P(a_ij = 1) = e^{alpha_i + beta_j} / (1 + e^{alpha_i + beta_j})`.
pub fn edge_probability(theta: &Theta, i: usize, j: usize) -> Result<f64> {
    let n = theta.n();
    if i == j {
        return Err(Error::domain(format!("no self-loop probability (i = j = {i})")));
    }
    if i >= n || j >= n {
        return Err(Error::domain(format!("node index out of range for n={n}")));
    }
    Ok(logistic(theta.alpha[i] + theta.beta[j]))
}

/// Draws a graph with independent Bernoulli edges.
pub fn sample_graph<R: Rng + ?Sized>(theta: &Theta, rng: &mut R) -> DirectedGraph {
    let n = theta.n();
    DirectedGraph::from_fn(n, |i, j| rng.random::<f64>() < logistic(theta.alpha[i] + theta.beta[j]))
        .expect("theta has at least two nodes")
}

/// Expected out-degrees followed by expected in-degrees.
pub fn expected_degrees(theta: &Theta) -> Vec<f64> {
    let n = theta.n();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let p = logistic(theta.alpha[i] + theta.beta[j]);
                out[i] += p;
                out[n + j] += p;
            }
        }
    }
    out
}

/// `sum_i alpha_i d_i^+ + sum_j beta_j d_j^- - sum_{i != j} log(1 + e^{alpha_i + beta_j})`.
pub fn log_likelihood(theta: &Theta, g: &DirectedGraph) -> Result<f64> {
    let n = theta.n();
    if g.n() != n {
        return Err(Error::domain(format!("theta has n={n} but graph has n={}", g.n())));
    }
    let d = g.bi_degree_sequence();
    let linear: f64 = (0..n)
        .map(|i| theta.alpha[i] * d.out[i] as f64 + theta.beta[i] * d.inn[i] as f64)
        .sum();
    Ok(linear - log_normalizer(theta))
}

/// `log c(alpha, beta) = sum_{i != j} log(1 + e^{alpha_i + beta_j})`.
pub fn log_normalizer(theta: &Theta) -> f64 {
    let n = theta.n();
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c += softplus(theta.alpha[i] + theta.beta[j]);
            }
        }
    }
    c
}

/// Linear simulation design: `alpha_{i+1} = (n-1-i) L / (n-1)` for
/// `i = 0..n`, `beta_i = alpha_i` for `i < n` and `beta_n = 0`.
pub fn linear_parameters(n: usize, l: f64) -> Result<Theta> {
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::domain(format!("L must be a finite nonnegative number, got {l}")));
    }
    let alpha: Vec<f64> = (0..n).map(|i| l * ((n - 1 - i) as f64 / (n - 1) as f64)).collect();
    let mut beta = alpha.clone();
    beta[n - 1] = 0.0;
    Theta::new(alpha, beta)
}
