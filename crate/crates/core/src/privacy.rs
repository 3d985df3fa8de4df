//! Release mechanisms for directed graphs and their bi-degree sequences.
//!
//! Input perturbation flips adjacency bits before anything leaves the data
//! owner (edge flipping, or joint flipping of each dyad). Output
//! perturbation adds discrete Laplace noise to the exact bi-degree
//! sequence held by a trusted curator.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BiDegreeSequence, DirectedGraph, IntegerBiSequence};

/// L1 sensitivity of the bi-degree sequence to one edge: toggling `i -> j`
/// moves `d_i^+` and `d_j^-` by one each.
pub const BI_DEGREE_SENSITIVITY: f64 = 2.0;

/// A privacy budget `epsilon` with the mechanism parameters it implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::domain(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Probability of keeping an adjacency bit, `p = 1 / (1 + e^{-epsilon})`.
    pub fn keep_probability(&self) -> f64 {
        1.0 / (1.0 + (-self.epsilon).exp())
    }

    /// Probability of inverting an adjacency bit, `1 - p`, computed without
    /// cancellation.
    pub fn flip_probability(&self) -> f64 {
        let e = (-self.epsilon).exp();
        e / (1.0 + e)
    }

    /// Discrete Laplace scale for releasing a bi-degree sequence:
    /// `epsilon = -sensitivity * log(lambda)`, i.e. `lambda = e^{-epsilon/2}`.
    pub fn laplace_scale(&self) -> f64 {
        (-self.epsilon / BI_DEGREE_SENSITIVITY).exp()
    }
}

/// `P(output bit | input bit)` for independent edge flipping.
pub fn flip_transition_probability(budget: &PrivacyBudget, input: bool, output: bool) -> f64 {
    if input == output {
        budget.keep_probability()
    } else {
        budget.flip_probability()
    }
}

/// Worst-case likelihood ratio of one released bit under two different
/// inputs, `max{1, p/(1-p), (1-p)/p}`.
pub fn edge_flip_privacy_ratio(budget: &PrivacyBudget) -> f64 {
    let mut worst: f64 = 1.0;
    for out in [false, true] {
        for a in [false, true] {
            for b in [false, true] {
                worst = worst.max(
                    flip_transition_probability(budget, a, out) / flip_transition_probability(budget, b, out),
                );
            }
        }
    }
    worst
}

/// Keeps every off-diagonal adjacency bit with probability `p` and inverts
/// it otherwise, independently across ordered pairs.
pub fn edge_flip<R: Rng + ?Sized>(g: &DirectedGraph, budget: &PrivacyBudget, rng: &mut R) -> DirectedGraph {
    let q = budget.flip_probability();
    let mut out = g.clone();
    let n = g.n();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(q) {
                out.set_edge(i, j, !g.has_edge(i, j));
            }
        }
    }
    out
}

/// Dyad transition probabilities `(gamma1, gamma2, gamma3)`: keep both bits,
/// change exactly one given bit, change both. Requires
/// `gamma1 + 2 gamma2 + gamma3 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseFlipSpec {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl PairwiseFlipSpec {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        let spec = Self { gamma1, gamma2, gamma3 };
        spec.validate()?;
        Ok(spec)
    }

    /// The product law of two independent edge flips with keep probability `p`.
    pub fn independent(p: f64) -> Result<Self> {
        Self::new(p * p, p * (1.0 - p), (1.0 - p) * (1.0 - p))
    }

    pub fn validate(&self) -> Result<()> {
        let g = [self.gamma1, self.gamma2, self.gamma3];
        if g.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain(format!("gammas must be nonnegative, got {g:?}")));
        }
        let total = self.gamma1 + 2.0 * self.gamma2 + self.gamma3;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("gamma1 + 2 gamma2 + gamma3 = {total}, expected 1")));
        }
        Ok(())
    }

    /// Transition matrix over dyad states `00, 01, 10, 11` (bit order
    /// `(a_ij, a_ji)`); rows are inputs, columns outputs.
    pub fn transition_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (from, row) in m.iter_mut().enumerate() {
            for (to, cell) in row.iter_mut().enumerate() {
                *cell = match (from ^ to).count_ones() {
                    0 => self.gamma1,
                    1 => self.gamma2,
                    _ => self.gamma3,
                };
            }
        }
        m
    }
}

/// Perturbs every dyad `(a_ij, a_ji)`, `i < j`, jointly and independently of
/// other dyads according to `spec`.
pub fn pairwise_edge_flip<R: Rng + ?Sized>(
    g: &DirectedGraph,
    spec: &PairwiseFlipSpec,
    rng: &mut R,
) -> Result<DirectedGraph> {
    spec.validate()?;
    let mut out = g.clone();
    let n = g.n();
    let c1 = spec.gamma1;
    let c2 = c1 + spec.gamma2;
    let c3 = c2 + spec.gamma2;
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            let (flip_ij, flip_ji) = if u < c1 {
                (false, false)
            } else if u < c2 {
                (true, false)
            } else if u < c3 {
                (false, true)
            } else {
                (true, true)
            };
            if flip_ij {
                out.set_edge(i, j, !g.has_edge(i, j));
            }
            if flip_ji {
                out.set_edge(j, i, !g.has_edge(j, i));
            }
        }
    }
    Ok(out)
}

/// Sufficient condition for `epsilon`-weak edge LDP of a pairwise flip:
/// each of `gamma1/gamma2`, `gamma1/gamma3`, `gamma2/gamma3` lies in
/// `[e^{-epsilon}, e^{epsilon}]`. A zero denominator with a nonzero
/// numerator fails; two zeros are treated as equal.
pub fn verify_pairwise_ldp(spec: &PairwiseFlipSpec, epsilon: f64) -> bool {
    if spec.validate().is_err() || !(epsilon >= 0.0) {
        return false;
    }
    let bound = epsilon.exp() * (1.0 + 1e-12);
    let within = |a: f64, b: f64| a <= bound * b && b <= bound * a;
    within(spec.gamma1, spec.gamma2) && within(spec.gamma1, spec.gamma3) && within(spec.gamma2, spec.gamma3)
}

/// Draws from `P(X = x) = (1 - lambda)/(1 + lambda) lambda^{|x|}` as the
/// difference of two independent geometric variables.
pub fn discrete_laplace_sample<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<i64> {
    let geom = geometric_for(lambda)?;
    Ok(draw_difference(&geom, rng))
}

fn geometric_for(lambda: f64) -> Result<Geometric> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    Geometric::new(1.0 - lambda).map_err(|e| Error::domain(format!("geometric law: {e}")))
}

#[inline]
fn draw_difference<R: Rng + ?Sized>(geom: &Geometric, rng: &mut R) -> i64 {
    geom.sample(rng) as i64 - geom.sample(rng) as i64
}

/// Probability mass of the discrete Laplace law.
pub fn discrete_laplace_pmf(lambda: f64, x: i64) -> f64 {
    (1.0 - lambda) / (1.0 + lambda) * lambda.powi(x.unsigned_abs().min(i32::MAX as u64) as i32)
}

/// Variance of the discrete Laplace law, `2 lambda / (1 - lambda)^2`.
pub fn discrete_laplace_variance(lambda: f64) -> f64 {
    2.0 * lambda / ((1.0 - lambda) * (1.0 - lambda))
}

/// Adds independent discrete Laplace noise with `lambda = e^{-epsilon/2}`
/// to each of the `2n` degrees.
pub fn laplace_release<R: Rng + ?Sized>(
    d: &BiDegreeSequence,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> IntegerBiSequence {
    let geom = geometric_for(budget.laplace_scale()).expect("a positive budget gives lambda in (0, 1)");
    let values = d
        .out
        .iter()
        .chain(&d.inn)
        .map(|&v| v as i64 + draw_difference(&geom, rng))
        .collect();
    IntegerBiSequence { values }
}

/// Total budget of sequentially composed mechanisms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComposedBudget {
    pub epsilon: f64,
    /// Set when no budgets were supplied.
    pub empty: bool,
}

pub fn compose_budgets(budgets: &[f64]) -> Result<ComposedBudget> {
    if let Some(bad) = budgets.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::domain(format!("budgets must be positive, got {bad}")));
    }
    Ok(ComposedBudget { epsilon: budgets.iter().sum(), empty: budgets.is_empty() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{logistic, sample_graph, Theta};
    use crate::seed::stream_rng;

    #[test]
    fn budget_invariants() {
        for eps in [0.01, 0.5, 1.0, 2.0, 10.0] {
            let b = PrivacyBudget::new(eps).unwrap();
            let p = b.keep_probability();
            assert!(p > 0.5 && p < 1.0);
            let l = b.laplace_scale();
            assert!(l > 0.0 && l < 1.0);
            assert!((p + b.flip_probability() - 1.0).abs() < 1e-15);
        }
        assert!(PrivacyBudget::new(0.0).is_err());
        assert!(PrivacyBudget::new(-1.0).is_err());
        assert!(PrivacyBudget::new(f64::NAN).is_err());
    }

    #[test]
    fn flip_ratio_is_exactly_e_to_epsilon() {
        for eps in [0.5, 1.0, 2.0, 3.0] {
            let b = PrivacyBudget::new(eps).unwrap();
            let ratio = edge_flip_privacy_ratio(&b);
            assert!((ratio - eps.exp()).abs() <= 4.0 * f64::EPSILON * eps.exp());
            let keep = flip_transition_probability(&b, true, true);
            let flip = flip_transition_probability(&b, false, true);
            assert!((keep / flip - eps.exp()).abs() <= 4.0 * f64::EPSILON * eps.exp());
        }
    }

    #[test]
    fn half_probability_hides_the_input() {
        // epsilon -> 0 gives p -> 1/2; both conditional laws of the output
        // converge to Bernoulli(1/2).
        let b = PrivacyBudget::new(1e-12).unwrap();
        let a = flip_transition_probability(&b, false, true);
        let c = flip_transition_probability(&b, true, true);
        assert!((a - 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_budget_flip_is_identity() {
        let t = Theta::zeros(40);
        let g = sample_graph(&t, &mut stream_rng(1, &[]));
        let b = PrivacyBudget::new(50.0).unwrap();
        for seed in 0..5 {
            assert_eq!(edge_flip(&g, &b, &mut stream_rng(seed, &[2])), g);
        }
    }

    #[test]
    fn flipped_degree_means() {
        let n = 100;
        let reps = 200;
        let b = PrivacyBudget::new(2.0).unwrap();
        let p = b.keep_probability();
        let t = Theta::zeros(n);
        let mut sums = vec![0.0; n];
        for r in 0..reps {
            let g = sample_graph(&t, &mut stream_rng(3, &[r]));
            let f = edge_flip(&g, &b, &mut stream_rng(4, &[r]));
            for (s, d) in sums.iter_mut().zip(f.bi_degree_sequence().out) {
                *s += d as f64;
            }
        }
        let m = (n - 1) as f64;
        let expected = (1.0 - p) * m + (2.0 * p - 1.0) * m / 2.0;
        // Each flipped bit is Bernoulli(1/2) here.
        let se = (m * 0.25 / reps as f64).sqrt();
        let outside = sums.iter().filter(|s| (*s / reps as f64 - expected).abs() > 3.0 * se).count();
        // Under the null about 0.27% of nodes fall outside 3 se.
        assert!(outside <= 3, "{outside} nodes outside the band");
    }

    #[test]
    fn flipped_edge_variance_closed_form() {
        // Var(a') = [pP + 1 - p][(1 - p)P + p] / (1 + e^x)^2 in odds form,
        // i.e. P'(1 - P') with P' = pP + (1 - p)(1 - P).
        let b = PrivacyBudget::new(1.0).unwrap();
        let p = b.keep_probability();
        let x = 0.8f64;
        let big_p = logistic(x);
        let pp = p * big_p + (1.0 - p) * (1.0 - big_p);
        let odds_form = (p * x.exp() + 1.0 - p) * ((1.0 - p) * x.exp() + p) / (1.0 + x.exp()).powi(2);
        assert!((pp * (1.0 - pp) - odds_form).abs() < 1e-14);
        assert!(odds_form >= big_p * (1.0 - big_p));

        let t = Theta::new(vec![x, 0.0], vec![0.0, 0.0]).unwrap();
        let reps = 200_000u64;
        let mut hits = 0u64;
        let mut rng = stream_rng(8, &[]);
        for _ in 0..reps {
            let g = sample_graph(&t, &mut rng);
            let f = edge_flip(&g, &b, &mut rng);
            hits += f.has_edge(0, 1) as u64;
        }
        let freq = hits as f64 / reps as f64;
        let se = (pp * (1.0 - pp) / reps as f64).sqrt();
        assert!((freq - pp).abs() < 3.5 * se, "freq {freq} vs {pp}");
    }

    #[test]
    fn pairwise_identity_and_uniform() {
        let t = Theta::zeros(30);
        let g = sample_graph(&t, &mut stream_rng(1, &[]));
        let id = PairwiseFlipSpec::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(pairwise_edge_flip(&g, &id, &mut stream_rng(2, &[])).unwrap(), g);

        let uni = PairwiseFlipSpec::new(0.25, 0.25, 0.25).unwrap();
        let dyad = dyad_frequencies(true, false, &uni, 100_000, 5);
        for f in dyad {
            let se = (0.25 * 0.75 / 100_000f64).sqrt();
            assert!((f - 0.25).abs() < 4.0 * se);
        }
    }

    fn dyad_frequencies(a01: bool, a10: bool, spec: &PairwiseFlipSpec, reps: u64, seed: u64) -> [f64; 4] {
        let mut edges = vec![];
        if a01 {
            edges.push((0, 1));
        }
        if a10 {
            edges.push((1, 0));
        }
        let g = DirectedGraph::from_edges(2, edges).unwrap();
        let mut counts = [0u64; 4];
        let mut rng = stream_rng(seed, &[]);
        for _ in 0..reps {
            let f = pairwise_edge_flip(&g, spec, &mut rng).unwrap();
            counts[(f.has_edge(0, 1) as usize) << 1 | f.has_edge(1, 0) as usize] += 1;
        }
        counts.map(|c| c as f64 / reps as f64)
    }

    #[test]
    fn pairwise_product_law_matches_independent_flips() {
        let b = PrivacyBudget::new(1.0).unwrap();
        let p = b.keep_probability();
        let spec = PairwiseFlipSpec::independent(p).unwrap();
        let reps = 100_000;
        for (a01, a10) in [(false, false), (true, false), (true, true)] {
            let freq = dyad_frequencies(a01, a10, &spec, reps, 11);
            for (state, f) in freq.iter().enumerate() {
                let out01 = state >> 1 == 1;
                let out10 = state & 1 == 1;
                let want = flip_transition_probability(&b, a01, out01) * flip_transition_probability(&b, a10, out10);
                let se = (want * (1.0 - want) / reps as f64).sqrt();
                assert!((f - want).abs() < 4.0 * se, "state {state}: {f} vs {want}");
            }
        }
    }

    #[test]
    fn pairwise_marginals_are_single_edge_flips() {
        let p = 0.8;
        let m = PairwiseFlipSpec::independent(p).unwrap().transition_matrix();
        for (from, row) in m.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            // First coordinate kept: states with the same high bit.
            let keep_first: f64 = (0..4).filter(|to| (to ^ from) & 2 == 0).map(|to| row[to]).sum();
            let keep_second: f64 = (0..4).filter(|to| (to ^ from) & 1 == 0).map(|to| row[to]).sum();
            assert!((keep_first - p).abs() < 1e-15);
            assert!((keep_second - p).abs() < 1e-15);
        }
    }

    #[test]
    fn pairwise_spec_validation() {
        assert!(PairwiseFlipSpec::new(0.5, 0.2, 0.2).is_err());
        assert!(PairwiseFlipSpec::new(1.1, -0.05, 0.0).is_err());
        let bad = PairwiseFlipSpec { gamma1: 0.9, gamma2: 0.1, gamma3: 0.1 };
        let g = DirectedGraph::empty(3).unwrap();
        assert!(pairwise_edge_flip(&g, &bad, &mut stream_rng(0, &[])).is_err());
    }

    #[test]
    fn pairwise_ldp_checker() {
        let uni = PairwiseFlipSpec::new(0.25, 0.25, 0.25).unwrap();
        assert!(verify_pairwise_ldp(&uni, 0.0));
        assert!(verify_pairwise_ldp(&uni, 3.0));
        let s = PairwiseFlipSpec::new(0.4, 0.25, 0.1).unwrap();
        assert!(verify_pairwise_ldp(&s, 4f64.ln()));
        assert!(!verify_pairwise_ldp(&s, 1.0));
        let s = PairwiseFlipSpec::new(0.7, 0.1, 0.1).unwrap();
        assert!(!verify_pairwise_ldp(&s, 1.0));
        let id = PairwiseFlipSpec::new(1.0, 0.0, 0.0).unwrap();
        assert!(!verify_pairwise_ldp(&id, 100.0));
    }

    #[test]
    fn independent_flips_cost_twice_the_budget_per_dyad() {
        let b = PrivacyBudget::new(1.0).unwrap();
        let spec = PairwiseFlipSpec::independent(b.keep_probability()).unwrap();
        assert!(!verify_pairwise_ldp(&spec, 1.0));
        assert!(verify_pairwise_ldp(&spec, 2.0));
    }

    #[test]
    fn discrete_laplace_rejects_bad_scale() {
        let mut rng = stream_rng(0, &[]);
        for l in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(discrete_laplace_sample(l, &mut rng).is_err());
        }
    }

    #[test]
    fn discrete_laplace_moments() {
        let lambda = (-1.0f64).exp();
        let reps = 1_000_000;
        let mut rng = stream_rng(17, &[]);
        let (mut zeros, mut sum, mut sum2) = (0u64, 0f64, 0f64);
        for _ in 0..reps {
            let x = discrete_laplace_sample(lambda, &mut rng).unwrap();
            zeros += (x == 0) as u64;
            sum += x as f64;
            sum2 += (x * x) as f64;
        }
        let p0 = discrete_laplace_pmf(lambda, 0);
        assert!((p0 - 0.46212).abs() < 1e-5);
        let f0 = zeros as f64 / reps as f64;
        assert!((f0 - p0).abs() < 3.0 * (p0 * (1.0 - p0) / reps as f64).sqrt());
        let var = discrete_laplace_variance(lambda);
        let mean = sum / reps as f64;
        assert!(mean.abs() < 3.0 * (var / reps as f64).sqrt());
        let emp_var = sum2 / reps as f64 - mean * mean;
        // Fourth moment of the law gives the standard error of the variance.
        let m4: f64 = (-200..=200).map(|x: i64| discrete_laplace_pmf(lambda, x) * (x as f64).powi(4)).sum();
        let se = ((m4 - var * var) / reps as f64).sqrt();
        assert!((emp_var - var).abs() < 3.0 * se, "{emp_var} vs {var}");
    }

    #[test]
    fn laplace_release_degenerates_at_large_budget() {
        let t = Theta::zeros(50);
        let d = sample_graph(&t, &mut stream_rng(1, &[])).bi_degree_sequence();
        let b = PrivacyBudget::new(80.0).unwrap();
        let z = laplace_release(&d, &b, &mut stream_rng(2, &[]));
        assert_eq!(z, d.to_integer());
    }

    #[test]
    fn laplace_noise_is_uncorrelated_across_coordinates() {
        let d = BiDegreeSequence::new(vec![3, 1], vec![2, 2]).unwrap();
        let b = PrivacyBudget::new(2.0).unwrap();
        let reps = 100_000;
        let mut rng = stream_rng(23, &[]);
        let base = d.to_integer();
        let mut xs = vec![Vec::new(); 4];
        for _ in 0..reps {
            let z = laplace_release(&d, &b, &mut rng);
            for k in 0..4 {
                xs[k].push((z.values[k] - base.values[k]) as f64);
            }
        }
        let corr = |a: &[f64], b: &[f64]| {
            let n = a.len() as f64;
            let ma = a.iter().sum::<f64>() / n;
            let mb = b.iter().sum::<f64>() / n;
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
            let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
            cov / (va * vb).sqrt()
        };
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!(corr(&xs[i], &xs[j]).abs() < 0.01);
            }
        }
    }

    #[test]
    fn composition() {
        assert_eq!(compose_budgets(&[1.0, 2.0]).unwrap().epsilon, 3.0);
        let empty = compose_budgets(&[]).unwrap();
        assert_eq!(empty.epsilon, 0.0);
        assert!(empty.empty);
        assert_eq!(compose_budgets(&[0.5; 4]).unwrap().epsilon, 2.0);
        assert!(compose_budgets(&[1.0, 0.0]).is_err());
    }
}
