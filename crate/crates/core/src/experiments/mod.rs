//! Monte Carlo campaigns: distance tables, normality studies, variance
//! comparisons and the real-network pipeline.
//!
//! Every repetition draws from streams keyed by its cell coordinates, and
//! results are gathered in repetition order, so outputs are identical for
//! any worker count. The graph stream depends on `(n, L, rep)` only, so all
//! budgets and mechanisms in a cell see the same graph; the Laplace and
//! denoised-Laplace releases share one noise draw.

mod campaign;
mod config;
mod distance;
mod qq;
mod realdata;
mod variance;

pub use campaign::{config_sha256, run_simulation, Manifest};
pub use config::{Campaign, EpsilonSchedule, EpsilonSpec, LSchedule, LSpec, Mechanism, SimConfig};
pub use distance::{run_distance_table, DistanceCell, DistanceTable};
pub use qq::{
    default_pairs, ks_statistic_normal, qq_points, run_qq_study, statistics_for_fit, QqCell, QqFit, QqRecord,
    QqStudy, QqSummary,
};
pub use realdata::{
    out_degree_quantiles, run_realdata, run_realdata_on_graph, FilterMode, RealDataCell, RealDataOptions,
    RealDataReport, DATASET_ENV,
};
pub use variance::{run_variance_comparison, VarianceRow, VarianceTable};

use rand::Rng;

use crate::denoise::denoise_l1;
use crate::error::Result;
use crate::estimation::{solve_p0, FitResult, SolverOptions};
use crate::graph::{BiDegreeSequence, DirectedGraph};
use crate::model::{linear_parameters, sample_graph, Theta};
use crate::privacy::{edge_flip, laplace_release, PrivacyBudget};
use crate::seed::{stream_rng, tag};

/// A released sequence ready for estimation.
pub(crate) struct Released {
    /// Target handed to the solver.
    pub target: Vec<f64>,
    /// Keep probability the solver must debias with.
    pub p: f64,
    /// `||d - released||_inf`.
    pub distance: i64,
}

pub(crate) fn mechanism_tag(m: Mechanism) -> u64 {
    match m {
        Mechanism::Laplace | Mechanism::DenoisedLaplace => tag::LAPLACE,
        Mechanism::EdgeFlip => tag::EDGE_FLIP,
    }
}

/// Applies `mechanism` to `g` with randomness from `rng`.
pub(crate) fn release<R: Rng + ?Sized>(
    mechanism: Mechanism,
    g: &DirectedGraph,
    d: &BiDegreeSequence,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> Released {
    let di = d.to_integer();
    match mechanism {
        Mechanism::Laplace => {
            let z = laplace_release(d, budget, rng);
            Released { target: z.to_f64_vec(), p: 1.0, distance: di.linf_distance(&z) }
        }
        Mechanism::DenoisedLaplace => {
            let z = laplace_release(d, budget, rng);
            let de = denoise_l1(&z).sequence.to_integer();
            Released { target: de.to_f64_vec(), p: 1.0, distance: di.linf_distance(&de) }
        }
        Mechanism::EdgeFlip => {
            let flipped = edge_flip(g, budget, rng).bi_degree_sequence().to_integer();
            Released { target: flipped.to_f64_vec(), p: budget.keep_probability(), distance: di.linf_distance(&flipped) }
        }
    }
}

pub(crate) fn fit_released(r: &Released, options: &SolverOptions) -> Result<FitResult> {
    solve_p0(&r.target, r.p, options)
}

pub(crate) fn cell_graph(base_seed: u64, n: usize, l_index: usize, rep: usize, theta: &Theta) -> DirectedGraph {
    let mut rng = stream_rng(base_seed, &[tag::GRAPH, n as u64, l_index as u64, rep as u64]);
    sample_graph(theta, &mut rng)
}

pub(crate) fn cell_rng(
    base_seed: u64,
    mechanism: Mechanism,
    n: usize,
    eps_index: usize,
    l_index: usize,
    rep: usize,
) -> rand_chacha::ChaCha12Rng {
    stream_rng(
        base_seed,
        &[mechanism_tag(mechanism), n as u64, eps_index as u64, l_index as u64, rep as u64],
    )
}

pub(crate) fn design(n: usize, l: &LSpec) -> Result<Theta> {
    linear_parameters(n, l.value(n))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; NaN below two observations.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub(crate) fn std_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data (the common "type 7").
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median with linear interpolation between the two middle values.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, 0.5)
}

/// Formats a float for CSV; NaN becomes an empty field.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_helpers() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 1.0 / 3.0), 2.0);
        assert!(mean(&[]).is_nan());
        assert_eq!(fmt_f64(f64::NAN), "");
    }
}
