use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_released, fmt_f64, mean, mechanism_tag, quantile_sorted, release, Mechanism};
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, FitResult, SolverOptions};
use crate::graph::{load_edge_list, preprocess_single_pass, preprocess_subgraph, DirectedGraph, LoadedGraph};
use crate::privacy::PrivacyBudget;
use crate::seed::stream_rng;

/// Environment variable naming the real-network edge list.
pub const DATASET_ENV: &str = "P0DP_UCI_EDGES";

/// How the degree threshold is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Keep nodes whose degrees in the input graph exceed the thresholds.
    #[default]
    SinglePass,
    /// Prune until every kept node exceeds the thresholds in the kept subgraph.
    Iterated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataOptions {
    pub epsilons: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub min_out: i64,
    pub min_in: i64,
    pub filter: FilterMode,
    pub mechanisms: Vec<Mechanism>,
    pub solver: SolverOptions,
}

impl Default for RealDataOptions {
    fn default() -> Self {
        RealDataOptions {
            epsilons: vec![1.0, 2.0, 3.0],
            repetitions: 200,
            base_seed: 0,
            min_out: 5,
            min_in: 5,
            filter: FilterMode::SinglePass,
            mechanisms: Mechanism::ALL.to_vec(),
            solver: SolverOptions::default(),
        }
    }
}

/// Aggregates for one `(epsilon, mechanism)`. Errors average over
/// converged repetitions only; degree distances over all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataCell {
    pub epsilon: f64,
    pub mechanism: String,
    pub repetitions: usize,
    pub failures: usize,
    pub failure_pct: f64,
    pub mean_alpha_error: f64,
    pub mean_beta_error: f64,
    pub mean_degree_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataReport {
    pub nodes_ingested: usize,
    pub edges_ingested: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    pub nodes_nonzero_degree: usize,
    pub filter: FilterMode,
    pub nodes_after_filter: usize,
    pub edges_after_filter: usize,
    /// Node count the other filter mode would keep (`None` if it leaves fewer than two).
    pub nodes_other_filter: Option<usize>,
    /// Out-degree quantiles at 0, 1/4, 1/2, 3/4, 1 of the filtered graph.
    pub out_degree_quantiles: [f64; 5],
    pub in_degree_quantiles: [f64; 5],
    pub mle: FitResult,
    pub cells: Vec<RealDataCell>,
}

impl RealDataReport {
    pub const HEADER: &'static str =
        "epsilon,mechanism,repetitions,failures,failure_pct,mean_alpha_error,mean_beta_error,mean_degree_distance";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::HEADER);
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                c.epsilon,
                c.mechanism,
                c.repetitions,
                c.failures,
                c.failure_pct,
                fmt_f64(c.mean_alpha_error),
                fmt_f64(c.mean_beta_error),
                c.mean_degree_distance
            );
        }
        s
    }

    pub fn find(&self, epsilon: f64, mechanism: Mechanism) -> Option<&RealDataCell> {
        self.cells.iter().find(|c| c.epsilon == epsilon && c.mechanism == mechanism.as_str())
    }
}

/// Quantiles `(0, 1/4, 1/2, 3/4, 1)` of the out-degrees, linear interpolation.
pub fn out_degree_quantiles(g: &DirectedGraph) -> [f64; 5] {
    degree_quantiles(&g.bi_degree_sequence().out)
}

fn degree_quantiles(d: &[usize]) -> [f64; 5] {
    let mut v: Vec<f64> = d.iter().map(|&x| x as f64).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile_sorted(&v, q))
}

/// Reads the edge list at `path` and runs [`run_realdata_on_graph`].
pub fn run_realdata(path: &Path, options: &RealDataOptions) -> Result<RealDataReport> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!(
                "cannot read {}: {e}; download the UC Irvine online-community message network edge list \
                 and pass its path, or set {DATASET_ENV}",
                path.display()
            ),
        ))
    })?;
    run_realdata_on_graph(&load_edge_list(&text)?, options)
}

/// Ingests, filters, fits the MLE, then releases and refits for every
/// `(epsilon, repetition, mechanism)`.
pub fn run_realdata_on_graph(loaded: &LoadedGraph, options: &RealDataOptions) -> Result<RealDataReport> {
    if options.repetitions == 0 || options.epsilons.is_empty() || options.mechanisms.is_empty() {
        return Err(Error::domain("need at least one repetition, budget and mechanism"));
    }
    let g0 = &loaded.graph;
    let d0 = g0.bi_degree_sequence();
    let nonzero: Vec<usize> = (0..g0.n()).filter(|&i| d0.out[i] + d0.inn[i] > 0).collect();
    let g1 = g0.induced_subgraph(&nonzero)?;
    let single = preprocess_single_pass(&g1, options.min_out, options.min_in);
    let iterated = preprocess_subgraph(&g1, options.min_out, options.min_in);
    let (kept, other) = match options.filter {
        FilterMode::SinglePass => (single?, iterated.ok()),
        FilterMode::Iterated => (iterated?, single.ok()),
    };
    let g = kept.graph;
    let d = g.bi_degree_sequence();
    let mle = fit_mle(&d, &options.solver)?;
    if !mle.converged {
        return Err(Error::domain(format!(
            "the MLE does not exist on the filtered graph ({} nodes): {}",
            g.n(),
            mle.failure_reason.as_str()
        )));
    }

    let mut cells = Vec::new();
    for (ei, &eps) in options.epsilons.iter().enumerate() {
        let budget = PrivacyBudget::new(eps)?;
        for &m in &options.mechanisms {
            let reps: Vec<(i64, Option<(f64, f64)>)> = (0..options.repetitions)
                .into_par_iter()
                .map(|rep| -> Result<(i64, Option<(f64, f64)>)> {
                    let mut rng = stream_rng(options.base_seed, &[mechanism_tag(m), ei as u64, rep as u64]);
                    let r = release(m, &g, &d, &budget, &mut rng);
                    let fit = fit_released(&r, &options.solver)?;
                    let err = fit.converged.then(|| {
                        (linf(&fit.theta_hat.alpha, &mle.theta_hat.alpha), linf(&fit.theta_hat.beta, &mle.theta_hat.beta))
                    });
                    Ok((r.distance, err))
                })
                .collect::<Result<_>>()?;
            let ok: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.1).collect();
            let failures = reps.len() - ok.len();
            let dist: Vec<f64> = reps.iter().map(|r| r.0 as f64).collect();
            cells.push(RealDataCell {
                epsilon: eps,
                mechanism: m.as_str().to_string(),
                repetitions: reps.len(),
                failures,
                failure_pct: 100.0 * failures as f64 / reps.len() as f64,
                mean_alpha_error: mean(&ok.iter().map(|e| e.0).collect::<Vec<_>>()),
                mean_beta_error: mean(&ok.iter().map(|e| e.1).collect::<Vec<_>>()),
                mean_degree_distance: mean(&dist),
            });
        }
    }

    Ok(RealDataReport {
        nodes_ingested: g0.n(),
        edges_ingested: g0.edge_count(),
        self_loops_dropped: loaded.self_loops_dropped,
        duplicates_collapsed: loaded.duplicates_collapsed,
        nodes_nonzero_degree: nonzero.len(),
        filter: options.filter,
        nodes_after_filter: g.n(),
        edges_after_filter: g.edge_count(),
        nodes_other_filter: other.map(|s| s.graph.n()),
        out_degree_quantiles: degree_quantiles(&d.out),
        in_degree_quantiles: degree_quantiles(&d.inn),
        mle,
        cells,
    })
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_use_linear_interpolation() {
        assert_eq!(degree_quantiles(&[1, 2, 3, 4, 5]), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(degree_quantiles(&[0, 10]), [0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn missing_file_mentions_hint() {
        let err = run_realdata(Path::new("/nonexistent/edges.txt"), &RealDataOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        assert!(err.to_string().contains(DATASET_ENV));
    }
}
