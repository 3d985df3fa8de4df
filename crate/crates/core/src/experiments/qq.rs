use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{cell_graph, cell_rng, design, fit_released, fmt_f64, mean, release, sample_variance, SimConfig};
use crate::error::Result;
use crate::estimation::{standardized_stats, FailureReason, SolverOptions, StatKind};
use crate::model::Theta;
use crate::privacy::PrivacyBudget;

/// A repetition's fit record and its `(kind, pair_i, pair_j, value)` statistics.
type RepOutcome = (QqFit, Vec<(StatKind, usize, usize, f64)>);

const KINDS: [StatKind; 3] = [StatKind::Xi, StatKind::Zeta, StatKind::Eta];

/// Zero-based versions of the pairs `(1,2)`, `(n/2, n/2+1)`, `(n-1, n)`.
pub fn default_pairs(n: usize) -> Vec<(usize, usize)> {
    let mid = (n / 2).max(1);
    vec![(0, 1), (mid - 1, mid), (n - 2, n - 1)]
}

/// One standardized statistic. Pair indices are one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqRecord {
    pub rep: usize,
    pub pair_i: usize,
    pub pair_j: usize,
    pub kind: StatKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqFit {
    pub rep: usize,
    pub converged: bool,
    pub failure_reason: FailureReason,
    pub iterations: usize,
    pub residual_inf: f64,
}

/// Moments and Kolmogorov–Smirnov distance to N(0, 1) of one statistic
/// over the converged repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqSummary {
    pub kind: StatKind,
    pub pair_i: usize,
    pub pair_j: usize,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqCell {
    pub n: usize,
    pub epsilon_spec: String,
    pub epsilon: f64,
    pub l_spec: String,
    pub l: f64,
    pub mechanism: String,
    pub repetitions: usize,
    pub failures: usize,
    pub fits: Vec<QqFit>,
    pub records: Vec<QqRecord>,
    pub summaries: Vec<QqSummary>,
    /// Set when no repetition produced an estimate.
    pub note: Option<String>,
}

impl QqCell {
    pub fn file_stem(&self) -> String {
        format!("qq_n{}_eps{}_l{}_{}", self.n, self.epsilon_spec, self.l_spec, self.mechanism)
    }

    pub fn records_csv(&self) -> String {
        let mut s = String::from("rep,pair_i,pair_j,kind,value\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{}", r.rep, r.pair_i, r.pair_j, r.kind.as_str(), r.value);
        }
        s
    }

    /// Theoretical normal quantiles against sorted empirical values.
    pub fn quantiles_csv(&self) -> String {
        let mut s = String::from("kind,pair_i,pair_j,prob,theoretical,empirical\n");
        for (kind, i, j, values) in self.grouped() {
            for (prob, th, em) in qq_points(&values) {
                let _ = writeln!(s, "{},{i},{j},{prob},{th},{em}", kind.as_str());
            }
        }
        s
    }

    pub fn summary(&self, kind: StatKind, pair_i: usize, pair_j: usize) -> Option<&QqSummary> {
        self.summaries.iter().find(|s| s.kind == kind && s.pair_i == pair_i && s.pair_j == pair_j)
    }

    fn grouped(&self) -> Vec<(StatKind, usize, usize, Vec<f64>)> {
        let mut map: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            let k = KINDS.iter().position(|&k| k == r.kind).expect("known kind");
            map.entry((k, r.pair_i, r.pair_j)).or_default().push(r.value);
        }
        map.into_iter().map(|((k, i, j), v)| (KINDS[k], i, j, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QqStudy {
    pub cells: Vec<QqCell>,
}

impl QqStudy {
    pub fn fits_csv(&self) -> String {
        let mut s = String::from("n,epsilon_spec,l_spec,mechanism,rep,converged,failure_reason,iterations,residual_inf\n");
        for c in &self.cells {
            for f in &c.fits {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    c.n,
                    c.epsilon_spec,
                    c.l_spec,
                    c.mechanism,
                    f.rep,
                    f.converged,
                    f.failure_reason.as_str(),
                    f.iterations,
                    fmt_f64(f.residual_inf)
                );
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "n,epsilon_spec,l_spec,mechanism,kind,pair_i,pair_j,count,failures,mean,variance,ks,note\n",
        );
        for c in &self.cells {
            let note = c.note.clone().unwrap_or_default();
            if c.summaries.is_empty() {
                let _ = writeln!(s, "{},{},{},{},,,,0,{},,,,{note}", c.n, c.epsilon_spec, c.l_spec, c.mechanism, c.failures);
            }
            for q in &c.summaries {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{note}",
                    c.n,
                    c.epsilon_spec,
                    c.l_spec,
                    c.mechanism,
                    q.kind.as_str(),
                    q.pair_i,
                    q.pair_j,
                    q.count,
                    c.failures,
                    fmt_f64(q.mean),
                    fmt_f64(q.variance),
                    fmt_f64(q.ks)
                );
            }
        }
        s
    }

    pub fn find(&self, n: usize, epsilon_spec: &str, l_spec: &str, mechanism: &str) -> Option<&QqCell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.epsilon_spec == epsilon_spec && c.l_spec == l_spec && c.mechanism == mechanism)
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical law of
/// `values` and N(0, 1).
pub fn ks_statistic_normal(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() as f64;
    let norm = standard_normal();
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = norm.cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// `(prob, normal quantile, empirical quantile)` at plotting positions
/// `(i - 1/2)/m`.
pub fn qq_points(values: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() as f64;
    let norm = standard_normal();
    v.into_iter()
        .enumerate()
        .map(|(i, x)| {
            let prob = (i as f64 + 0.5) / m;
            (prob, norm.inverse_cdf(prob), x)
        })
        .collect()
}

/// All three statistics for each zero-based pair, as
/// `(kind, pair_i, pair_j, value)` with one-based pair indices.
pub fn statistics_for_fit(
    theta_hat: &Theta,
    theta_star: &Theta,
    p: f64,
    pairs: &[(usize, usize)],
) -> Result<Vec<(StatKind, usize, usize, f64)>> {
    let mut out = Vec::with_capacity(3 * pairs.len());
    for kind in KINDS {
        let vals = standardized_stats(theta_hat, theta_star, theta_hat, p, pairs, kind)?;
        for (&(i, j), v) in pairs.iter().zip(vals) {
            out.push((kind, i + 1, j + 1, v));
        }
    }
    Ok(out)
}

/// Fits every repetition of every cell and standardizes the estimates.
/// `pairs` defaults to [`default_pairs`]. Variances are evaluated at the
/// estimate; Laplace-based estimators use keep probability 1.
pub fn run_qq_study(cfg: &SimConfig, pairs: Option<&[(usize, usize)]>, options: &SolverOptions) -> Result<QqStudy> {
    cfg.validate()?;
    let mut study = QqStudy::default();
    for &n in &cfg.n_values {
        let pairs: Vec<(usize, usize)> = pairs.map(<[_]>::to_vec).unwrap_or_else(|| default_pairs(n));
        for (li, l) in cfg.l_spec.iter().enumerate() {
            let theta = design(n, l)?;
            for (ei, eps) in cfg.epsilon_spec.iter().enumerate() {
                let budget = PrivacyBudget::new(eps.value(n))?;
                for &m in &cfg.mechanisms {
                    let reps: Vec<RepOutcome> = (0..cfg.repetitions)
                        .into_par_iter()
                        .map(|rep| -> Result<RepOutcome> {
                            let g = cell_graph(cfg.base_seed, n, li, rep, &theta);
                            let d = g.bi_degree_sequence();
                            let mut rng = cell_rng(cfg.base_seed, m, n, ei, li, rep);
                            let r = release(m, &g, &d, &budget, &mut rng);
                            let fit = fit_released(&r, options)?;
                            let stats = if fit.converged {
                                statistics_for_fit(&fit.theta_hat, &theta, r.p, &pairs)?
                            } else {
                                Vec::new()
                            };
                            let record = QqFit {
                                rep,
                                converged: fit.converged,
                                failure_reason: fit.failure_reason,
                                iterations: fit.iterations,
                                residual_inf: fit.residual_inf,
                            };
                            Ok((record, stats))
                        })
                        .collect::<Result<_>>()?;
                    study.cells.push(assemble_cell(n, eps.label(), budget.epsilon(), l.to_string(), l.value(n), m.as_str(), reps));
                }
            }
        }
    }
    Ok(study)
}

fn assemble_cell(
    n: usize,
    epsilon_spec: String,
    epsilon: f64,
    l_spec: String,
    l: f64,
    mechanism: &str,
    reps: Vec<RepOutcome>,
) -> QqCell {
    let repetitions = reps.len();
    let mut fits = Vec::with_capacity(repetitions);
    let mut records = Vec::new();
    for (fit, stats) in reps {
        for (kind, pair_i, pair_j, value) in stats {
            records.push(QqRecord { rep: fit.rep, pair_i, pair_j, kind, value });
        }
        fits.push(fit);
    }
    let failures = fits.iter().filter(|f| !f.converged).count();
    let mut cell = QqCell {
        n,
        epsilon_spec,
        epsilon,
        l_spec,
        l,
        mechanism: mechanism.to_string(),
        repetitions,
        failures,
        fits,
        records,
        summaries: Vec::new(),
        note: (failures == repetitions).then(|| "estimate did not exist in all repetitions".to_string()),
    };
    cell.summaries = cell
        .grouped()
        .into_iter()
        .map(|(kind, pair_i, pair_j, values)| QqSummary {
            kind,
            pair_i,
            pair_j,
            count: values.len(),
            mean: mean(&values),
            variance: sample_variance(&values),
            ks: ks_statistic_normal(&values),
        })
        .collect();
    cell
}
