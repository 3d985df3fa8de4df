use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_graph, cell_rng, design, fmt_f64, mean, release, std_error, SimConfig};
use crate::error::Result;
use crate::privacy::PrivacyBudget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCell {
    pub n: usize,
    pub epsilon_spec: String,
    pub epsilon: f64,
    pub l_spec: String,
    pub l: f64,
    pub mechanism: String,
    pub repetitions: usize,
    pub mean_linf: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DistanceTable {
    pub cells: Vec<DistanceCell>,
}

impl DistanceTable {
    pub const HEADER: &'static str = "n,epsilon_spec,epsilon,l_spec,l,mechanism,repetitions,mean_linf,std_error";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::HEADER);
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.n,
                c.epsilon_spec,
                c.epsilon,
                c.l_spec,
                c.l,
                c.mechanism,
                c.repetitions,
                fmt_f64(c.mean_linf),
                fmt_f64(c.std_error)
            );
        }
        s
    }

    /// First cell matching `(n, epsilon label, L label, mechanism)`.
    pub fn find(&self, n: usize, epsilon_spec: &str, l_spec: &str, mechanism: &str) -> Option<&DistanceCell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.epsilon_spec == epsilon_spec && c.l_spec == l_spec && c.mechanism == mechanism)
    }
}

/// Mean `||d - released||_inf` per `(n, L, epsilon, mechanism)` cell.
pub fn run_distance_table(cfg: &SimConfig) -> Result<DistanceTable> {
    cfg.validate()?;
    let mut table = DistanceTable::default();
    for &n in &cfg.n_values {
        for (li, l) in cfg.l_spec.iter().enumerate() {
            let theta = design(n, l)?;
            let budgets: Vec<PrivacyBudget> =
                cfg.epsilon_spec.iter().map(|e| PrivacyBudget::new(e.value(n))).collect::<Result<_>>()?;
            // per_rep[rep][eps * mechanisms + mech]
            let per_rep: Vec<Vec<f64>> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let g = cell_graph(cfg.base_seed, n, li, rep, &theta);
                    let d = g.bi_degree_sequence();
                    let mut row = Vec::with_capacity(budgets.len() * cfg.mechanisms.len());
                    for (ei, budget) in budgets.iter().enumerate() {
                        for &m in &cfg.mechanisms {
                            let mut rng = cell_rng(cfg.base_seed, m, n, ei, li, rep);
                            row.push(release(m, &g, &d, budget, &mut rng).distance as f64);
                        }
                    }
                    row
                })
                .collect();
            for (ei, eps) in cfg.epsilon_spec.iter().enumerate() {
                for (mi, m) in cfg.mechanisms.iter().enumerate() {
                    let col = ei * cfg.mechanisms.len() + mi;
                    let xs: Vec<f64> = per_rep.iter().map(|r| r[col]).collect();
                    table.cells.push(DistanceCell {
                        n,
                        epsilon_spec: eps.label(),
                        epsilon: budgets[ei].epsilon(),
                        l_spec: l.to_string(),
                        l: l.value(n),
                        mechanism: m.as_str().to_string(),
                        repetitions: cfg.repetitions,
                        mean_linf: mean(&xs),
                        std_error: std_error(&xs),
                    });
                }
            }
        }
    }
    Ok(table)
}
