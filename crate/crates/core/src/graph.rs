//! Dense simple digraphs, bi-degree sequences and graphicality.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple, loopless directed graph on `n >= 2` nodes stored as a dense
/// row-major indicator matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    n: usize,
    adj: Vec<bool>,
}

impl DirectedGraph {
    /// The graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("a graph needs at least 2 nodes, got {n}")));
        }
        Ok(Self { n, adj: vec![false; n * n] })
    }

    /// The complete digraph: every ordered pair `i != j` is an edge.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.adj[i * n + j] = true;
                }
            }
        }
        Ok(g)
    }

    /// Builds a graph from `(tail, head)` pairs. Duplicate pairs collapse to
    /// one edge; self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n)?;
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!("edge {u}->{v} out of range for n={n}")));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop on node {u}")));
            }
            g.adj[u * n + v] = true;
        }
        Ok(g)
    }

    /// Builds a graph from a closure evaluated at every off-diagonal entry.
    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.adj[i * n + j] = f(i, j);
                }
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    #[inline]
    pub(crate) fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        debug_assert!(i != j);
        self.adj[i * self.n + j] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&a| a).count()
    }

    /// Iterates edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.adj
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(move |(k, _)| (k / n, k % n))
    }

    /// The out- and in-degrees of every node.
    pub fn bi_degree_sequence(&self) -> BiDegreeSequence {
        let n = self.n;
        let mut out = vec![0usize; n];
        let mut inn = vec![0usize; n];
        for (i, j) in self.edges() {
            out[i] += 1;
            inn[j] += 1;
        }
        BiDegreeSequence { out, inn }
    }

    /// The subgraph induced by `nodes`, relabelled `0..nodes.len()` in the
    /// given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Self> {
        Self::from_fn(nodes.len(), |a, b| self.has_edge(nodes[a], nodes[b]))
    }
}

/// Number of ordered pairs on which two graphs of equal size disagree.
pub fn graph_distance(g1: &DirectedGraph, g2: &DirectedGraph) -> Result<usize> {
    if g1.n != g2.n {
        return Err(Error::domain(format!(
            "graphs have different node counts ({} vs {})",
            g1.n, g2.n
        )));
    }
    // Diagonals are always false, so they never contribute.
    Ok(g1.adj.iter().zip(&g2.adj).filter(|(a, b)| a != b).count())
}

/// Out- and in-degree sequence of a graph, in node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BiDegreeSequence {
    pub out: Vec<usize>,
    #[serde(rename = "in")]
    pub inn: Vec<usize>,
}

impl BiDegreeSequence {
    pub fn new(out: Vec<usize>, inn: Vec<usize>) -> Result<Self> {
        if out.len() != inn.len() {
            return Err(Error::domain("out and in blocks differ in length"));
        }
        Ok(Self { out, inn })
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    /// Concatenation `(out, in)` as reals, the layout used by the solvers.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.out.iter().chain(&self.inn).map(|&d| d as f64).collect()
    }

    pub fn to_integer(&self) -> IntegerBiSequence {
        IntegerBiSequence {
            values: self.out.iter().chain(&self.inn).map(|&d| d as i64).collect(),
        }
    }

    pub fn is_graphical(&self) -> bool {
        self.to_integer().is_graphical()
    }
}

/// An unconstrained integer release `(z_out, z_in)` of length `2n`, such as
/// a Laplace-perturbed bi-degree sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerBiSequence {
    pub values: Vec<i64>,
}

impl IntegerBiSequence {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::domain(format!(
                "bi-sequence length must be a positive even number, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn from_blocks(out: &[i64], inn: &[i64]) -> Result<Self> {
        if out.len() != inn.len() {
            return Err(Error::domain("out and in blocks differ in length"));
        }
        Self::new(out.iter().chain(inn).copied().collect())
    }

    pub fn n(&self) -> usize {
        self.values.len() / 2
    }

    pub fn out(&self) -> &[i64] {
        &self.values[..self.n()]
    }

    pub fn inn(&self) -> &[i64] {
        &self.values[self.n()..]
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn is_graphical(&self) -> bool {
        is_bigraphical(self.out(), self.inn())
    }

    /// Converts to a degree sequence if every entry is a valid degree.
    pub fn to_degrees(&self) -> Option<BiDegreeSequence> {
        let n = self.n() as i64;
        if self.values.iter().any(|&v| v < 0 || v > n - 1) {
            return None;
        }
        let out = self.out().iter().map(|&v| v as usize).collect();
        let inn = self.inn().iter().map(|&v| v as usize).collect();
        Some(BiDegreeSequence { out, inn })
    }

    /// ℓ∞ distance to another sequence of the same length.
    pub fn linf_distance(&self, other: &IntegerBiSequence) -> i64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }
}

/// Fulkerson–Chen–Anstee slack for every prefix length.
///
/// Pairs are sorted by out-degree descending with ties broken by in-degree
/// descending. Entry `k-1` is `rhs(k) - lhs(k)` where
/// `lhs(k) = sum_{i<=k} a_i` and
/// `rhs(k) = sum_{i<=k} min(b_i, k-1) + sum_{i>k} min(b_i, k)`.
/// A negative entry is a violated inequality. Returns `None` when an entry
/// lies outside `[0, n-1]`.
pub fn fca_slack(out: &[i64], inn: &[i64]) -> Option<Vec<i64>> {
    let n = out.len();
    assert_eq!(n, inn.len(), "out and in blocks must have equal length");
    let max = n as i64 - 1;
    if out.iter().chain(inn).any(|&v| v < 0 || v > max) {
        return None;
    }
    let mut pairs: Vec<(i64, i64)> = out.iter().copied().zip(inn.iter().copied()).collect();
    pairs.sort_unstable_by(|x, y| y.cmp(x));

    // total_min[k] = sum_i min(b_i, k), built from the in-degree histogram.
    let mut hist = vec![0i64; n + 1];
    for &b in inn {
        hist[b as usize] += 1;
    }
    let mut at_least = n as i64; // #{i : b_i >= k}, starting at k = 0
    let mut total_min = vec![0i64; n + 1];
    for k in 1..=n {
        at_least -= hist[k - 1];
        total_min[k] = total_min[k - 1] + at_least;
    }

    // rhs(k) = total_min[k] - #{i <= k : b_i >= k}
    let mut prefix_hist = vec![0i64; n + 1];
    let mut prefix_at_least = 0i64;
    let mut lhs = 0i64;
    let mut slack = Vec::with_capacity(n);
    for k in 1..=n {
        prefix_at_least -= prefix_hist[k - 1];
        let (a, b) = pairs[k - 1];
        prefix_hist[b as usize] += 1;
        if b >= k as i64 {
            prefix_at_least += 1;
        }
        lhs += a;
        slack.push(total_min[k] - prefix_at_least - lhs);
    }
    Some(slack)
}

/// Whether `(out, in)` is the bi-degree sequence of some simple loopless
/// digraph on `out.len()` nodes.
pub fn is_bigraphical(out: &[i64], inn: &[i64]) -> bool {
    if out.len() != inn.len() || out.is_empty() {
        return false;
    }
    if out.iter().sum::<i64>() != inn.iter().sum::<i64>() {
        return false;
    }
    match fca_slack(out, inn) {
        Some(slack) => slack.iter().all(|&s| s >= 0),
        None => false,
    }
}

/// A graph read from an edge list together with the original node labels.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: DirectedGraph,
    /// `labels[k]` is the original label of compacted node `k`.
    pub labels: Vec<i64>,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

/// Parses a whitespace-separated edge list.
///
/// Each data line starts with two integer labels `u v`; further columns
/// (weights, timestamps) are ignored. Lines starting with `#` or `%` are
/// comments and blank lines are skipped. A comment of the form
/// `# nodes: N` declares labels `0..N` as nodes even when isolated, so
/// that edge lists written by [`crate::io::write_edge_list`] round-trip.
/// Labels are compacted to `0..n` in increasing order.
pub fn load_edge_list(text: &str) -> Result<LoadedGraph> {
    let mut labels: BTreeSet<i64> = BTreeSet::new();
    let mut raw_edges: Vec<(i64, i64)> = Vec::new();
    let mut self_loops = 0usize;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(count) = parse_nodes_directive(comment) {
                let count = count.map_err(|message| Error::Parse { line: line_no, message })?;
                labels.extend(0..count);
            }
            continue;
        }
        if trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_label = |what: &str| -> Result<i64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what} label"),
            })?;
            tok.parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{what} label {tok:?} is not an integer"),
            })
        };
        let u = next_label("source")?;
        let v = next_label("target")?;
        labels.insert(u);
        labels.insert(v);
        if u == v {
            self_loops += 1;
        } else {
            raw_edges.push((u, v));
        }
    }

    if labels.len() < 2 {
        return Err(Error::domain(format!(
            "edge list has {} distinct node(s); need at least 2",
            labels.len()
        )));
    }
    let labels: Vec<i64> = labels.into_iter().collect();
    let index: BTreeMap<i64, usize> = labels.iter().enumerate().map(|(k, &l)| (l, k)).collect();
    let n = labels.len();
    let mut graph = DirectedGraph::empty(n)?;
    let mut duplicates = 0usize;
    for (u, v) in raw_edges {
        let (i, j) = (index[&u], index[&v]);
        if graph.has_edge(i, j) {
            duplicates += 1;
        } else {
            graph.set_edge(i, j, true);
        }
    }
    Ok(LoadedGraph { graph, labels, self_loops_dropped: self_loops, duplicates_collapsed: duplicates })
}

fn parse_nodes_directive(comment: &str) -> Option<std::result::Result<i64, String>> {
    let rest = comment.trim().strip_prefix("nodes:")?;
    Some(
        rest.trim()
            .parse::<i64>()
            .map_err(|_| format!("invalid node count {:?}", rest.trim())),
    )
}

/// Result of degree-threshold pruning.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: DirectedGraph,
    /// `kept[k]` is the index in the parent graph of node `k`.
    pub kept: Vec<usize>,
}

/// Repeatedly removes nodes whose out-degree is `<= min_out` or whose
/// in-degree is `<= min_in`, recomputing degrees on the surviving induced
/// subgraph, until every remaining node has out-degree `> min_out` and
/// in-degree `> min_in`.
pub fn preprocess_subgraph(g: &DirectedGraph, min_out: i64, min_in: i64) -> Result<Subgraph> {
    let n = g.n();
    let mut alive = vec![true; n];
    let mut out: Vec<i64> = vec![0; n];
    let mut inn: Vec<i64> = vec![0; n];
    for (i, j) in g.edges() {
        out[i] += 1;
        inn[j] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| out[v] <= min_out || inn[v] <= min_in).collect();
    let mut queued = vec![false; n];
    for &v in &queue {
        queued[v] = true;
    }
    while let Some(v) = queue.pop() {
        alive[v] = false;
        for w in 0..n {
            if !alive[w] || w == v {
                continue;
            }
            if g.has_edge(v, w) {
                inn[w] -= 1;
            }
            if g.has_edge(w, v) {
                out[w] -= 1;
            }
            if !queued[w] && (out[w] <= min_out || inn[w] <= min_in) {
                queued[w] = true;
                queue.push(w);
            }
        }
    }
    finish_subgraph(g, (0..n).filter(|&v| alive[v]).collect())
}

/// One pass of the same filter: nodes are kept when their degrees in the
/// input graph exceed the thresholds; degrees are not recomputed, so the
/// induced subgraph may contain nodes below the thresholds.
pub fn preprocess_single_pass(g: &DirectedGraph, min_out: i64, min_in: i64) -> Result<Subgraph> {
    let d = g.bi_degree_sequence();
    let kept = (0..g.n())
        .filter(|&v| d.out[v] as i64 > min_out && d.inn[v] as i64 > min_in)
        .collect();
    finish_subgraph(g, kept)
}

fn finish_subgraph(g: &DirectedGraph, kept: Vec<usize>) -> Result<Subgraph> {
    if kept.len() < 2 {
        return Err(Error::domain(format!(
            "degree filtering left {} node(s); need at least 2",
            kept.len()
        )));
    }
    let graph = g.induced_subgraph(&kept)?;
    Ok(Subgraph { graph, kept })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(out: &[i64], inn: &[i64]) -> bool {
        is_bigraphical(out, inn)
    }

    #[test]
    fn degrees_of_small_graphs() {
        let e = DirectedGraph::empty(3).unwrap().bi_degree_sequence();
        assert_eq!(e.out, vec![0, 0, 0]);
        assert_eq!(e.inn, vec![0, 0, 0]);

        let c = DirectedGraph::complete(3).unwrap().bi_degree_sequence();
        assert_eq!(c.out, vec![2, 2, 2]);
        assert_eq!(c.inn, vec![2, 2, 2]);

        let g = DirectedGraph::from_edges(3, [(0, 1), (0, 2), (2, 1)]).unwrap();
        let d = g.bi_degree_sequence();
        assert_eq!(d.out, vec![2, 0, 1]);
        assert_eq!(d.inn, vec![0, 2, 1]);
    }

    #[test]
    fn graphicality_examples() {
        assert!(seq(&[0, 0, 0], &[0, 0, 0]));
        assert!(seq(&[2, 2, 2], &[2, 2, 2]));
        assert!(!seq(&[2, 0, 0], &[2, 0, 0]));
        assert!(!seq(&[1, 0], &[0, 0]));
        assert!(!seq(&[-1, 1], &[0, 0]));
        assert!(!seq(&[2, 0], &[0, 2]));
    }

    #[test]
    fn distance_examples() {
        let e = DirectedGraph::empty(3).unwrap();
        let c = DirectedGraph::complete(3).unwrap();
        assert_eq!(graph_distance(&e, &e).unwrap(), 0);
        assert_eq!(graph_distance(&e, &c).unwrap(), 6);
        let a = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let b = DirectedGraph::from_edges(2, [(1, 0)]).unwrap();
        assert_eq!(graph_distance(&a, &b).unwrap(), 2);
        assert!(graph_distance(&a, &e).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let g = load_edge_list("0 1\n1 0\n").unwrap();
        assert_eq!(g.graph.n(), 2);
        assert!(g.graph.has_edge(0, 1) && g.graph.has_edge(1, 0));

        let g = load_edge_list("0 1\n0 1\n0 0\n").unwrap();
        assert_eq!(g.graph.n(), 2);
        assert_eq!(g.graph.edge_count(), 1);
        assert!(g.graph.has_edge(0, 1));
        assert_eq!(g.self_loops_dropped, 1);
        assert_eq!(g.duplicates_collapsed, 1);

        let g = load_edge_list("# header\n\n10 20 3.5 1082040961\n% konect\n20 5\n").unwrap();
        assert_eq!(g.labels, vec![5, 10, 20]);
        assert!(g.graph.has_edge(1, 2) && g.graph.has_edge(2, 0));

        let g = load_edge_list("# nodes: 4\n0 1\n").unwrap();
        assert_eq!(g.graph.n(), 4);
    }

    #[test]
    fn edge_list_errors() {
        match load_edge_list("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(load_edge_list("3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_edge_list("7 7\n"), Err(Error::Domain(_))));
        assert!(matches!(load_edge_list(""), Err(Error::Domain(_))));
    }

    #[test]
    fn pruning_examples() {
        let g = DirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 0), (3, 0)]).unwrap();
        let s = preprocess_subgraph(&g, -1, -1).unwrap();
        assert_eq!(s.graph, g);
        assert_eq!(s.kept, vec![0, 1, 2, 3]);

        let star = DirectedGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(matches!(preprocess_subgraph(&star, 0, 0), Err(Error::Domain(_))));

        // Node 3 has in-degree 0; after removing it, the 3-cycle survives.
        let s = preprocess_subgraph(&g, 0, 0).unwrap();
        assert_eq!(s.kept, vec![0, 1, 2]);
    }

    #[test]
    fn iterated_pruning_differs_from_single_pass() {
        // Triangle 0,1,2 with reciprocated edges, plus a tail 0 <-> 3 <-> 4.
        let mut edges = vec![];
        for (a, b) in [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4)] {
            edges.push((a, b));
            edges.push((b, a));
        }
        let g = DirectedGraph::from_edges(5, edges).unwrap();
        // Node 3 has degrees (2, 2) in the full graph but only (1, 1) once 4
        // is gone.
        let single = preprocess_single_pass(&g, 1, 1).unwrap();
        let iter = preprocess_subgraph(&g, 1, 1).unwrap();
        assert_eq!(single.kept, vec![0, 1, 2, 3]);
        assert_eq!(iter.kept, vec![0, 1, 2]);
        let d = iter.graph.bi_degree_sequence();
        assert!(d.out.iter().chain(&d.inn).all(|&x| x > 1));
    }
}
