//! Weighted graphs, hypergraphs and node labels.
//!
//! [`WeightedGraph`] is stored as a compressed adjacency (CSR) keyed by
//! source node. Undirected graphs hold every edge as two arcs of equal
//! weight, so per-arc data (similarities, influence weights) can be kept in
//! flat vectors aligned with [`WeightedGraph::targets`].

mod analysis;
mod hypergraph;
mod labels;
mod sbm;

use std::ops::Range;

pub use analysis::{
    degree, homophily_level, is_aperiodic, is_strongly_connected, period,
    validate_row_stochastic, Homophily,
};
pub(crate) use analysis::first_non_stochastic_row;
pub use hypergraph::Hypergraph;
pub use labels::{Masks, NodeLabels, Split};
pub use sbm::generate_sbm;

use crate::error::{Error, Result};

/// Largest node count for which a dense `N x N` view is produced.
pub const DENSE_LIMIT: usize = 2_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from `(source, target, weight)` triples.
    ///
    /// Zero weights are dropped (the pair is simply not an edge). For an
    /// undirected graph each listed pair is inserted in both directions, so
    /// listing both `(i, j)` and `(j, i)` is reported as a duplicate.
    pub fn from_edges<I>(node_count: usize, edges: I, directed: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
        for (s, t, w) in edges {
            for index in [s, t] {
                if index >= node_count {
                    return Err(Error::NodeOutOfRange { index, node_count });
                }
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    source_node: s,
                    target: t,
                    weight: w,
                });
            }
            if w == 0.0 {
                continue;
            }
            arcs.push((s, t, w));
            if !directed && s != t {
                arcs.push((t, s, w));
            }
        }
        Self::from_arcs(node_count, arcs, directed)
    }

    /// Builds a directed graph from a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut edges = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n} columns"),
                    actual: format!("{} columns in row {i}", row.len()),
                });
            }
            edges.extend(row.iter().enumerate().map(|(j, &w)| (i, j, w)));
        }
        Self::from_edges(n, edges, true)
    }

    fn from_arcs(node_count: usize, mut arcs: Vec<(usize, usize, f64)>, directed: bool) -> Result<Self> {
        arcs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = arcs.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEdge {
                source_node: w[0].0,
                target: w[0].1,
            });
        }
        let mut offsets = vec![0usize; node_count + 1];
        for &(s, _, _) in &arcs {
            offsets[s + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let (targets, weights) = arcs.into_iter().map(|(_, t, w)| (t, w)).unzip();
        Ok(Self {
            node_count,
            directed,
            offsets,
            targets,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of stored arcs (twice the edge count for undirected graphs,
    /// minus self-loops).
    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    /// Number of edges as a user would count them: arcs for a directed
    /// graph, unordered pairs for an undirected one.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.arc_count()
        } else {
            self.edges().count()
        }
    }

    /// Range of arc indices leaving node `i`.
    pub fn arc_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Out-neighbours of `i` with their weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.arc_range(i);
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.arc_range(i);
        self.targets[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.weights[r.start + k])
    }

    /// Every arc as `(source, target, weight)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count).flat_map(move |i| self.neighbors(i).map(move |(j, w)| (i, j, w)))
    }

    /// Canonical edge list: all arcs when directed, `i <= j` pairs otherwise.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let directed = self.directed;
        self.arcs().filter(move |&(i, j, _)| directed || i <= j)
    }

    /// Sum of outgoing weights of `i`.
    pub fn out_weight(&self, i: usize) -> f64 {
        self.weights[self.arc_range(i)].iter().sum()
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.weight(i, i).is_some()
    }

    /// Graph with every arc reversed.
    pub fn reversed(&self) -> Self {
        let arcs = self.arcs().map(|(i, j, w)| (j, i, w)).collect();
        Self::from_arcs(self.node_count, arcs, self.directed).expect("reversal keeps arcs unique")
    }

    /// Replaces arc weights, keeping the arc order. Arcs whose new weight
    /// is zero are removed.
    pub fn with_arc_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.arc_count() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} arc weights", self.arc_count()),
                actual: format!("{}", weights.len()),
            });
        }
        let mut arcs = Vec::with_capacity(weights.len());
        for ((s, t, _), &w) in self.arcs().zip(weights) {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    source_node: s,
                    target: t,
                    weight: w,
                });
            }
            if w > 0.0 {
                arcs.push((s, t, w));
            }
        }
        Self::from_arcs(self.node_count, arcs, self.directed)
    }

    /// Row-normalises the weights so every node's outgoing weights sum to
    /// one. Nodes without outgoing arcs receive a unit self-loop; their
    /// indices are returned alongside the directed result.
    pub fn normalize_rows(&self) -> (Self, Vec<usize>) {
        let mut arcs = Vec::with_capacity(self.arc_count());
        let mut repaired = Vec::new();
        for i in 0..self.node_count {
            let total = self.out_weight(i);
            if total > 0.0 {
                arcs.extend(self.neighbors(i).map(|(j, w)| (i, j, w / total)));
            } else {
                arcs.push((i, i, 1.0));
                repaired.push(i);
            }
        }
        let g = Self::from_arcs(self.node_count, arcs, true).expect("normalisation keeps arcs unique");
        (g, repaired)
    }

    /// Dense row-major weight matrix; refused above [`DENSE_LIMIT`] nodes.
    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>> {
        if self.node_count > DENSE_LIMIT {
            return Err(Error::TooLarge {
                size: self.node_count,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = vec![vec![0.0; self.node_count]; self.node_count];
        for (i, j, w) in self.arcs() {
            m[i][j] = w;
        }
        Ok(m)
    }
}
