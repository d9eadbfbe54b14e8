use serde::{Deserialize, Serialize};

use crate::dynamics::OdnetSystem;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::influence::{phi, similarity_dynamic_arcs, similarity_static, InfluenceConfig, SimilaritySpec};
use crate::integrators::{integrate_observed, IntegratorConfig, Observed};
use crate::state::StateMatrix;

/// Where the similarities used for the final edge weights come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimilaritySource {
    /// Cosine similarity of the final node states.
    #[default]
    DynamicFinal,
    /// Normalised adjacency of the input graph.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplifyConfig {
    pub weight_cutoff: f64,
    pub drop_isolated: bool,
    pub similarity_source: SimilaritySource,
    /// Similarity driving the dynamics themselves.
    pub dynamics_similarity: SimilaritySpec,
    pub influence: InfluenceConfig,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    /// Dimension of the random unit pseudo-features.
    pub feature_dim: usize,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self {
            weight_cutoff: 0.05,
            drop_isolated: true,
            similarity_source: SimilaritySource::DynamicFinal,
            dynamics_similarity: SimilaritySpec::static_adjacency(),
            influence: InfluenceConfig::identity(),
            integrator: IntegratorConfig::default(),
            seed: 0,
            feature_dim: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifyReport {
    pub nodes_before: usize,
    pub edges_before: usize,
    pub nodes_after: usize,
    pub edges_after: usize,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedNetwork {
    /// Graph over the kept nodes, re-indexed `0..kept.len()`.
    pub graph: WeightedGraph,
    /// Original index of every kept node.
    pub kept: Vec<usize>,
    pub report: SimplifyReport,
}

impl SimplifiedNetwork {
    /// Edges with original node indices.
    pub fn original_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph.edges().map(|(i, j, w)| (self.kept[i], self.kept[j], w))
    }
}

/// Runs the dynamics from random unit pseudo-features, rescores every edge
/// by the influence of its final similarity (negative influence counts as
/// zero, then divided by the largest score) and keeps edges scoring above
/// the cutoff.
pub fn simplify_network(g: &WeightedGraph, cfg: &SimplifyConfig) -> Result<SimplifiedNetwork> {
    if !(cfg.weight_cutoff >= 0.0) {
        return Err(Error::InvalidConfig(format!("weight cutoff must be non-negative, got {}", cfg.weight_cutoff)));
    }
    if cfg.feature_dim == 0 {
        return Err(Error::InvalidConfig("feature_dim must be positive".into()));
    }
    let n = g.node_count();
    let sims = match cfg.similarity_source {
        SimilaritySource::Static => similarity_static(g)?,
        SimilaritySource::DynamicFinal => {
            let x0 = StateMatrix::random_unit_rows(n, cfg.feature_dim, cfg.seed);
            let system = OdnetSystem::new(g, cfg.influence, cfg.dynamics_similarity)?;
            let mut last = x0.clone();
            integrate_observed(|x: &StateMatrix| system.rhs(x), &x0, &cfg.integrator, |_, x| {
                last.clone_from(x);
                Observed::Unchanged
            })?;
            log::debug!("simplify: final state norm {}", last.norm());
            similarity_dynamic_arcs(&SimilaritySpec::dynamic_cosine(), g, &last)
        }
    };
    let mut scores = sims
        .into_iter()
        .map(|s| phi(&cfg.influence, s).map(|v| v.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let top = scores.iter().copied().fold(0.0, f64::max);
    for s in scores.iter_mut() {
        *s = if top > 0.0 { *s / top } else { 0.0 };
        if *s <= cfg.weight_cutoff {
            *s = 0.0;
        }
    }
    let filtered = g.with_arc_weights(&scores)?;

    let kept: Vec<usize> = if cfg.drop_isolated {
        let mut linked = vec![false; n];
        for (i, j, _) in filtered.arcs().filter(|&(i, j, _)| i != j) {
            linked[i] = true;
            linked[j] = true;
        }
        (0..n).filter(|&i| linked[i]).collect()
    } else {
        (0..n).collect()
    };
    let mut index = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        index[old] = new;
    }
    let graph = WeightedGraph::from_edges(
        kept.len(),
        filtered
            .edges()
            .filter(|&(i, j, _)| index[i] != usize::MAX && index[j] != usize::MAX)
            .map(|(i, j, w)| (index[i], index[j], w)),
        g.is_directed(),
    )?;
    let report = SimplifyReport {
        nodes_before: n,
        edges_before: g.edge_count(),
        nodes_after: kept.len(),
        edges_after: graph.edge_count(),
        cutoff: cfg.weight_cutoff,
    };
    log::info!(
        "simplify: {} nodes / {} edges -> {} nodes / {} edges",
        report.nodes_before,
        report.edges_before,
        report.nodes_after,
        report.edges_after
    );
    Ok(SimplifiedNetwork { graph, kept, report })
}
