use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::influence::{add_control, phi, similarity_dynamic_arcs, similarity_static, InfluenceConfig, SimilaritySpec};
use crate::state::StateMatrix;

/// Below this many state entries the RHS is evaluated on one thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

enum Similarities {
    Fixed { influence: Vec<f64> },
    Dynamic(SimilaritySpec),
}

/// Bounded-confidence message passing on a graph:
///
/// `dx_i/dt = sum_{j in N(i)} phi(s_ij) (x_j - x_i) + u(x_i)`
///
/// Static similarities (and their influence weights) are computed once;
/// dynamic ones are recomputed from the state at every evaluation.
pub struct OdnetSystem<'g> {
    graph: &'g WeightedGraph,
    cfg: InfluenceConfig,
    similarities: Similarities,
}

impl<'g> OdnetSystem<'g> {
    pub fn new(graph: &'g WeightedGraph, cfg: InfluenceConfig, sim: SimilaritySpec) -> Result<Self> {
        if sim.is_dynamic() {
            cfg.validate()?;
            Ok(Self {
                graph,
                cfg,
                similarities: Similarities::Dynamic(sim),
            })
        } else {
            Self::with_similarities(graph, cfg, &similarity_static(graph)?)
        }
    }

    /// Uses caller-provided per-arc similarities, aligned with the graph's
    /// arcs.
    pub fn with_similarities(graph: &'g WeightedGraph, cfg: InfluenceConfig, sims: &[f64]) -> Result<Self> {
        cfg.validate()?;
        if sims.len() != graph.arc_count() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} similarities", graph.arc_count()),
                actual: format!("{}", sims.len()),
            });
        }
        let influence = sims.iter().map(|&s| phi(&cfg, s)).collect::<Result<_>>()?;
        Ok(Self {
            graph,
            cfg,
            similarities: Similarities::Fixed { influence },
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    pub fn config(&self) -> &InfluenceConfig {
        &self.cfg
    }

    /// `phi(s_ij)` for every arc at state `x`.
    pub fn influence_weights(&self, x: &StateMatrix) -> Result<Vec<f64>> {
        match &self.similarities {
            Similarities::Fixed { influence } => Ok(influence.clone()),
            Similarities::Dynamic(spec) => similarity_dynamic_arcs(spec, self.graph, x)
                .into_iter()
                .map(|s| phi(&self.cfg, s))
                .collect(),
        }
    }

    pub fn rhs(&self, x: &StateMatrix) -> Result<StateMatrix> {
        x.check_rows(self.graph.node_count())?;
        let dynamic;
        let influence: &[f64] = match &self.similarities {
            Similarities::Fixed { influence } => influence,
            Similarities::Dynamic(_) => {
                dynamic = self.influence_weights(x)?;
                &dynamic
            }
        };
        let mut out = StateMatrix::zeros(x.rows(), x.cols());
        let cols = x.cols().max(1);
        let node_update = |(i, row): (usize, &mut [f64])| {
            let xi = x.row(i);
            let range = self.graph.arc_range(i);
            for (&j, &w) in self.graph.targets()[range.clone()].iter().zip(&influence[range]) {
                if w == 0.0 {
                    continue;
                }
                for ((o, a), b) in row.iter_mut().zip(x.row(j)).zip(xi) {
                    *o += w * (a - b);
                }
            }
            add_control(&self.cfg, xi, row);
        };
        // each row is accumulated sequentially, so the result does not
        // depend on the thread count
        if x.as_slice().len() >= PARALLEL_THRESHOLD {
            out.as_mut_slice().par_chunks_mut(cols).enumerate().for_each(node_update);
        } else {
            out.as_mut_slice().chunks_mut(cols).enumerate().for_each(node_update);
        }
        Ok(out)
    }

    /// Discrete update `x_i + sum_j phi(s_ij)(x_j - x_i) + u(x_i)`.
    pub fn discrete_step(&self, x: &StateMatrix) -> Result<StateMatrix> {
        Ok(x.axpy(1.0, &self.rhs(x)?))
    }
}

pub fn odnet_rhs(g: &WeightedGraph, x: &StateMatrix, cfg: &InfluenceConfig, sim: &SimilaritySpec) -> Result<StateMatrix> {
    OdnetSystem::new(g, *cfg, *sim)?.rhs(x)
}

pub fn odnet_discrete_step(
    g: &WeightedGraph,
    x: &StateMatrix,
    cfg: &InfluenceConfig,
    sim: &SimilaritySpec,
) -> Result<StateMatrix> {
    OdnetSystem::new(g, *cfg, *sim)?.discrete_step(x)
}
