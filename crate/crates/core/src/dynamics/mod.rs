//! Opinion dynamics on graphs and hypergraphs.
//!
//! Discrete models (`fd`, `hk`, `odnet-discrete`) are iterated once per
//! unit of time; continuous ones are handed to an [`crate::integrators`]
//! scheme.

mod fd;
mod hk;
mod hypergraph;
mod odnet;

use serde::{Deserialize, Serialize};

pub use fd::{fd_step, STOCHASTIC_TOLERANCE};
pub(crate) use fd::weighted_average;
pub use hk::{hk_step, hk_until_converged};
pub use hypergraph::{
    hypergraph_diffusion_rhs, hypergraph_odnet_rhs, DiffusionKernel, HypergraphOdnet, KernelKind, KERNEL_TOLERANCE,
};
pub use odnet::{odnet_discrete_step, odnet_rhs, OdnetSystem};

use crate::error::{Error, Result};
use crate::graph::{Hypergraph, WeightedGraph};
use crate::influence::{InfluenceConfig, SimilaritySpec};
use crate::integrators::{integrate, IntegratorConfig, Trajectory};
use crate::state::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicKind {
    Fd,
    Hk,
    OdnetDiscrete,
    #[default]
    OdnetContinuous,
    HypergraphOdnet,
    HypergraphDiffusion,
}

impl DynamicKind {
    pub fn needs_hypergraph(self) -> bool {
        matches!(self, DynamicKind::HypergraphOdnet | DynamicKind::HypergraphDiffusion)
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, DynamicKind::Fd | DynamicKind::Hk | DynamicKind::OdnetDiscrete)
    }
}

/// Which model to run and its parameters; the structure is supplied
/// separately at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DynamicSpec {
    pub kind: DynamicKind,
    pub influence: InfluenceConfig,
    pub similarity: SimilaritySpec,
    /// Confidence radius, `hk` only.
    pub hk_radius: Option<f64>,
    /// Diffusion kernel, `hypergraph-diffusion` only.
    pub kernel: KernelKind,
}

#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    Graph(&'a WeightedGraph),
    Hypergraph(&'a Hypergraph),
}

impl Structure<'_> {
    pub fn node_count(&self) -> usize {
        match self {
            Structure::Graph(g) => g.node_count(),
            Structure::Hypergraph(h) => h.node_count(),
        }
    }
}

impl DynamicSpec {
    pub fn validate(&self, structure: Structure<'_>) -> Result<()> {
        match (self.kind.needs_hypergraph(), structure) {
            (true, Structure::Graph(_)) => {
                return Err(Error::InvalidConfig(format!("{:?} needs a hypergraph", self.kind)));
            }
            (false, Structure::Hypergraph(_)) if self.kind != DynamicKind::Hk => {
                return Err(Error::InvalidConfig(format!("{:?} needs a graph", self.kind)));
            }
            _ => {}
        }
        if self.kind == DynamicKind::Hk {
            match self.hk_radius {
                Some(r) if r > 0.0 => {}
                other => return Err(Error::InvalidConfig(format!("hk needs a positive hk_radius, got {other:?}"))),
            }
        }
        if matches!(
            self.kind,
            DynamicKind::OdnetDiscrete | DynamicKind::OdnetContinuous | DynamicKind::HypergraphOdnet
        ) {
            self.influence.validate()?;
        }
        Ok(())
    }
}

/// Runs `spec` from `x0`. Discrete kinds take `round(t_end)` steps and
/// honour `record_interval` rounded to whole steps.
pub fn simulate(spec: &DynamicSpec, structure: Structure<'_>, x0: &StateMatrix, cfg: &IntegratorConfig) -> Result<Trajectory> {
    spec.validate(structure)?;
    x0.check_rows(structure.node_count())?;
    if !x0.is_finite() {
        return Err(Error::NonFiniteState { last_finite_time: 0.0 });
    }
    match (spec.kind, structure) {
        (DynamicKind::Fd, Structure::Graph(g)) => iterate(x0, cfg, |x| fd_step(g, x)),
        (DynamicKind::Hk, _) => {
            let r = spec.hk_radius.expect("validated");
            iterate(x0, cfg, |x| hk_step(x, r))
        }
        (DynamicKind::OdnetDiscrete, Structure::Graph(g)) => {
            let system = OdnetSystem::new(g, spec.influence, spec.similarity)?;
            iterate(x0, cfg, |x| system.discrete_step(x))
        }
        (DynamicKind::OdnetContinuous, Structure::Graph(g)) => {
            let system = OdnetSystem::new(g, spec.influence, spec.similarity)?;
            integrate(|x: &StateMatrix| system.rhs(x), x0, cfg)
        }
        (DynamicKind::HypergraphOdnet, Structure::Hypergraph(h)) => {
            let system = HypergraphOdnet::new(h, spec.influence, spec.similarity)?;
            integrate(|x: &StateMatrix| system.rhs(x), x0, cfg)
        }
        (DynamicKind::HypergraphDiffusion, Structure::Hypergraph(h)) => {
            let kernel = DiffusionKernel::new(h, spec.kernel)?;
            integrate(|x: &StateMatrix| kernel.rhs(x), x0, cfg)
        }
        _ => unreachable!("structure checked by validate"),
    }
}

fn iterate<F>(x0: &StateMatrix, cfg: &IntegratorConfig, mut step: F) -> Result<Trajectory>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    if !(cfg.t_end >= 1.0) {
        return Err(Error::InvalidConfig(format!("discrete dynamics need t_end >= 1, got {}", cfg.t_end)));
    }
    let steps = cfg.t_end.round() as usize;
    if steps > cfg.max_steps {
        return Err(Error::StepLimitExceeded {
            max_steps: cfg.max_steps,
            time: 0.0,
        });
    }
    let every = cfg.record_interval.map_or(1, |r| (r.round() as usize).max(1));
    let mut traj = Trajectory::from_snapshots(vec![0.0], vec![x0.clone()]);
    let mut x = x0.clone();
    for k in 1..=steps {
        let next = step(&x)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteState {
                last_finite_time: (k - 1) as f64,
            });
        }
        x = next;
        traj.stats.accepted += 1;
        traj.stats.rhs_evaluations += 1;
        if k % every == 0 || k == steps {
            traj.times.push(k as f64);
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::Scheme;

    #[test]
    fn spec_json_round_trip() {
        let spec = DynamicSpec {
            kind: DynamicKind::Hk,
            hk_radius: Some(0.3),
            ..Default::default()
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"hk\""));
        assert_eq!(serde_json::from_str::<DynamicSpec>(&text).unwrap(), spec);
        let parsed: DynamicSpec = serde_json::from_str(r#"{"kind":"hypergraph-diffusion","kernel":"hgnn"}"#).unwrap();
        assert_eq!(parsed.kernel, KernelKind::Hgnn);
    }

    #[test]
    fn structure_must_match_kind() {
        let h = Hypergraph::from_hyperedges(2, &[vec![0, 1]]).unwrap();
        let spec = DynamicSpec::default();
        let cfg = IntegratorConfig::fixed(Scheme::Euler, 0.1, 1.0);
        assert!(matches!(
            simulate(&spec, Structure::Hypergraph(&h), &StateMatrix::column(&[0.0, 1.0]), &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let hk = DynamicSpec {
            kind: DynamicKind::Hk,
            ..Default::default()
        };
        assert!(hk.validate(Structure::Hypergraph(&h)).is_err());
    }

    #[test]
    fn discrete_kinds_step_once_per_time_unit() {
        let g = WeightedGraph::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let spec = DynamicSpec {
            kind: DynamicKind::Fd,
            ..Default::default()
        };
        let traj = simulate(&spec, Structure::Graph(&g), &StateMatrix::column(&[0.0, 1.0]), &IntegratorConfig::fixed(Scheme::Euler, 1.0, 3.0)).unwrap();
        assert_eq!(traj.times, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(traj.last(), &StateMatrix::column(&[0.5, 0.5]));
    }
}
