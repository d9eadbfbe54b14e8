use serde::Serialize;

use crate::dynamics::OdnetSystem;
use crate::error::{Error, Result};
use crate::graph::{NodeLabels, Split, WeightedGraph};
use crate::influence::{InfluenceConfig, SimilaritySpec};
use crate::integrators::{integrate_observed, IntegratorConfig, Observed};
use crate::state::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitAccuracy {
    pub train: Option<f64>,
    pub validation: Option<f64>,
    pub test: Option<f64>,
}

impl SplitAccuracy {
    pub fn get(&self, split: Split) -> Option<f64> {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub predictions: Vec<usize>,
    pub accuracy: SplitAccuracy,
    pub final_state: StateMatrix,
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Training-free label propagation: train nodes start as one-hot rows of
/// their class and are reset to them at every recorded time, all other
/// nodes start at zero, and the dynamics run with static similarity.
pub fn propagate_labels(
    g: &WeightedGraph,
    labels: &NodeLabels,
    cfg: &InfluenceConfig,
    icfg: &IntegratorConfig,
) -> Result<Classification> {
    if labels.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", g.node_count()),
            actual: format!("{}", labels.len()),
        });
    }
    let masks = labels.masks.as_ref().ok_or_else(|| Error::EmptyMask("train".into()))?;
    let classes = labels.class_count();
    for class in 0..classes {
        if !masks.train.iter().any(|&i| labels.get(i) == class) {
            return Err(Error::EmptyMask(format!("train (class {class})")));
        }
    }
    let mut anchors = StateMatrix::zeros(g.node_count(), classes);
    for &i in &masks.train {
        anchors.set(i, labels.get(i), 1.0);
    }
    let clamp = |x: &mut StateMatrix| {
        for &i in &masks.train {
            x.row_mut(i).copy_from_slice(anchors.row(i));
        }
    };

    let system = OdnetSystem::new(g, *cfg, SimilaritySpec::static_adjacency())?;
    let mut last = anchors.clone();
    integrate_observed(|x: &StateMatrix| system.rhs(x), &anchors, icfg, |_, x| {
        clamp(x);
        last.clone_from(x);
        Observed::Modified
    })?;

    let predictions: Vec<usize> = last.row_iter().map(argmax).collect();
    let score = |nodes: &[usize]| {
        (!nodes.is_empty()).then(|| {
            nodes.iter().filter(|&&i| predictions[i] == labels.get(i)).count() as f64 / nodes.len() as f64
        })
    };
    let accuracy = SplitAccuracy {
        train: score(&masks.train),
        validation: score(&masks.validation),
        test: score(&masks.test),
    };
    Ok(Classification {
        predictions,
        accuracy,
        final_state: last,
    })
}
