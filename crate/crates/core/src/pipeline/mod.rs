//! End-to-end procedures: network simplification, influencer labelling
//! and label propagation.

mod classify;
mod simplify;

use serde::{Deserialize, Serialize};

pub use classify::{argmax, propagate_labels, Classification, SplitAccuracy};
pub use simplify::{simplify_network, SimilaritySource, SimplifiedNetwork, SimplifyConfig, SimplifyReport};

use crate::error::{Error, Result};
use crate::graph::{degree, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Influencer {
    Weak,
    Medium,
    Strong,
}

impl Influencer {
    pub fn name(self) -> &'static str {
        match self {
            Influencer::Weak => "weak",
            Influencer::Medium => "medium",
            Influencer::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeCutoffs {
    pub low: usize,
    pub high: usize,
}

impl Default for DegreeCutoffs {
    fn default() -> Self {
        Self { low: 20, high: 60 }
    }
}

impl DegreeCutoffs {
    pub fn classify(&self, degree: usize) -> Influencer {
        if degree < self.low {
            Influencer::Weak
        } else if degree <= self.high {
            Influencer::Medium
        } else {
            Influencer::Strong
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluencerLabeling {
    pub cutoffs: DegreeCutoffs,
    pub labels: Vec<Influencer>,
}

impl InfluencerLabeling {
    /// Node counts per category, weak first.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in &self.labels {
            c[*l as usize] += 1;
        }
        c
    }
}

/// Buckets nodes by degree: below `low` weak, up to and including `high`
/// medium, above it strong.
pub fn label_by_degree(g: &WeightedGraph, cutoffs: DegreeCutoffs) -> Result<InfluencerLabeling> {
    if cutoffs.low >= cutoffs.high {
        return Err(Error::InvalidConfig(format!(
            "degree cutoffs need low < high, got {} and {}",
            cutoffs.low, cutoffs.high
        )));
    }
    Ok(InfluencerLabeling {
        cutoffs,
        labels: (0..g.node_count()).map(|i| cutoffs.classify(degree(g, i))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_buckets() {
        let c = DegreeCutoffs::default();
        assert_eq!(c.classify(30), Influencer::Medium);
        assert_eq!(c.classify(0), Influencer::Weak);
        assert_eq!(c.classify(19), Influencer::Weak);
        assert_eq!(c.classify(20), Influencer::Medium);
        assert_eq!(c.classify(60), Influencer::Medium);
        assert_eq!(c.classify(61), Influencer::Strong);
    }

    #[test]
    fn labelling_partitions_nodes() {
        let star = WeightedGraph::from_edges(70, (1..70).map(|j| (0, j, 1.0)), false).unwrap();
        let l = label_by_degree(&star, DegreeCutoffs { low: 1, high: 5 }).unwrap();
        assert_eq!(l.counts(), [0, 69, 1]);
        assert_eq!(l.counts().iter().sum::<usize>(), 70);
        assert!(label_by_degree(&star, DegreeCutoffs { low: 5, high: 5 }).is_err());
    }
}
