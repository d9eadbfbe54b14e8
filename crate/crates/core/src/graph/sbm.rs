use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeLabels, WeightedGraph};
use crate::error::{Error, Result};

/// Samples an undirected unit-weight stochastic block model.
///
/// Pairs `i < j` are visited in lexicographic order and linked with
/// probability `p_in` inside a block and `p_out` across blocks. Node
/// labels are the block indices.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(WeightedGraph, NodeLabels)> {
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
    }
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = WeightedGraph::from_edges(n, edges, false)?;
    let labels = NodeLabels::with_class_count(labels, block_sizes.len())?;
    Ok((graph, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::homophily_level;

    #[test]
    fn two_singletons_fully_across() {
        let (g, labels) = generate_sbm(&[1, 1], 0.0, 1.0, 0).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
        assert_eq!(labels.labels(), &[0, 1]);
    }

    #[test]
    fn invalid_probability() {
        assert!(matches!(generate_sbm(&[2], 1.5, 0.0, 0), Err(Error::InvalidProbability(_))));
        assert!(matches!(generate_sbm(&[2], 0.5, -0.1, 0), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate_sbm(&[30, 30], 0.3, 0.05, 11).unwrap();
        let b = generate_sbm(&[30, 30], 0.3, 0.05, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_sbm(&[30, 30], 0.3, 0.05, 12).unwrap();
        assert_ne!(a.0, c.0);
    }

    /// Expected same-label neighbour share for a symmetric two-block model.
    fn expected_homophily(block: f64, p_in: f64, p_out: f64) -> f64 {
        p_in * (block - 1.0) / (p_in * (block - 1.0) + p_out * block)
    }

    #[test]
    fn homophilic_and_heterophilic_levels() {
        // sampling oracle: average over several seeds lands near the expectation
        for (p_in, p_out) in [(0.2, 0.02), (0.02, 0.2)] {
            let expected = expected_homophily(50.0, p_in, p_out);
            let mean: f64 = (0..20)
                .map(|s| {
                    let (g, l) = generate_sbm(&[50, 50], p_in, p_out, s).unwrap();
                    homophily_level(&g, &l).unwrap().level
                })
                .sum::<f64>()
                / 20.0;
            assert!((mean - expected).abs() < 0.05, "{mean} vs {expected}");
        }
        let (g, l) = generate_sbm(&[50, 50], 0.2, 0.02, 42).unwrap();
        assert!(homophily_level(&g, &l).unwrap().level > 0.7);
        let (g, l) = generate_sbm(&[50, 50], 0.02, 0.2, 42).unwrap();
        assert!(homophily_level(&g, &l).unwrap().level < 0.3);
    }
}
