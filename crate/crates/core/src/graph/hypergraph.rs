use super::WeightedGraph;
use crate::error::{Error, Result};

/// Hypergraph given by node memberships of hyperedges.
///
/// Each membership `(i, e)` carries a positive weight `omega(i, e)`; the
/// pairwise weight inside a hyperedge is `w(e, i, j) = omega(i, e) * omega(j, e)`,
/// which is non-zero exactly when both nodes belong to `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    node_count: usize,
    members: Vec<Vec<usize>>,
    member_weights: Vec<Vec<f64>>,
    node_edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Builds from `(node, hyperedge, weight)` membership triples. Hyperedge
    /// ids must be dense: every id below the largest one needs a member.
    pub fn from_memberships<I>(node_count: usize, memberships: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (node, edge, w) in memberships {
            if node >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: node,
                    node_count,
                });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidWeight {
                    source_node: node,
                    target: edge,
                    weight: w,
                });
            }
            entries.push((edge, node, w));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEdge {
                source_node: w[0].1,
                target: w[0].0,
            });
        }
        let edge_count = entries.last().map_or(0, |e| e.0 + 1);
        let mut members = vec![Vec::new(); edge_count];
        let mut member_weights = vec![Vec::new(); edge_count];
        let mut node_edges = vec![Vec::new(); node_count];
        for (edge, node, w) in entries {
            members[edge].push(node);
            member_weights[edge].push(w);
            node_edges[node].push(edge);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::EmptyHyperedge(empty));
        }
        Ok(Self {
            node_count,
            members,
            member_weights,
            node_edges,
        })
    }

    /// Unit-weight hypergraph from member lists.
    pub fn from_hyperedges(node_count: usize, hyperedges: &[Vec<usize>]) -> Result<Self> {
        if let Some(empty) = hyperedges.iter().position(Vec::is_empty) {
            return Err(Error::EmptyHyperedge(empty));
        }
        Self::from_memberships(
            node_count,
            hyperedges
                .iter()
                .enumerate()
                .flat_map(|(e, nodes)| nodes.iter().map(move |&i| (i, e, 1.0))),
        )
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn hyperedge_count(&self) -> usize {
        self.members.len()
    }

    /// Sorted members of hyperedge `e`.
    pub fn members(&self, e: usize) -> &[usize] {
        &self.members[e]
    }

    pub fn member_weights(&self, e: usize) -> &[f64] {
        &self.member_weights[e]
    }

    /// Hyperedges containing node `i`.
    pub fn edges_of(&self, i: usize) -> &[usize] {
        &self.node_edges[i]
    }

    pub fn contains(&self, e: usize, i: usize) -> bool {
        self.members[e].binary_search(&i).is_ok()
    }

    /// `w(e, i, j)`; zero unless both nodes are members of `e`.
    pub fn triple_weight(&self, e: usize, i: usize, j: usize) -> f64 {
        let m = &self.members[e];
        match (m.binary_search(&i), m.binary_search(&j)) {
            (Ok(a), Ok(b)) => self.member_weights[e][a] * self.member_weights[e][b],
            _ => 0.0,
        }
    }

    /// Memberships as `(node, hyperedge, weight)` in hyperedge order.
    pub fn memberships(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.members.iter().enumerate().flat_map(move |(e, nodes)| {
            nodes
                .iter()
                .zip(&self.member_weights[e])
                .map(move |(&i, &w)| (i, e, w))
        })
    }

    /// Undirected graph linking every pair of distinct nodes that share a
    /// hyperedge, weighted by the number of shared hyperedges.
    pub fn clique_expansion(&self) -> WeightedGraph {
        let mut counts = std::collections::BTreeMap::new();
        for nodes in &self.members {
            for (a, &i) in nodes.iter().enumerate() {
                for &j in &nodes[a + 1..] {
                    *counts.entry((i, j)).or_insert(0.0) += 1.0;
                }
            }
        }
        WeightedGraph::from_edges(self.node_count, counts.into_iter().map(|((i, j), c)| (i, j, c)), false)
            .expect("clique expansion edges are unique")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incidence_and_triple_weights() {
        let h = Hypergraph::from_memberships(4, [(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0), (3, 1, 0.5)]).unwrap();
        assert_eq!(h.hyperedge_count(), 2);
        assert_eq!(h.edges_of(1), &[0, 1]);
        assert!(h.edges_of(2).is_empty());
        assert_eq!(h.triple_weight(0, 0, 1), 2.0);
        assert_eq!(h.triple_weight(1, 1, 3), 0.5);
        assert_eq!(h.triple_weight(0, 0, 3), 0.0);
        assert_eq!(h.memberships().count(), 4);
    }

    #[test]
    fn rejects_empty_hyperedges_and_bad_weights() {
        assert!(matches!(
            Hypergraph::from_memberships(2, [(0, 1, 1.0)]),
            Err(Error::EmptyHyperedge(0))
        ));
        assert!(matches!(
            Hypergraph::from_hyperedges(2, &[vec![0], vec![]]),
            Err(Error::EmptyHyperedge(1))
        ));
        assert!(Hypergraph::from_memberships(2, [(0, 0, 0.0)]).is_err());
        assert!(Hypergraph::from_memberships(2, [(0, 0, 1.0), (0, 0, 1.0)]).is_err());
    }

    #[test]
    fn clique_expansion_counts_shared_hyperedges() {
        let h = Hypergraph::from_hyperedges(3, &[vec![0, 1, 2], vec![0, 1]]).unwrap();
        let g = h.clique_expansion();
        assert_eq!(g.weight(0, 1), Some(2.0));
        assert_eq!(g.weight(1, 2), Some(1.0));
        assert_eq!(g.edge_count(), 3);
    }
}
