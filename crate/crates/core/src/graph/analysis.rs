//! Structural predicates and statistics on [`WeightedGraph`].

use std::collections::VecDeque;

use super::{NodeLabels, WeightedGraph};
use crate::error::{Error, Result};

/// True iff every node's outgoing weights sum to one within `tolerance`.
pub fn validate_row_stochastic(g: &WeightedGraph, tolerance: f64) -> bool {
    first_non_stochastic_row(g, tolerance).is_none()
}

pub(crate) fn first_non_stochastic_row(g: &WeightedGraph, tolerance: f64) -> Option<(usize, f64)> {
    (0..g.node_count())
        .map(|i| (i, g.out_weight(i)))
        .find(|&(_, sum)| (sum - 1.0).abs() > tolerance)
}

fn bfs_levels(g: &WeightedGraph, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; g.node_count()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for (v, _) in g.neighbors(u) {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

/// Forward search from node 0 plus a search on the reversed graph.
pub fn is_strongly_connected(g: &WeightedGraph) -> bool {
    if g.node_count() == 0 {
        return false;
    }
    bfs_levels(g, 0).iter().all(Option::is_some) && bfs_levels(&g.reversed(), 0).iter().all(Option::is_some)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of a strongly connected graph: gcd over all arcs `u -> v` of
/// `level(u) + 1 - level(v)` for BFS levels from node 0.
pub fn period(g: &WeightedGraph) -> Result<usize> {
    if !is_strongly_connected(g) {
        return Err(Error::NotStronglyConnected);
    }
    let level = bfs_levels(g, 0);
    let mut p = 0;
    for (u, v, _) in g.arcs() {
        let (lu, lv) = (level[u].unwrap(), level[v].unwrap());
        // lv <= lu + 1 always holds for BFS levels
        p = gcd(p, lu + 1 - lv);
        if p == 1 {
            break;
        }
    }
    Ok(p)
}

pub fn is_aperiodic(g: &WeightedGraph) -> Result<bool> {
    period(g).map(|p| p == 1)
}

/// Number of distinct out-neighbours of `i`, self-loops excluded.
pub fn degree(g: &WeightedGraph, i: usize) -> usize {
    g.neighbors(i).filter(|&(j, _)| j != i).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homophily {
    pub level: f64,
    /// Nodes without neighbours, excluded from the mean.
    pub skipped: usize,
}

/// Mean over nodes of the fraction of neighbours sharing the node's label.
/// Self-loops do not count as neighbours and isolated nodes are skipped.
pub fn homophily_level(g: &WeightedGraph, labels: &NodeLabels) -> Result<Homophily> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if labels.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", g.node_count()),
            actual: format!("{}", labels.len()),
        });
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..g.node_count() {
        let (same, all) = g
            .neighbors(i)
            .filter(|&(j, _)| j != i)
            .fold((0usize, 0usize), |(s, a), (j, _)| (s + usize::from(labels.get(j) == labels.get(i)), a + 1));
        if all > 0 {
            total += same as f64 / all as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(Homophily {
        level: total / counted as f64,
        skipped: g.node_count() - counted,
    })
}
