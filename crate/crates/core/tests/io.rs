use std::fs::File;

use odyn::graph::{Hypergraph, Masks, NodeLabels, WeightedGraph};
use odyn::io;
use odyn::{Error, StateMatrix};
use proptest::prelude::*;

fn edges_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..15).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0.001f64..10.0);
        (Just(n), prop::collection::vec(edge, 0..40))
    })
}

fn dedup(edges: Vec<(usize, usize, f64)>, directed: bool) -> Vec<(usize, usize, f64)> {
    let mut seen = std::collections::HashSet::new();
    edges
        .into_iter()
        .filter(|&(i, j, _)| {
            let key = if directed { (i, j) } else { (i.min(j), i.max(j)) };
            seen.insert(key)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_round_trip((n, edges) in edges_strategy(), directed in any::<bool>()) {
        let g = WeightedGraph::from_edges(n, dedup(edges, directed), directed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        io::write_graph(&path, &g).unwrap();
        let back = io::parse_graph(File::open(&path).unwrap(), &path, directed, Some(n)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn hypergraph_round_trip(n in 2usize..12, raw in prop::collection::vec(prop::collection::vec(0usize..12, 1..5), 1..8)) {
        let edges: Vec<Vec<usize>> = raw
            .into_iter()
            .map(|mut e| {
                e.iter_mut().for_each(|i| *i %= n);
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        let h = Hypergraph::from_hyperedges(n, &edges).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        io::write_hypergraph(&path, &h).unwrap();
        let back = io::parse_hypergraph(File::open(&path).unwrap(), &path, Some(n)).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn state_round_trip_is_exact(rows in 1usize..8, cols in 1usize..5, seed in any::<u64>()) {
        let x = StateMatrix::random_normal(rows, cols, seed).scaled(1e3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        io::write_state(&path, &x).unwrap();
        prop_assert_eq!(io::read_state(&path).unwrap(), x);
    }

    #[test]
    fn labels_round_trip(labels in prop::collection::vec(0usize..4, 1..30), with_masks in any::<bool>()) {
        let n = labels.len();
        let mut l = NodeLabels::new(labels);
        if with_masks {
            let train: Vec<usize> = (0..n).step_by(3).collect();
            let validation: Vec<usize> = (1..n).step_by(3).collect();
            let test: Vec<usize> = (2..n).step_by(3).collect();
            l = l.with_masks(Masks::new(train, validation, test).unwrap()).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        io::write_labels(&path, &l).unwrap();
        prop_assert_eq!(io::read_labels(&path).unwrap(), l);
    }
}

#[test]
fn energy_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let times = [0.0, 0.5, 1.0];
    let energies = [3.25, 1.0 / 3.0, 1e-300];
    io::write_energy(&path, io::ENERGY_HEADER, &times, &energies).unwrap();
    let (t, e) = io::read_energy(&path, io::ENERGY_HEADER).unwrap();
    assert_eq!((t.as_slice(), e.as_slice()), (&times[..], &energies[..]));
}

fn parse_error_line(text: &str) -> u64 {
    match io::parse_graph(text.as_bytes(), "in.csv".as_ref(), false, None) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_graphs_report_lines() {
    assert_eq!(parse_error_line("from,to,w\n0,1,1\n"), 1);
    assert_eq!(parse_error_line("src,dst,weight\n0,1,1\n1,2\n"), 3);
    assert_eq!(parse_error_line("src,dst,weight\n0,1,1\n1,x,1\n"), 3);
    assert_eq!(parse_error_line("src,dst,weight\n0,1,1\n1,0,2\n"), 3);
}
