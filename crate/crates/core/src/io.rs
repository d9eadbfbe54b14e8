//! CSV readers and writers.
//!
//! | file        | header                       |
//! |-------------|------------------------------|
//! | graph       | `src,dst,weight`             |
//! | hypergraph  | `node,hyperedge,weight`      |
//! | labels      | `node,label` (optional `split`) |
//! | state       | none, one row per node       |
//! | trajectory  | `t,node,feature_index,value` |
//! | energy      | `t,energy`                   |
//! | series      | `step,energy`                |
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading back a written file reproduces the values exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Hypergraph, Masks, NodeLabels, WeightedGraph};
use crate::integrators::Trajectory;
use crate::state::StateMatrix;

pub const GRAPH_HEADER: [&str; 3] = ["src", "dst", "weight"];
pub const HYPERGRAPH_HEADER: [&str; 3] = ["node", "hyperedge", "weight"];
pub const LABEL_HEADER: [&str; 2] = ["node", "label"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "node", "feature_index", "value"];
pub const ENERGY_HEADER: [&str; 2] = ["t", "energy"];
pub const SERIES_HEADER: [&str; 2] = ["step", "energy"];

struct Rows {
    path: PathBuf,
    records: Vec<(u64, csv::StringRecord)>,
}

impl Rows {
    fn parse<T: FromStr>(&self, line: u64, record: &csv::StringRecord, col: usize, what: &str) -> Result<T> {
        let field = record.get(col).unwrap_or("").trim();
        field.parse().map_err(|_| Error::Parse {
            path: self.path.clone(),
            line,
            message: format!("cannot parse {what} `{field}`"),
        })
    }

    fn error(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }
}

fn read_csv<R: Read>(reader: R, path: &Path, header: Option<&[&str]>, optional: &[&str]) -> Result<(Vec<String>, Rows)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = Vec::new();
    let mut columns = Vec::new();
    let parse_err = |line: u64, e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    };
    for (k, rec) in rdr.records().enumerate() {
        let line = k as u64 + 1;
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line());
            parse_err(line, e)
        })?;
        let line = rec.position().map_or(line, |p| p.line());
        if k == 0 {
            if let Some(expected) = header {
                let got: Vec<String> = rec.iter().map(|f| f.trim().to_string()).collect();
                let base_ok = got.len() >= expected.len() && got.iter().zip(expected).all(|(a, b)| a == b);
                let extra_ok = got[expected.len().min(got.len())..].iter().all(|c| optional.contains(&c.as_str()));
                if !base_ok || !extra_ok {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
                    });
                }
                columns = got;
                continue;
            }
        }
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if !columns.is_empty() && rec.len() != columns.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        records.push((line, rec));
    }
    Ok((
        columns,
        Rows {
            path: path.to_path_buf(),
            records,
        },
    ))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish<W: Write>(path: &Path, mut w: W) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses an edge list; the node count is one more than the largest index
/// unless `node_count` is given.
pub fn parse_graph<R: Read>(reader: R, path: &Path, directed: bool, node_count: Option<usize>) -> Result<WeightedGraph> {
    let (_, rows) = read_csv(reader, path, Some(&GRAPH_HEADER), &[])?;
    let mut edges = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let s: usize = rows.parse(*line, rec, 0, "src")?;
        let t: usize = rows.parse(*line, rec, 1, "dst")?;
        let w: f64 = rows.parse(*line, rec, 2, "weight")?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(rows.error(*line, format!("weight {w} must be finite and non-negative")));
        }
        edges.push((*line, s, t, w));
    }
    let n = node_count.unwrap_or_else(|| edges.iter().map(|e| e.1.max(e.2) + 1).max().unwrap_or(0));
    if let Some(&(line, s, t, _)) = edges.iter().find(|e| e.1 >= n || e.2 >= n) {
        return Err(rows.error(line, format!("edge ({s}, {t}) outside {n} nodes")));
    }
    WeightedGraph::from_edges(n, edges.iter().map(|e| (e.1, e.2, e.3)), directed).map_err(|e| match e {
        Error::DuplicateEdge { source_node, target } => {
            let line = edges
                .iter()
                .filter(|e| (e.1, e.2) == (source_node, target) || (!directed && (e.2, e.1) == (source_node, target)))
                .map(|e| e.0)
                .nth(1)
                .unwrap_or(0);
            rows.error(line, format!("duplicate edge ({source_node}, {target})"))
        }
        other => other,
    })
}

pub fn read_graph(path: &Path, directed: bool) -> Result<WeightedGraph> {
    parse_graph(open(path)?, path, directed, None)
}

pub fn write_graph_edges<W: Write>(w: W, edges: impl Iterator<Item = (usize, usize, f64)>) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(GRAPH_HEADER)?;
    for (s, t, x) in edges {
        wtr.write_record([s.to_string(), t.to_string(), x.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_graph(path: &Path, g: &WeightedGraph) -> Result<()> {
    write_edges(path, g.edges())
}

/// Writes an edge list given in arbitrary node indices.
pub fn write_edges(path: &Path, edges: impl Iterator<Item = (usize, usize, f64)>) -> Result<()> {
    let mut out = create(path)?;
    write_graph_edges(&mut out, edges).map_err(|e| csv_error(path, e))?;
    finish(path, out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn parse_hypergraph<R: Read>(reader: R, path: &Path, node_count: Option<usize>) -> Result<Hypergraph> {
    let (_, rows) = read_csv(reader, path, Some(&HYPERGRAPH_HEADER), &[])?;
    let mut entries = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let i: usize = rows.parse(*line, rec, 0, "node")?;
        let e: usize = rows.parse(*line, rec, 1, "hyperedge")?;
        let w: f64 = rows.parse(*line, rec, 2, "weight")?;
        if !(w.is_finite() && w > 0.0) {
            return Err(rows.error(*line, format!("membership weight {w} must be positive")));
        }
        entries.push((i, e, w));
    }
    let n = node_count.unwrap_or_else(|| entries.iter().map(|e| e.0 + 1).max().unwrap_or(0));
    Hypergraph::from_memberships(n, entries)
}

pub fn read_hypergraph(path: &Path) -> Result<Hypergraph> {
    parse_hypergraph(open(path)?, path, None)
}

pub fn write_hypergraph(path: &Path, h: &Hypergraph) -> Result<()> {
    let mut out = create(path)?;
    {
        let mut wtr = csv::Writer::from_writer(&mut out);
        let mut run = || -> csv::Result<()> {
            wtr.write_record(HYPERGRAPH_HEADER)?;
            for (i, e, w) in h.memberships() {
                wtr.write_record([i.to_string(), e.to_string(), w.to_string()])?;
            }
            wtr.flush()?;
            Ok(())
        };
        run().map_err(|e| csv_error(path, e))?;
    }
    finish(path, out)
}

/// Labels for nodes `0..n`, every node exactly once. An optional `split`
/// column (`train`, `validation`, `test` or empty) defines masks.
pub fn parse_labels<R: Read>(reader: R, path: &Path) -> Result<NodeLabels> {
    let (columns, rows) = read_csv(reader, path, Some(&LABEL_HEADER), &["split"])?;
    let with_split = columns.len() == 3;
    let mut entries = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let i: usize = rows.parse(*line, rec, 0, "node")?;
        let l: usize = rows.parse(*line, rec, 1, "label")?;
        let split = if with_split { rec.get(2).unwrap_or("").trim().to_string() } else { String::new() };
        entries.push((*line, i, l, split));
    }
    let n = entries.len();
    let mut labels = vec![None; n];
    let mut masks = Masks::default();
    for (line, i, l, split) in &entries {
        if *i >= n {
            return Err(rows.error(*line, format!("node {i} outside 0..{n}")));
        }
        if labels[*i].replace(*l).is_some() {
            return Err(rows.error(*line, format!("node {i} labelled twice")));
        }
        match split.as_str() {
            "" => {}
            "train" => masks.train.push(*i),
            "validation" => masks.validation.push(*i),
            "test" => masks.test.push(*i),
            other => return Err(rows.error(*line, format!("unknown split `{other}`"))),
        }
    }
    let labels = NodeLabels::new(labels.into_iter().map(|l| l.expect("every slot filled")).collect());
    if with_split {
        for m in [&mut masks.train, &mut masks.validation, &mut masks.test] {
            m.sort_unstable();
        }
        labels.with_masks(masks)
    } else {
        Ok(labels)
    }
}

pub fn read_labels(path: &Path) -> Result<NodeLabels> {
    parse_labels(open(path)?, path)
}

pub fn write_labels(path: &Path, labels: &NodeLabels) -> Result<()> {
    let mut out = create(path)?;
    let split_of = |i: usize| {
        labels.masks.as_ref().map(|m| {
            if m.train.binary_search(&i).is_ok() {
                "train"
            } else if m.validation.binary_search(&i).is_ok() {
                "validation"
            } else if m.test.binary_search(&i).is_ok() {
                "test"
            } else {
                ""
            }
        })
    };
    let result = (|| -> std::io::Result<()> {
        if labels.masks.is_some() {
            writeln!(out, "node,label,split")?;
        } else {
            writeln!(out, "node,label")?;
        }
        for (i, l) in labels.labels().iter().enumerate() {
            match split_of(i) {
                Some(s) => writeln!(out, "{i},{l},{s}")?,
                None => writeln!(out, "{i},{l}")?,
            }
        }
        Ok(())
    })();
    result.map_err(|e| Error::io(path, e))?;
    finish(path, out)
}

/// Headerless matrix, one row per node.
pub fn parse_state<R: Read>(reader: R, path: &Path) -> Result<StateMatrix> {
    let (_, rows) = read_csv(reader, path, None, &[])?;
    let mut data = Vec::new();
    let mut cols = None;
    for (line, rec) in &rows.records {
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(rows.error(*line, format!("expected {c} values, found {}", rec.len())));
            }
            _ => {}
        }
        for k in 0..rec.len() {
            let v: f64 = rows.parse(*line, rec, k, "value")?;
            if !v.is_finite() {
                return Err(rows.error(*line, format!("non-finite value {v}")));
            }
            data.push(v);
        }
    }
    StateMatrix::from_vec(rows.records.len(), cols.unwrap_or(0), data)
}

pub fn read_state(path: &Path) -> Result<StateMatrix> {
    parse_state(open(path)?, path)
}

pub fn write_state(path: &Path, x: &StateMatrix) -> Result<()> {
    let mut out = create(path)?;
    let result = (|| -> std::io::Result<()> {
        for row in x.row_iter() {
            let fields: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    })();
    result.map_err(|e| Error::io(path, e))?;
    finish(path, out)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = create(path)?;
    let result = (|| -> std::io::Result<()> {
        writeln!(out, "{}", TRAJECTORY_HEADER.join(","))?;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            for (i, row) in x.row_iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    writeln!(out, "{t},{i},{k},{v}")?;
                }
            }
        }
        Ok(())
    })();
    result.map_err(|e| Error::io(path, e))?;
    finish(path, out)
}

/// `(t, energy)` pairs under `header`.
pub fn write_energy(path: &Path, header: [&str; 2], times: &[f64], energies: &[f64]) -> Result<()> {
    let mut out = create(path)?;
    let result = (|| -> std::io::Result<()> {
        writeln!(out, "{}", header.join(","))?;
        for (t, e) in times.iter().zip(energies) {
            writeln!(out, "{t},{e}")?;
        }
        Ok(())
    })();
    result.map_err(|e| Error::io(path, e))?;
    finish(path, out)
}

/// Reads a two-column energy file with the given header.
pub fn read_energy(path: &Path, header: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, rows) = read_csv(open(path)?, path, Some(&header), &[])?;
    let mut times = Vec::new();
    let mut energies = Vec::new();
    for (line, rec) in &rows.records {
        times.push(rows.parse(*line, rec, 0, header[0])?);
        energies.push(rows.parse(*line, rec, 1, "energy")?);
    }
    Ok((times, energies))
}
