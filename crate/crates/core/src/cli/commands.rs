use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Overrides, RunConfig};
use super::Common;
use crate::diagnostics::{detect_oversmoothing, dirichlet_energy_graph, dirichlet_energy_hypergraph, EnergySeries, MIN_SERIES_LEN};
use crate::dynamics::{simulate as run_dynamics, Structure};
use crate::error::{Error, Result};
use crate::graph::{degree, homophily_level, Hypergraph, Masks, WeightedGraph};
use crate::integrators::Trajectory;
use crate::io;
use crate::pipeline::{label_by_degree, propagate_labels, simplify_network};

pub const ENGINE_VERSION: &str = concat!("odyn ", env!("CARGO_PKG_VERSION"));

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub config: Value,
    pub seed: u64,
    pub output_dir: String,
    pub engine_version: String,
    pub outputs: Vec<String>,
    /// Sibling manifests or outputs produced by the same invocation.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub related: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, args: &Common, cfg: &RunConfig, out: &Path) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        for (key, path) in [("graph", &args.graph), ("hypergraph", &args.hypergraph), ("labels", &args.labels)] {
            if let Some(p) = path {
                inputs.insert(key.to_string(), p.display().to_string());
            }
        }
        for (k, p) in args.config.iter().enumerate() {
            inputs.insert(format!("config{}", if args.config.len() > 1 { k.to_string() } else { String::new() }), p.display().to_string());
        }
        Ok(Self {
            command: command.to_string(),
            inputs,
            config: serde_json::to_value(cfg)?,
            seed: cfg.seed,
            output_dir: out.display().to_string(),
            engine_version: ENGINE_VERSION.to_string(),
            outputs: Vec::new(),
            related: Vec::new(),
        })
    }

    fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

enum Loaded {
    Graph(WeightedGraph),
    Hypergraph(Hypergraph),
}

impl Loaded {
    fn structure(&self) -> Structure<'_> {
        match self {
            Loaded::Graph(g) => Structure::Graph(g),
            Loaded::Hypergraph(h) => Structure::Hypergraph(h),
        }
    }

    fn energy(&self, x: &crate::state::StateMatrix) -> Result<f64> {
        match self {
            Loaded::Graph(g) => dirichlet_energy_graph(g, x),
            Loaded::Hypergraph(h) => dirichlet_energy_hypergraph(h, x),
        }
    }
}

fn load_structure(args: &Common, cfg: &RunConfig) -> Result<Loaded> {
    match (&args.graph, &args.hypergraph) {
        (Some(g), None) => Ok(Loaded::Graph(io::read_graph(g, cfg.directed)?)),
        (None, Some(h)) => Ok(Loaded::Hypergraph(io::read_hypergraph(h)?)),
        (Some(_), Some(_)) => Err(Error::InvalidConfig("give either --graph or --hypergraph, not both".into())),
        (None, None) => Err(Error::InvalidConfig("--graph or --hypergraph is required".into())),
    }
}

fn require_graph(args: &Common, cfg: &RunConfig) -> Result<WeightedGraph> {
    let path = args.graph.as_ref().ok_or_else(|| Error::InvalidConfig("--graph is required".into()))?;
    io::read_graph(path, cfg.directed)
}

fn single_config(args: &Common) -> Result<(RunConfig, Option<Value>)> {
    if args.config.len() > 1 {
        return Err(Error::InvalidConfig("this command takes at most one --config".into()));
    }
    RunConfig::load(args.config.first().map(PathBuf::as_path), &args.overrides())
}

struct RunResult {
    trajectory: Trajectory,
    energies: Vec<f64>,
}

fn run_simulation(structure: &Loaded, cfg: &RunConfig) -> Result<RunResult> {
    let x0 = cfg.initial_state(structure.structure().node_count());
    let trajectory = run_dynamics(&cfg.dynamic_spec(), structure.structure(), &x0, &cfg.integrator())?;
    let energies = trajectory.states.iter().map(|x| structure.energy(x)).collect::<Result<Vec<_>>>()?;
    log::info!(
        "{:?}: {} snapshots, {} rhs evaluations",
        cfg.kind,
        trajectory.len(),
        trajectory.stats.rhs_evaluations
    );
    Ok(RunResult { trajectory, energies })
}

fn summary(result: &RunResult) -> Result<Value> {
    let series = EnergySeries::new(result.trajectory.times.clone(), result.energies.clone())?;
    let detection = if series.len() >= MIN_SERIES_LEN {
        serde_json::to_value(detect_oversmoothing(&series)?)?
    } else {
        Value::Null
    };
    Ok(json!({
        "snapshots": result.trajectory.len(),
        "t_end": result.trajectory.times.last(),
        "initial_energy": result.energies.first(),
        "final_energy": result.energies.last(),
        "energy_ratio": series.ratio(),
        "oversmoothing": detection,
        "stats": result.trajectory.stats,
    }))
}

/// Writes trajectory, energy, final state and summary into `out`.
fn write_run(out: &Path, result: &RunResult) -> Result<Vec<String>> {
    io::write_trajectory(&out.join("trajectory.csv"), &result.trajectory)?;
    io::write_energy(&out.join("energy.csv"), io::ENERGY_HEADER, &result.trajectory.times, &result.energies)?;
    io::write_state(&out.join("final_state.csv"), result.trajectory.last())?;
    write_json(&out.join("summary.json"), &summary(result)?)?;
    Ok(["trajectory.csv", "energy.csv", "final_state.csv", "summary.json"]
        .map(String::from)
        .to_vec())
}

pub fn simulate(args: &Common) -> Result<()> {
    let (cfg, _) = single_config(args)?;
    let structure = load_structure(args, &cfg)?;
    let result = run_simulation(&structure, &cfg)?;
    prepare_out(&args.out)?;
    let mut manifest = RunManifest::new("simulate", args, &cfg, &args.out)?;
    manifest.outputs = write_run(&args.out, &result)?;
    manifest.write(&args.out.join("manifest.json"))
}

pub fn energy(args: &Common) -> Result<()> {
    let overrides = args.overrides();
    let mut runs: Vec<(String, RunConfig)> = Vec::new();
    let mut used = HashSet::new();
    if args.config.is_empty() {
        runs.push(("default".into(), RunConfig::resolve(None, &overrides)?));
    }
    for path in &args.config {
        let stem = path.file_stem().map_or("config".into(), |s| s.to_string_lossy().into_owned());
        let mut name = stem.clone();
        let mut k = 1;
        while !used.insert(name.clone()) {
            name = format!("{stem}_{k}");
            k += 1;
        }
        runs.push((name, RunConfig::load(Some(path), &overrides)?.0));
    }
    let structures = runs
        .iter()
        .map(|(_, cfg)| load_structure(args, cfg))
        .collect::<Result<Vec<_>>>()?;
    prepare_out(&args.out)?;
    let files: Vec<(String, String)> = runs
        .iter()
        .map(|(name, _)| (format!("energy_{name}.csv"), format!("manifest_{name}.json")))
        .collect();
    let mut summaries = BTreeMap::new();
    for (((name, cfg), structure), (csv, manifest_name)) in runs.iter().zip(&structures).zip(&files) {
        let result = run_simulation(structure, cfg)?;
        let steps: Vec<f64> = (0..result.energies.len()).map(|k| k as f64).collect();
        io::write_energy(&args.out.join(csv), io::SERIES_HEADER, &steps, &result.energies)?;
        summaries.insert(name.clone(), summary(&result)?);
        let mut manifest = RunManifest::new("energy", args, cfg, &args.out)?;
        manifest.outputs = vec![csv.clone()];
        manifest.related = files
            .iter()
            .filter(|(c, _)| c != csv)
            .flat_map(|(c, m)| [c.clone(), m.clone()])
            .collect();
        manifest.write(&args.out.join(manifest_name))?;
    }
    write_json(&args.out.join("summary.json"), &summaries)?;
    let base = runs.first().map(|(_, c)| c.clone()).unwrap_or_default();
    let mut manifest = RunManifest::new("energy", args, &base, &args.out)?;
    manifest.config = serde_json::to_value(runs.iter().map(|(n, c)| (n.clone(), c.clone())).collect::<BTreeMap<_, _>>())?;
    manifest.outputs = files.iter().map(|(c, _)| c.clone()).chain(["summary.json".to_string()]).collect();
    manifest.related = files.iter().map(|(_, m)| m.clone()).collect();
    manifest.write(&args.out.join("manifest.json"))
}

pub fn simplify(args: &Common) -> Result<()> {
    let (cfg, _) = single_config(args)?;
    let g = require_graph(args, &cfg)?;
    let simplified = simplify_network(&g, &cfg.simplify())?;
    prepare_out(&args.out)?;
    io::write_edges(&args.out.join("simplified.csv"), simplified.original_edges())?;
    write_json(&args.out.join("report.json"), &simplified.report)?;
    let mut manifest = RunManifest::new("simplify", args, &cfg, &args.out)?;
    manifest.outputs = vec!["simplified.csv".into(), "report.json".into()];
    manifest.write(&args.out.join("manifest.json"))
}

pub fn classify(args: &Common) -> Result<()> {
    let (cfg, _) = single_config(args)?;
    let g = require_graph(args, &cfg)?;
    let path = args.labels.as_ref().ok_or_else(|| Error::InvalidConfig("--labels is required".into()))?;
    let mut labels = io::read_labels(path)?;
    if labels.masks.is_none() {
        let masks = Masks::stratified(labels.labels(), labels.class_count(), cfg.train_fraction, cfg.validation_fraction, cfg.seed)?;
        labels = labels.with_masks(masks)?;
    }
    let result = propagate_labels(&g, &labels, &cfg.influence(), &cfg.integrator())?;
    prepare_out(&args.out)?;
    let masks = labels.masks.as_ref().expect("masks set above");
    let split_of = |i: usize| {
        if masks.train.binary_search(&i).is_ok() {
            "train"
        } else if masks.validation.binary_search(&i).is_ok() {
            "validation"
        } else if masks.test.binary_search(&i).is_ok() {
            "test"
        } else {
            ""
        }
    };
    let mut text = String::from("node,label,prediction,split\n");
    for (i, p) in result.predictions.iter().enumerate() {
        text.push_str(&format!("{i},{},{p},{}\n", labels.get(i), split_of(i)));
    }
    let pred = args.out.join("predictions.csv");
    fs::write(&pred, text).map_err(|e| Error::io(&pred, e))?;
    write_json(&args.out.join("accuracy.json"), &result.accuracy)?;
    let mut manifest = RunManifest::new("classify", args, &cfg, &args.out)?;
    manifest.outputs = vec!["predictions.csv".into(), "accuracy.json".into()];
    manifest.write(&args.out.join("manifest.json"))
}

pub fn homophily(args: &Common) -> Result<()> {
    let (cfg, _) = single_config(args)?;
    let g = require_graph(args, &cfg)?;
    let mut outputs = vec!["influencers.csv".to_string()];
    let mut report = json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
    });
    if let Some(path) = &args.labels {
        let labels = io::read_labels(path)?;
        let h = homophily_level(&g, &labels)?;
        report["homophily_level"] = json!(h.level);
        report["skipped_isolated"] = json!(h.skipped);
    }
    let labelling = label_by_degree(&g, cfg.degree_cutoffs())?;
    let counts = labelling.counts();
    report["influencers"] = json!({"weak": counts[0], "medium": counts[1], "strong": counts[2]});
    prepare_out(&args.out)?;
    let mut text = String::from("node,degree,category\n");
    for (i, l) in labelling.labels.iter().enumerate() {
        text.push_str(&format!("{i},{},{}\n", degree(&g, i), l.name()));
    }
    let path = args.out.join("influencers.csv");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    write_json(&args.out.join("homophily.json"), &report)?;
    outputs.push("homophily.json".into());
    let mut manifest = RunManifest::new("homophily", args, &cfg, &args.out)?;
    manifest.outputs = outputs;
    manifest.write(&args.out.join("manifest.json"))
}

pub fn sweep(args: &Common) -> Result<()> {
    let (cfg, file) = single_config(args)?;
    let overrides: Overrides = args.overrides();
    let runs = cfg.expand_sweep(file.as_ref(), &overrides)?;
    let structure = load_structure(args, &cfg)?;
    prepare_out(&args.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    let width = runs.len().saturating_sub(1).to_string().len().max(3);
    let results: Vec<Result<Value>> = pool.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(k, (params, run_cfg))| {
                let name = format!("run_{k:0width$}");
                let dir = args.out.join(&name);
                prepare_out(&dir)?;
                let mut manifest = RunManifest::new("sweep", args, run_cfg, &dir)?;
                manifest.related = vec!["../manifest.json".into()];
                let row = match run_simulation(&structure, run_cfg) {
                    Ok(result) => {
                        manifest.outputs = write_run(&dir, &result)?;
                        json!({"run": name, "params": params, "status": "ok", "summary": summary(&result)?})
                    }
                    Err(e) if e.exit_code() == 3 => {
                        json!({"run": name, "params": params, "status": "failed", "error": e.to_string()})
                    }
                    Err(e) => return Err(e),
                };
                manifest.write(&dir.join("manifest.json"))?;
                Ok(row)
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_json(&args.out.join("sweep.json"), &rows)?;
    let mut manifest = RunManifest::new("sweep", args, &cfg, &args.out)?;
    manifest.outputs = vec!["sweep.json".into()];
    manifest.related = (0..runs.len()).map(|k| format!("run_{k:0width$}/manifest.json")).collect();
    manifest.write(&args.out.join("manifest.json"))
}
