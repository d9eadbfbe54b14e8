use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{DynamicKind, DynamicSpec, KernelKind};
use crate::error::{Error, Result};
use crate::influence::{presets, InfluenceConfig, InfluenceMode, Potential, SimilarityKind, SimilaritySpec};
use crate::integrators::{IntegratorConfig, Scheme};
use crate::pipeline::{DegreeCutoffs, SimilaritySource, SimplifyConfig};
use crate::state::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Normal,
    Uniform,
    Unit,
    /// Every entry 1.
    Constant,
}

/// Flat run configuration shared by every command. Unset keys take the
/// defaults below; a `preset` names a benchmark row whose influence
/// parameters apply before the file's own keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: DynamicKind,
    pub directed: bool,
    pub preset: Option<String>,
    pub eps1: f64,
    pub eps2: f64,
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub mode: InfluenceMode,
    pub potential: Potential,
    pub similarity: SimilarityKind,
    pub temperature: Option<f64>,
    pub hk_radius: Option<f64>,
    pub kernel: KernelKind,
    pub scheme: Scheme,
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub record_interval: Option<f64>,
    pub seed: u64,
    pub init: InitKind,
    pub feature_dim: Option<usize>,
    pub weight_cutoff: f64,
    pub drop_isolated: bool,
    pub similarity_source: SimilaritySource,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub degree_low: usize,
    pub degree_high: usize,
    /// Parameter grid for `sweep`: key -> list of values.
    pub sweep: Option<BTreeMap<String, Vec<Value>>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let influence = InfluenceConfig::identity();
        let integrator = IntegratorConfig::default();
        let cutoffs = DegreeCutoffs::default();
        Self {
            kind: DynamicKind::default(),
            directed: false,
            preset: None,
            eps1: influence.eps1,
            eps2: influence.eps2,
            mu: influence.mu,
            nu: influence.nu,
            lambda: influence.lambda,
            mode: influence.mode,
            potential: influence.potential,
            similarity: SimilarityKind::default(),
            temperature: None,
            hk_radius: None,
            kernel: KernelKind::default(),
            scheme: integrator.scheme,
            step: integrator.step,
            rtol: integrator.rtol,
            atol: integrator.atol,
            t_end: integrator.t_end,
            max_steps: integrator.max_steps,
            record_interval: integrator.record_interval,
            seed: 0,
            init: InitKind::default(),
            feature_dim: None,
            weight_cutoff: 0.05,
            drop_isolated: true,
            similarity_source: SimilaritySource::default(),
            train_fraction: 1.0 / 3.0,
            validation_fraction: 1.0 / 3.0,
            degree_low: cutoffs.low,
            degree_high: cutoffs.high,
            sweep: None,
        }
    }
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub t_end: Option<f64>,
}

impl RunConfig {
    /// defaults < preset < file keys < flags.
    pub fn resolve(file: Option<&Value>, overrides: &Overrides) -> Result<Self> {
        let mut merged = match serde_json::to_value(Self::default())? {
            Value::Object(m) => m,
            _ => unreachable!("config serialises to an object"),
        };
        let file_map = match file {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(other) => return Err(Error::InvalidConfig(format!("config must be a JSON object, got {other}"))),
        };
        if let Some(name) = file_map.get("preset").and_then(Value::as_str) {
            let preset = presets::find(name).ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{name}`")))?;
            let influence = serde_json::to_value(preset.influence())?;
            if let Value::Object(m) = influence {
                merged.extend(m);
            }
            merged.insert("t_end".into(), Value::from(preset.t_end));
        }
        merged.extend(file_map);
        let mut cfg: Self = serde_json::from_value(Value::Object(merged))?;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(scheme) = overrides.scheme {
            cfg.scheme = scheme;
        }
        if let Some(t) = overrides.t_end {
            cfg.t_end = t;
        }
        cfg.integrator().validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<(Self, Option<Value>)> {
        let file = match path {
            None => None,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Some(serde_json::from_str::<Value>(&text).map_err(|e| Error::Parse {
                    path: p.to_path_buf(),
                    line: e.line() as u64,
                    message: e.to_string(),
                })?)
            }
        };
        let cfg = Self::resolve(file.as_ref(), overrides)?;
        Ok((cfg, file))
    }

    pub fn influence(&self) -> InfluenceConfig {
        InfluenceConfig {
            eps1: self.eps1,
            eps2: self.eps2,
            mu: self.mu,
            nu: self.nu,
            lambda: self.lambda,
            mode: self.mode,
            potential: self.potential,
        }
    }

    pub fn similarity_spec(&self) -> SimilaritySpec {
        SimilaritySpec {
            kind: self.similarity,
            temperature: self.temperature,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            scheme: self.scheme,
            step: self.step,
            rtol: self.rtol,
            atol: self.atol,
            t_end: self.t_end,
            max_steps: self.max_steps,
            record_interval: self.record_interval,
        }
    }

    pub fn dynamic_spec(&self) -> DynamicSpec {
        DynamicSpec {
            kind: self.kind,
            influence: self.influence(),
            similarity: self.similarity_spec(),
            hk_radius: self.hk_radius,
            kernel: self.kernel,
        }
    }

    pub fn simplify(&self) -> SimplifyConfig {
        SimplifyConfig {
            weight_cutoff: self.weight_cutoff,
            drop_isolated: self.drop_isolated,
            similarity_source: self.similarity_source,
            dynamics_similarity: self.similarity_spec(),
            influence: self.influence(),
            integrator: self.integrator(),
            seed: self.seed,
            feature_dim: self.feature_dim.unwrap_or(20),
        }
    }

    pub fn degree_cutoffs(&self) -> DegreeCutoffs {
        DegreeCutoffs {
            low: self.degree_low,
            high: self.degree_high,
        }
    }

    pub fn initial_state(&self, nodes: usize) -> StateMatrix {
        let d = self.feature_dim.unwrap_or(8);
        match self.init {
            InitKind::Normal => StateMatrix::random_normal(nodes, d, self.seed),
            InitKind::Uniform => StateMatrix::random_uniform(nodes, d, 0.0, 1.0, self.seed),
            InitKind::Unit => StateMatrix::random_unit_rows(nodes, d, self.seed),
            InitKind::Constant => StateMatrix::from_vec(nodes, d, vec![1.0; nodes * d]).expect("shape matches"),
        }
    }

    /// Every combination of the sweep grid applied on top of `file`, in
    /// lexicographic key order with the last key varying fastest.
    pub fn expand_sweep(&self, file: Option<&Value>, overrides: &Overrides) -> Result<Vec<(BTreeMap<String, Value>, Self)>> {
        let grid = match &self.sweep {
            Some(g) if !g.is_empty() => g.clone(),
            _ => return Err(Error::InvalidConfig("sweep needs a non-empty `sweep` object".into())),
        };
        if let Some((key, _)) = grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidConfig(format!("sweep key `{key}` has no values")));
        }
        let mut base = match file {
            Some(Value::Object(m)) => m.clone(),
            _ => Map::new(),
        };
        base.remove("sweep");
        let keys: Vec<&String> = grid.keys().collect();
        let mut combos: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new()];
        for key in &keys {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    grid[*key].iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert((*key).clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|combo| {
                let mut m = base.clone();
                m.extend(combo.clone());
                let cfg = Self::resolve(Some(&Value::Object(m)), overrides)?;
                Ok((combo, cfg))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn precedence() {
        let file = json!({"preset": "texas", "lambda": 0.1, "t_end": 3.0, "seed": 4});
        let cfg = RunConfig::resolve(Some(&file), &Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(cfg.eps1, 0.5);
        assert_eq!(cfg.nu, -50.0);
        assert_eq!(cfg.mode, InfluenceMode::AttractRepulse);
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.t_end, 3.0);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::resolve(Some(&json!({"epsilon": 1})), &Overrides::default()).is_err());
    }

    #[test]
    fn sweep_is_cartesian() {
        let file = json!({"sweep": {"lambda": [0.0, 0.1], "mu": [1.0, 2.0, 3.0]}});
        let cfg = RunConfig::resolve(Some(&file), &Overrides::default()).unwrap();
        let runs = cfg.expand_sweep(Some(&file), &Overrides::default()).unwrap();
        assert_eq!(runs.len(), 6);
        assert_eq!((runs[1].1.lambda, runs[1].1.mu), (0.0, 2.0));
        assert!(runs.iter().all(|(_, c)| c.sweep.is_none()));
    }
}
