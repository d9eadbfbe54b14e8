//! Similarity measures, piecewise influence functions and the stability
//! control term.
//!
//! The influence function maps a pairwise similarity `s` in `[0, 1]` to an
//! interaction weight:
//!
//! | branch                | attract   | attract-repulse |
//! |-----------------------|-----------|-----------------|
//! | `s > eps2`            | `mu * s`  | `mu * s`        |
//! | `eps1 <= s <= eps2`   | `s`       | `s`             |
//! | `s < eps1`            | `0`       | `nu * (1 - s)`  |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::state::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InfluenceMode {
    #[default]
    Attract,
    AttractRepulse,
}

/// Shape of the confining potential `P` whose negative gradient is the
/// control term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Potential {
    /// `P(x) = lambda |x|^2 / 2`, control `-lambda x`.
    #[default]
    Quadratic,
    /// `P(x) = lambda |x|^4 / 4`, control `-lambda |x|^2 x`. Grows fast
    /// enough to confine linear repulsion of any strength.
    Quartic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mode: InfluenceMode,
    #[serde(default)]
    pub potential: Potential,
}

impl Default for InfluenceConfig {
    /// Identity influence: `phi(s) = s` on the whole unit interval.
    fn default() -> Self {
        Self::identity()
    }
}

impl InfluenceConfig {
    pub fn attract(eps1: f64, eps2: f64, mu: f64) -> Self {
        Self {
            eps1,
            eps2,
            mu,
            nu: 0.0,
            lambda: 0.0,
            mode: InfluenceMode::Attract,
            potential: Potential::Quadratic,
        }
    }

    pub fn attract_repulse(eps1: f64, eps2: f64, mu: f64, nu: f64) -> Self {
        Self {
            nu,
            mode: InfluenceMode::AttractRepulse,
            ..Self::attract(eps1, eps2, mu)
        }
    }

    /// No cutoffs, no amplification: plain similarity-weighted diffusion.
    pub fn identity() -> Self {
        Self::attract(0.0, 1.0, 1.0)
    }

    pub fn with_control(mut self, lambda: f64, potential: Potential) -> Self {
        self.lambda = lambda;
        self.potential = potential;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.eps1 > self.eps2 {
            return bad(format!("eps1 = {} exceeds eps2 = {}", self.eps1, self.eps2));
        }
        if !self.mu.is_finite() || !self.nu.is_finite() {
            return bad("mu and nu must be finite".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} must be a non-negative number", self.lambda));
        }
        if self.mode == InfluenceMode::AttractRepulse && !(self.mu > 0.0 && self.nu < 0.0) {
            return bad(format!(
                "attract-repulse needs mu > 0 and nu < 0 (mu = {}, nu = {})",
                self.mu, self.nu
            ));
        }
        Ok(())
    }

    /// `nu` as it enters the influence function (ignored in attract mode).
    pub fn effective_nu(&self) -> f64 {
        match self.mode {
            InfluenceMode::Attract => 0.0,
            InfluenceMode::AttractRepulse => self.nu,
        }
    }
}

/// Piecewise influence weight for similarity `s`. Ties at `eps2` take the
/// middle branch.
pub fn phi(cfg: &InfluenceConfig, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRangeSimilarity(s));
    }
    Ok(if s > cfg.eps2 {
        cfg.mu * s
    } else if s >= cfg.eps1 {
        s
    } else {
        match cfg.mode {
            InfluenceMode::Attract => 0.0,
            InfluenceMode::AttractRepulse => cfg.nu * (1.0 - s),
        }
    })
}

/// Control term `u(x_i) = -grad P(x_i)`.
pub fn control_term(cfg: &InfluenceConfig, x_i: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x_i.len()];
    add_control(cfg, x_i, &mut out);
    out
}

/// Adds `u(x_i)` into `out`.
pub(crate) fn add_control(cfg: &InfluenceConfig, x_i: &[f64], out: &mut [f64]) {
    if cfg.lambda == 0.0 {
        return;
    }
    let gain = match cfg.potential {
        Potential::Quadratic => cfg.lambda,
        Potential::Quartic => cfg.lambda * x_i.iter().map(|v| v * v).sum::<f64>(),
    };
    for (o, v) in out.iter_mut().zip(x_i) {
        *o -= gain * v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityKind {
    /// `w_ij / sqrt(d_i d_j)`, computed once from the structure.
    #[default]
    StaticNormalizedAdjacency,
    /// Cosine of the current node states mapped into `[0, 1]`, recomputed
    /// at every evaluation.
    DynamicCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SimilaritySpec {
    pub kind: SimilarityKind,
    /// When set, cosine values are squashed by a logistic of width
    /// `temperature` instead of the affine map `(c + 1) / 2`.
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl SimilaritySpec {
    pub fn static_adjacency() -> Self {
        Self::default()
    }

    pub fn dynamic_cosine() -> Self {
        Self {
            kind: SimilarityKind::DynamicCosine,
            temperature: None,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        self.kind == SimilarityKind::DynamicCosine
    }

    /// Maps a cosine in `[-1, 1]` into `[0, 1]`.
    pub fn rescale(&self, cosine: f64) -> f64 {
        let s = match self.temperature {
            None => (cosine + 1.0) / 2.0,
            Some(t) => 1.0 / (1.0 + (-cosine / t).exp()),
        };
        s.clamp(0.0, 1.0)
    }
}

/// Normalised-adjacency similarity per arc of `g`, aligned with
/// [`WeightedGraph::targets`]. Degrees are weighted out-degrees.
pub fn similarity_static(g: &WeightedGraph) -> Result<Vec<f64>> {
    let degrees: Vec<f64> = (0..g.node_count()).map(|i| g.out_weight(i)).collect();
    let mut sims = Vec::with_capacity(g.arc_count());
    for (i, j, w) in g.arcs() {
        for k in [i, j] {
            if degrees[k] <= 0.0 {
                return Err(Error::ZeroDegree(k));
            }
        }
        sims.push((w / (degrees[i] * degrees[j]).sqrt()).clamp(0.0, 1.0));
    }
    Ok(sims)
}

/// Cosine of two rows; zero when either row vanishes.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = cosine_from_parts(dot, na, nb);
    if c.is_finite() && na > 0.0 && nb > 0.0 {
        c
    } else {
        scaled_cosine(a, b)
    }
}

/// Slow path for rows whose squared norms overflow or underflow, and for
/// zero rows.
fn scaled_cosine(a: &[f64], b: &[f64]) -> f64 {
    let unit = |v: &[f64]| {
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter().map(|x| if m > 0.0 { x / m } else { 0.0 }).collect::<Vec<_>>()
    };
    let (a, b) = (unit(a), unit(b));
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    cosine_from_parts(dot, na, nb)
}

pub(crate) fn cosine_from_parts(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `(cos(x_i, x_j) + 1) / 2` for each requested pair.
pub fn similarity_dynamic(x: &StateMatrix, pairs: &[(usize, usize)]) -> Vec<f64> {
    similarity_dynamic_with(&SimilaritySpec::dynamic_cosine(), x, pairs)
}

pub fn similarity_dynamic_with(spec: &SimilaritySpec, x: &StateMatrix, pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(i, j)| spec.rescale(cosine(x.row(i), x.row(j))))
        .collect()
}

/// Dynamic similarity on every arc of `g`, aligned with its targets.
pub fn similarity_dynamic_arcs(spec: &SimilaritySpec, g: &WeightedGraph, x: &StateMatrix) -> Vec<f64> {
    let norms: Vec<f64> = x.row_iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    g.arcs()
        .map(|(i, j, _)| {
            let dot: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum();
            let c = cosine_from_parts(dot, norms[i], norms[j]);
            let robust = c.is_finite() && norms[i] > 0.0 && norms[j] > 0.0;
            spec.rescale(if robust { c } else { scaled_cosine(x.row(i), x.row(j)) })
        })
        .collect()
}

/// Hyperparameter rows for the benchmark datasets: `(eps1, eps2, T, nu, mu)`.
pub mod presets {
    use super::InfluenceConfig;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Preset {
        pub dataset: &'static str,
        pub eps1: f64,
        pub eps2: f64,
        pub t_end: f64,
        pub nu: f64,
        pub mu: f64,
    }

    pub const PRESETS: &[Preset] = &[
        Preset { dataset: "cora", eps1: 0.012, eps2: 0.40, t_end: 12.0, nu: 0.0, mu: 1.4 },
        Preset { dataset: "citeseer", eps1: 0.01, eps2: 0.90, t_end: 10.0, nu: 0.0, mu: 3.0 },
        Preset { dataset: "pubmed", eps1: 0.01, eps2: 0.40, t_end: 20.0, nu: 0.0, mu: 2.2 },
        Preset { dataset: "coauthor-cs", eps1: 0.01, eps2: 0.40, t_end: 15.0, nu: 0.0, mu: 1.7 },
        Preset { dataset: "computer", eps1: 0.01, eps2: 0.50, t_end: 15.0, nu: 0.0, mu: 5.0 },
        Preset { dataset: "photo", eps1: 0.01, eps2: 0.40, t_end: 12.0, nu: 0.0, mu: 10.0 },
        Preset { dataset: "texas", eps1: 0.50, eps2: 0.80, t_end: 12.0, nu: -50.0, mu: 1.0 },
        Preset { dataset: "wisconsin", eps1: 0.60, eps2: 0.80, t_end: 12.0, nu: -10.0, mu: 2.0 },
        Preset { dataset: "cornell", eps1: 0.12, eps2: 0.40, t_end: 12.0, nu: 0.0, mu: 2.0 },
        Preset { dataset: "cora-coauthor", eps1: 0.0, eps2: 1.0, t_end: 0.1, nu: 1.0, mu: 1.0 },
        Preset { dataset: "cora-cocitation", eps1: 0.0, eps2: 1.0, t_end: 0.1, nu: 1.0, mu: 1.0 },
        Preset { dataset: "pubmed-cocitation", eps1: 0.0, eps2: 1.0, t_end: 0.1, nu: 1.0, mu: 1.0 },
        Preset { dataset: "citeseer-cocitation", eps1: 0.0, eps2: 1.0, t_end: 0.1, nu: 1.5, mu: 1.0 },
    ];

    pub fn find(dataset: &str) -> Option<&'static Preset> {
        PRESETS.iter().find(|p| p.dataset.eq_ignore_ascii_case(dataset))
    }

    impl Preset {
        /// Negative `nu` selects the repulsive form; otherwise `nu` is unused.
        pub fn influence(&self) -> InfluenceConfig {
            if self.nu < 0.0 {
                InfluenceConfig::attract_repulse(self.eps1, self.eps2, self.mu, self.nu)
            } else {
                InfluenceConfig::attract(self.eps1, self.eps2, self.mu)
            }
        }
    }

    pub fn cora() -> InfluenceConfig {
        find("cora").unwrap().influence()
    }

    pub fn texas() -> InfluenceConfig {
        find("texas").unwrap().influence()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_survives_huge_and_tiny_rows() {
        assert_relative_eq!(cosine(&[1e200, 0.0], &[1e200, 1e200]), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(cosine(&[1e-200, 1e-200], &[-3e-200, -3e-200]), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn phi_table_examples() {
        assert_relative_eq!(phi(&presets::cora(), 0.5).unwrap(), 0.7, epsilon = 1e-15);
        assert_eq!(phi(&InfluenceConfig::attract(0.1, 0.5, 2.0), 0.0).unwrap(), 0.0);
        assert_relative_eq!(phi(&presets::texas(), 0.3).unwrap(), -35.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_branch_boundaries() {
        let cfg = InfluenceConfig::attract_repulse(0.2, 0.6, 3.0, -2.0);
        assert_eq!(phi(&cfg, 0.6).unwrap(), 0.6);
        assert_eq!(phi(&cfg, 0.2).unwrap(), 0.2);
        assert_relative_eq!(phi(&cfg, 0.19).unwrap(), -2.0 * 0.81);
        assert_relative_eq!(phi(&cfg, 0.61).unwrap(), 3.0 * 0.61);
    }

    #[test]
    fn phi_rejects_out_of_range() {
        let cfg = InfluenceConfig::identity();
        assert!(matches!(phi(&cfg, 1.2), Err(Error::OutOfRangeSimilarity(_))));
        assert!(matches!(phi(&cfg, -0.1), Err(Error::OutOfRangeSimilarity(_))));
        assert!(phi(&cfg, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(presets::texas().validate().is_ok());
        assert!(InfluenceConfig::attract(0.5, 0.2, 1.0).validate().is_err());
        assert!(InfluenceConfig::attract_repulse(0.1, 0.2, 1.0, 0.0).validate().is_err());
        assert!(InfluenceConfig::attract(0.1, 1.5, 1.0).validate().is_err());
        assert!(InfluenceConfig::identity().with_control(-1.0, Potential::Quadratic).validate().is_err());
        for p in presets::PRESETS {
            assert!(p.influence().validate().is_ok(), "{}", p.dataset);
        }
    }

    #[test]
    fn config_json_keys() {
        let cfg = presets::texas().with_control(0.1, Potential::Quadratic);
        let v = serde_json::to_value(cfg).unwrap();
        for key in ["eps1", "eps2", "mu", "nu", "lambda", "mode"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["mode"], "attract-repulse");
        let back: InfluenceConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
        let minimal: InfluenceConfig =
            serde_json::from_str(r#"{"eps1":0.1,"eps2":0.4,"mu":1.4,"nu":0,"lambda":0,"mode":"attract"}"#).unwrap();
        assert_eq!(minimal.potential, Potential::Quadratic);
    }

    #[test]
    fn control_term_examples() {
        let zero = InfluenceConfig::identity();
        assert_eq!(control_term(&zero, &[3.0, -1.0]), vec![0.0, 0.0]);
        let one = InfluenceConfig::identity().with_control(1.0, Potential::Quadratic);
        assert_eq!(control_term(&one, &[2.0, 0.0]), vec![-2.0, 0.0]);
        let quartic = InfluenceConfig::identity().with_control(1.0, Potential::Quartic);
        assert_eq!(control_term(&quartic, &[2.0, 0.0]), vec![-8.0, 0.0]);
    }

    /// Two nodes repelling each other with weight `phi(s)` under the
    /// control term, stepped with explicit Euler.
    fn max_norm_two_node_repulsion(cfg: &InfluenceConfig, x0: [[f64; 2]; 2], steps: usize, h: f64) -> f64 {
        let mut x = x0;
        let mut sup: f64 = 0.0;
        for _ in 0..steps {
            let s = SimilaritySpec::dynamic_cosine().rescale(cosine(&x[0], &x[1]));
            let w = phi(cfg, s).unwrap();
            let mut next = x;
            for i in 0..2 {
                let u = control_term(cfg, &x[i]);
                for k in 0..2 {
                    next[i][k] += h * (w * (x[1 - i][k] - x[i][k]) + u[k]);
                }
            }
            x = next;
            sup = sup.max(x.iter().flatten().fold(0.0, |m, v| m.max(v.abs())));
        }
        sup
    }

    #[test]
    fn control_keeps_repulsive_pair_bounded() {
        // repulsion 2|nu|(1 - s) stays below lambda
        let cfg = InfluenceConfig::attract_repulse(0.9, 0.95, 1.0, -0.04).with_control(0.1, Potential::Quadratic);
        let x0 = [[0.7, -0.2], [-0.4, 0.9]];
        let bounded = max_norm_two_node_repulsion(&cfg, x0, 10_000, 0.01);
        assert!(bounded <= 1.0, "{bounded}");
        let uncontrolled = InfluenceConfig { lambda: 0.0, ..cfg };
        assert!(max_norm_two_node_repulsion(&uncontrolled, x0, 10_000, 0.01) > 10.0);
        // strong repulsion needs the quartic potential
        let strong = presets::texas().with_control(0.1, Potential::Quartic);
        assert!(max_norm_two_node_repulsion(&strong, x0, 10_000, 1e-3) < 50.0);
    }

    #[test]
    fn static_similarity_examples() {
        let edge = WeightedGraph::from_edges(2, [(0, 1, 1.0)], false).unwrap();
        assert_eq!(similarity_static(&edge).unwrap(), vec![1.0, 1.0]);
        let star = WeightedGraph::from_edges(5, (1..5).map(|i| (0, i, 1.0)), false).unwrap();
        assert!(similarity_static(&star).unwrap().iter().all(|&s| (s - 0.5).abs() < 1e-15));
        let tri = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], false).unwrap();
        assert!(similarity_static(&tri).unwrap().iter().all(|&s| (s - 0.5).abs() < 1e-15));
        let sink = WeightedGraph::from_edges(2, [(0, 1, 1.0)], true).unwrap();
        assert!(matches!(similarity_static(&sink), Err(Error::ZeroDegree(1))));
    }

    #[test]
    fn static_similarity_on_regular_graph() {
        // 4-regular circulant on 12 nodes
        let edges = (0..12).flat_map(|i| [(i, (i + 1) % 12, 1.0), (i, (i + 2) % 12, 1.0)]);
        let g = WeightedGraph::from_edges(12, edges, false).unwrap();
        assert!(similarity_static(&g).unwrap().iter().all(|&s| (s - 0.25).abs() < 1e-15));
    }

    #[test]
    fn dynamic_similarity_examples() {
        let x = StateMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0], vec![-2.0, 1.0], vec![0.0, 0.0]])
            .unwrap();
        let s = similarity_dynamic(&x, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_relative_eq!(s[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(s[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(s[2], 0.5, epsilon = 1e-15);
        assert_eq!(s[3], 0.5);
    }

    proptest! {
        #[test]
        fn phi_middle_branch_is_identity(eps1 in 0.0f64..0.5, width in 0.0f64..0.5, t in 0.0f64..=1.0, mu in 0.5f64..5.0) {
            let cfg = InfluenceConfig::attract(eps1, eps1 + width, mu);
            let s = eps1 + t * width;
            prop_assert_eq!(phi(&cfg, s).unwrap(), s);
        }

        #[test]
        fn phi_monotone_above_eps1(eps1 in 0.0f64..0.5, width in 0.0f64..0.5, mu in 1.0f64..5.0, nu in -100.0f64..-0.01) {
            for cfg in [
                InfluenceConfig::attract(eps1, eps1 + width, mu),
                InfluenceConfig::attract_repulse(eps1, eps1 + width, mu, nu),
            ] {
                let grid: Vec<f64> = (0..=1000).map(|k| (eps1 + (1.0 - eps1) * k as f64 / 1000.0).min(1.0)).collect();
                for w in grid.windows(2) {
                    prop_assert!(phi(&cfg, w[1]).unwrap() >= phi(&cfg, w[0]).unwrap());
                }
            }
        }

        #[test]
        fn attract_equals_repulse_with_zero_nu_above_eps1(eps1 in 0.01f64..0.5, width in 0.0f64..0.5, s in 0.0f64..=1.0) {
            let a = InfluenceConfig::attract(eps1, eps1 + width, 1.5);
            let r = InfluenceConfig { nu: 0.0, mode: InfluenceMode::AttractRepulse, ..a };
            prop_assert_eq!(phi(&a, s).unwrap(), phi(&r, s).unwrap());
            let r = InfluenceConfig { nu: -3.0, ..r };
            if s >= eps1 {
                prop_assert_eq!(phi(&a, s).unwrap(), phi(&r, s).unwrap());
            } else {
                prop_assert!(phi(&a, s).unwrap() != phi(&r, s).unwrap());
            }
        }

        #[test]
        fn dynamic_similarity_is_symmetric(seed in 0u64..1000) {
            let x = StateMatrix::random_normal(6, 3, seed);
            let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).collect();
            let flipped: Vec<(usize, usize)> = pairs.iter().map(|&(i, j)| (j, i)).collect();
            let a = similarity_dynamic(&x, &pairs);
            let b = similarity_dynamic(&x, &flipped);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(|s| (0.0..=1.0).contains(s)));
        }
    }
}
