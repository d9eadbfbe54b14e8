use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Hypergraph, WeightedGraph};
use crate::influence::{add_control, phi, similarity_dynamic_arcs, InfluenceConfig, SimilaritySpec};
use crate::state::StateMatrix;

/// Row-sum tolerance for diffusion kernels.
pub const KERNEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `h(e, i, j) = H(i, e) H(j, e) / sum_{e', k} H(i, e') H(k, e')`.
    #[default]
    Uniform,
    /// Degree-normalised `Dv^-1/2 H De^-1 H^T Dv^-1/2` with unit hyperedge
    /// weights. Only normalised on hypergraphs where all node degrees agree.
    Hgnn,
}

/// Diffusion kernel of the factorised form
/// `h(e, i, j) = left_i * scale_e * H(i, e) H(j, e) * right_j`,
/// where `H(i, e)` is the membership weight.
#[derive(Debug, Clone)]
pub struct DiffusionKernel<'h> {
    hypergraph: &'h Hypergraph,
    kind: KernelKind,
    left: Vec<f64>,
    right: Vec<f64>,
    scale: Vec<f64>,
}

impl<'h> DiffusionKernel<'h> {
    pub fn new(h: &'h Hypergraph, kind: KernelKind) -> Result<Self> {
        let n = h.node_count();
        let m = h.hyperedge_count();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if let Some(i) = (0..n).find(|&i| h.edges_of(i).is_empty()) {
            return Err(Error::ZeroDegree(i));
        }
        let edge_mass: Vec<f64> = (0..m).map(|e| h.member_weights(e).iter().sum()).collect();
        let (left, right, scale) = match kind {
            KernelKind::Uniform => {
                let mut left = vec![0.0; n];
                for (i, e, w) in h.memberships() {
                    left[i] += w * edge_mass[e];
                }
                left.iter_mut().for_each(|d| *d = 1.0 / *d);
                (left, vec![1.0; n], vec![1.0; m])
            }
            KernelKind::Hgnn => {
                let mut degree = vec![0.0; n];
                for (i, _, w) in h.memberships() {
                    degree[i] += w;
                }
                let side: Vec<f64> = degree.iter().map(|d| d.sqrt().recip()).collect();
                (side.clone(), side, edge_mass.iter().map(|d| d.recip()).collect())
            }
        };
        let kernel = Self {
            hypergraph: h,
            kind,
            left,
            right,
            scale,
        };
        for (row, sum) in kernel.row_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > KERNEL_TOLERANCE {
                return Err(Error::KernelNotNormalized { row, sum });
            }
        }
        Ok(kernel)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        self.hypergraph
    }

    /// `h(e, i, j)`.
    pub fn entry(&self, e: usize, i: usize, j: usize) -> f64 {
        self.left[i] * self.scale[e] * self.hypergraph.triple_weight(e, i, j) * self.right[j]
    }

    /// Weighted right-mass `sum_j H(j, e) right_j` of every hyperedge.
    fn edge_right_mass(&self) -> Vec<f64> {
        let h = self.hypergraph;
        (0..h.hyperedge_count())
            .map(|e| {
                h.members(e)
                    .iter()
                    .zip(h.member_weights(e))
                    .map(|(&j, &w)| w * self.right[j])
                    .sum()
            })
            .collect()
    }

    /// `sum_j sum_e h(e, i, j)` per node.
    pub fn row_sums(&self) -> Vec<f64> {
        let mass = self.edge_right_mass();
        let mut sums = vec![0.0; self.hypergraph.node_count()];
        for (i, e, w) in self.hypergraph.memberships() {
            sums[i] += self.left[i] * self.scale[e] * w * mass[e];
        }
        sums
    }

    /// Weights `pi` with `pi^T L = 0`: the kernel-weighted mean
    /// `sum_i pi_i x_i / sum_i pi_i` is conserved by diffusion.
    pub fn conserved_weights(&self) -> Vec<f64> {
        self.right.iter().zip(&self.left).map(|(r, l)| r / l).collect()
    }

    /// `dx_i/dt = sum_j sum_e h(e, i, j) (x_j - x_i)`.
    pub fn rhs(&self, x: &StateMatrix) -> Result<StateMatrix> {
        let h = self.hypergraph;
        x.check_rows(h.node_count())?;
        let d = x.cols();
        let mass = self.edge_right_mass();
        // per-hyperedge weighted sums of member states
        let mut sums = vec![0.0; h.hyperedge_count() * d];
        for e in 0..h.hyperedge_count() {
            let acc = &mut sums[e * d..(e + 1) * d];
            for (&j, &w) in h.members(e).iter().zip(h.member_weights(e)) {
                let c = w * self.right[j];
                for (a, v) in acc.iter_mut().zip(x.row(j)) {
                    *a += c * v;
                }
            }
        }
        let mut out = StateMatrix::zeros(x.rows(), d);
        for (i, e, w) in h.memberships() {
            let c = self.left[i] * self.scale[e] * w;
            let xi = x.row(i).to_vec();
            let edge_sum = &sums[e * d..(e + 1) * d];
            for ((o, s), v) in out.row_mut(i).iter_mut().zip(edge_sum).zip(&xi) {
                *o += c * (s - mass[e] * v);
            }
        }
        Ok(out)
    }

    /// Symmetric matrix similar to `sum_e h(e)`; `I` minus it has the
    /// spectrum of the diffusion operator.
    pub fn symmetric_operator(&self) -> DMatrix<f64> {
        let h = self.hypergraph;
        let n = h.node_count();
        let g: Vec<f64> = self.left.iter().zip(&self.right).map(|(l, r)| (l * r).sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for e in 0..h.hyperedge_count() {
            let members = h.members(e);
            let weights = h.member_weights(e);
            for (a, &i) in members.iter().enumerate() {
                for (b, &j) in members.iter().enumerate() {
                    s[(i, j)] += g[i] * self.scale[e] * weights[a] * weights[b] * g[j];
                }
            }
        }
        s
    }
}

pub fn hypergraph_diffusion_rhs(h: &Hypergraph, x: &StateMatrix) -> Result<StateMatrix> {
    DiffusionKernel::new(h, KernelKind::Uniform)?.rhs(x)
}

/// Bounded-confidence dynamics over hyperedges:
///
/// `dx_i/dt = sum_{e ∋ i} sum_{j in e} phi(s(e, i, j)) (x_j - x_i) + u(x_i)`
///
/// Pairs sharing several hyperedges are stored once with their
/// per-hyperedge influence summed. Static similarity is
/// `w(e, i, j) / sqrt(d_i d_j)` with `d_i = sum_e sum_j w(e, i, j)`; dynamic
/// similarity does not depend on `e`, so the pair weight is the number of
/// shared hyperedges times `phi(s_ij)`.
pub struct HypergraphOdnet {
    pairs: WeightedGraph,
    cfg: InfluenceConfig,
    dynamic: Option<SimilaritySpec>,
    fixed: Vec<f64>,
}

impl HypergraphOdnet {
    pub fn new(h: &Hypergraph, cfg: InfluenceConfig, sim: SimilaritySpec) -> Result<Self> {
        cfg.validate()?;
        let pairs = h.clique_expansion();
        if sim.is_dynamic() {
            return Ok(Self {
                pairs,
                cfg,
                dynamic: Some(sim),
                fixed: Vec::new(),
            });
        }
        let mut degree = vec![0.0; h.node_count()];
        for (i, e, w) in h.memberships() {
            degree[i] += w * h.member_weights(e).iter().sum::<f64>();
        }
        let mut fixed = vec![0.0; pairs.arc_count()];
        for e in 0..h.hyperedge_count() {
            let members = h.members(e);
            let weights = h.member_weights(e);
            for (a, &i) in members.iter().enumerate() {
                let range = pairs.arc_range(i);
                for (b, &j) in members.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let s = (weights[a] * weights[b] / (degree[i] * degree[j]).sqrt()).clamp(0.0, 1.0);
                    let k = pairs.targets()[range.clone()]
                        .binary_search(&j)
                        .expect("co-members are adjacent in the clique expansion");
                    fixed[range.start + k] += phi(&cfg, s)?;
                }
            }
        }
        Ok(Self {
            pairs,
            cfg,
            dynamic: None,
            fixed,
        })
    }

    /// Summed influence per ordered pair, aligned with the clique expansion.
    pub fn pair_weights(&self, x: &StateMatrix) -> Result<Vec<f64>> {
        match &self.dynamic {
            None => Ok(self.fixed.clone()),
            Some(spec) => similarity_dynamic_arcs(spec, &self.pairs, x)
                .into_iter()
                .zip(self.pairs.weights())
                .map(|(s, &shared)| Ok(shared * phi(&self.cfg, s)?))
                .collect(),
        }
    }

    pub fn rhs(&self, x: &StateMatrix) -> Result<StateMatrix> {
        x.check_rows(self.pairs.node_count())?;
        let weights = self.pair_weights(x)?;
        let mut out = StateMatrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let xi = x.row(i);
            let range = self.pairs.arc_range(i);
            let row = out.row_mut(i);
            for (&j, &w) in self.pairs.targets()[range.clone()].iter().zip(&weights[range]) {
                if w == 0.0 {
                    continue;
                }
                for ((o, a), b) in row.iter_mut().zip(x.row(j)).zip(xi) {
                    *o += w * (a - b);
                }
            }
            add_control(&self.cfg, xi, row);
        }
        Ok(out)
    }
}

pub fn hypergraph_odnet_rhs(
    h: &Hypergraph,
    x: &StateMatrix,
    cfg: &InfluenceConfig,
    sim: &SimilaritySpec,
) -> Result<StateMatrix> {
    HypergraphOdnet::new(h, *cfg, *sim)?.rhs(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::odnet_rhs;
    use crate::influence::{presets, Potential};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hypergraph(n: usize, m: usize, seed: u64) -> Hypergraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let size = rng.random_range(2..=4.min(n));
                let mut e: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < size as f64 / n as f64).collect();
                if e.is_empty() {
                    e.push(rng.random_range(0..n));
                }
                e
            })
            .collect();
        // every node in at least one hyperedge
        for i in 0..n {
            if !edges.iter().any(|e| e.contains(&i)) {
                edges.push(vec![i, (i + 1) % n]);
            }
        }
        Hypergraph::from_hyperedges(n, &edges).unwrap()
    }

    /// Dense `sum_j sum_e h(e,i,j)(x_j - x_i)` straight from the kernel
    /// definition.
    fn dense_uniform_rhs(h: &Hypergraph, x: &StateMatrix) -> StateMatrix {
        let n = h.node_count();
        let m = h.hyperedge_count();
        let inc = |i: usize, e: usize| if h.contains(e, i) { 1.0 } else { 0.0 };
        let mut out = StateMatrix::zeros(n, x.cols());
        for i in 0..n {
            let denom: f64 = (0..n).flat_map(|j| (0..m).map(move |e| (j, e))).map(|(j, e)| inc(i, e) * inc(j, e)).sum();
            for j in 0..n {
                for e in 0..m {
                    let k = inc(i, e) * inc(j, e) / denom;
                    for c in 0..x.cols() {
                        out.set(i, c, out.get(i, c) + k * (x.get(j, c) - x.get(i, c)));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn single_member_hyperedge_gives_control_only() {
        let h = Hypergraph::from_hyperedges(1, &[vec![0]]).unwrap();
        let cfg = presets::cora().with_control(0.5, Potential::Quadratic);
        let x = StateMatrix::from_rows(&[vec![2.0, -1.0]]).unwrap();
        for sim in [SimilaritySpec::static_adjacency(), SimilaritySpec::dynamic_cosine()] {
            let d = hypergraph_odnet_rhs(&h, &x, &cfg, &sim).unwrap();
            assert_eq!(d.row(0), &[-1.0, 0.5]);
        }
    }

    #[test]
    fn full_hyperedge_matches_complete_graph() {
        let n = 6;
        let h = Hypergraph::from_hyperedges(n, &[(0..n).collect()]).unwrap();
        let complete = WeightedGraph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))), false).unwrap();
        let x = StateMatrix::random_normal(n, 3, 4);
        let cfg = InfluenceConfig::identity();
        let sim = SimilaritySpec::dynamic_cosine();
        let a = hypergraph_odnet_rhs(&h, &x, &cfg, &sim).unwrap();
        let b = odnet_rhs(&complete, &x, &cfg, &sim).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn overlapping_hyperedges_accumulate_per_edge() {
        // e0 = {0,1,2}, e1 = {1,2,3}: the pair (1,2) is counted in both
        let h = Hypergraph::from_hyperedges(4, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let x = StateMatrix::random_normal(4, 2, 11);
        let cfg = InfluenceConfig::identity();
        let got = hypergraph_odnet_rhs(&h, &x, &cfg, &SimilaritySpec::static_adjacency()).unwrap();

        // d_i = sum_e sum_j H_ie H_je: node 0 -> 3, 1 -> 6, 2 -> 6, 3 -> 3
        let d = [3.0, 6.0, 6.0, 3.0];
        let edges = [vec![0, 1, 2], vec![1, 2, 3]];
        let mut want = StateMatrix::zeros(4, 2);
        for e in &edges {
            for &i in e {
                for &j in e {
                    let s: f64 = 1.0 / (d[i] * d[j] as f64).sqrt();
                    for c in 0..2 {
                        want.set(i, c, want.get(i, c) + s * (x.get(j, c) - x.get(i, c)));
                    }
                }
            }
        }
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn uniform_kernel_matches_dense_definition() {
        let h = random_hypergraph(9, 5, 2);
        let x = StateMatrix::random_normal(9, 2, 3);
        let fast = hypergraph_diffusion_rhs(&h, &x).unwrap();
        assert!(fast.max_abs_diff(&dense_uniform_rhs(&h, &x)) < 1e-13);
    }

    #[test]
    fn two_node_diffusion_contracts() {
        let h = Hypergraph::from_hyperedges(2, &[vec![0, 1]]).unwrap();
        let d = hypergraph_diffusion_rhs(&h, &StateMatrix::column(&[0.0, 1.0])).unwrap();
        assert!(d.get(0, 0) > 0.0);
        assert_eq!(d.get(0, 0), -d.get(1, 0));
    }

    #[test]
    fn hgnn_kernel_needs_regular_degrees() {
        let regular = Hypergraph::from_hyperedges(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let k = DiffusionKernel::new(&regular, KernelKind::Hgnn).unwrap();
        assert!(k.rhs(&StateMatrix::column(&[1.0; 4])).unwrap().norm() < 1e-15);
        let irregular = Hypergraph::from_hyperedges(3, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert!(matches!(
            DiffusionKernel::new(&irregular, KernelKind::Hgnn),
            Err(Error::KernelNotNormalized { .. })
        ));
    }

    #[test]
    fn isolated_node_is_rejected() {
        let h = Hypergraph::from_hyperedges(3, &[vec![0, 1]]).unwrap();
        assert!(matches!(DiffusionKernel::new(&h, KernelKind::Uniform), Err(Error::ZeroDegree(2))));
    }

    #[test]
    fn symmetric_operator_has_kernel_spectrum() {
        let h = random_hypergraph(7, 4, 5);
        let k = DiffusionKernel::new(&h, KernelKind::Uniform).unwrap();
        let s = k.symmetric_operator();
        assert!((s.clone() - s.transpose()).abs().max() < 1e-15);
        // the non-symmetric kernel matrix has the same trace
        let trace: f64 = (0..7)
            .map(|i| (0..h.hyperedge_count()).map(|e| k.entry(e, i, i)).sum::<f64>())
            .sum();
        assert!((s.trace() - trace).abs() < 1e-12);
    }

    #[test]
    fn conserved_mean_is_stationary() {
        let h = random_hypergraph(8, 4, 7);
        let k = DiffusionKernel::new(&h, KernelKind::Uniform).unwrap();
        let pi = k.conserved_weights();
        let d = k.rhs(&StateMatrix::random_normal(8, 1, 1)).unwrap();
        let drift: f64 = (0..8).map(|i| pi[i] * d.get(i, 0)).sum();
        assert!(drift.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn diffusion_annihilates_constants(seed in 0u64..200) {
            let h = random_hypergraph(10, 4, seed);
            let k = DiffusionKernel::new(&h, KernelKind::Uniform).unwrap();
            let sums = k.row_sums();
            prop_assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-12));
            let d = k.rhs(&StateMatrix::from_rows(&vec![vec![1.0, -3.5]; 10]).unwrap()).unwrap();
            prop_assert!(d.as_slice().iter().all(|v| v.abs() < 1e-12));
        }
    }
}
