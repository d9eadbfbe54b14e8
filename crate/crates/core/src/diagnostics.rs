//! Dirichlet energy, oversmoothing detection, clustering and spectral
//! quantities.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::dynamics::{weighted_average, DiffusionKernel, KernelKind, STOCHASTIC_TOLERANCE};
use crate::error::{Error, Result};
use crate::graph::{first_non_stochastic_row, is_aperiodic, is_strongly_connected, Hypergraph, WeightedGraph};
use crate::state::{squared_distance, StateMatrix};

/// Minimum number of points accepted by [`detect_oversmoothing`].
pub const MIN_SERIES_LEN: usize = 10;
/// Energies are floored here before taking logs.
pub const ENERGY_FLOOR: f64 = 1e-300;
/// Oversmoothing needs a fitted slope below this...
pub const SLOPE_THRESHOLD: f64 = -1e-3;
/// ...and a final energy below this fraction of the initial one.
pub const RATIO_THRESHOLD: f64 = 1e-6;
/// Largest hypergraph accepted by [`spectral_gap`].
pub const SPECTRAL_LIMIT: usize = 500;
/// Eigenvalues at or below this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-10;

/// `sum w_ij |x_i - x_j|^2` over edges, each undirected edge once.
pub fn dirichlet_energy_graph(g: &WeightedGraph, x: &StateMatrix) -> Result<f64> {
    x.check_rows(g.node_count())?;
    Ok(g.edges()
        .map(|(i, j, w)| w * squared_distance(x.row(i), x.row(j)))
        .sum())
}

/// `sum_{i,j} sum_e H(i,e) H(j,e) |x_i - x_j|^2` over ordered pairs.
pub fn dirichlet_energy_hypergraph(h: &Hypergraph, x: &StateMatrix) -> Result<f64> {
    x.check_rows(h.node_count())?;
    let d = x.cols();
    let mut total = 0.0;
    // sum_{i,j} a_i a_j |x_i - x_j|^2 = 2 A sum_i a_i |x_i - m|^2 with m the
    // a-weighted mean; centring first avoids cancellation near consensus
    for e in 0..h.hyperedge_count() {
        let members = h.members(e);
        let weights = h.member_weights(e);
        let mass: f64 = weights.iter().sum();
        let mut mean = vec![0.0; d];
        for (&i, &w) in members.iter().zip(weights) {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += w * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= mass);
        let spread: f64 = members
            .iter()
            .zip(weights)
            .map(|(&i, &w)| w * squared_distance(x.row(i), &mean))
            .sum();
        total += 2.0 * mass * spread;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Fitted exponential decay rate, once computed.
    pub rate: Option<f64>,
}

impl EnergySeries {
    pub fn new(times: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if times.len() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} energies", times.len()),
                actual: format!("{}", energies.len()),
            });
        }
        if let Some(e) = energies.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::InvalidConfig(format!("energy {e} is not a non-negative number")));
        }
        Ok(Self {
            times,
            energies,
            rate: None,
        })
    }

    /// Energies indexed by step number `0, 1, 2, ...`.
    pub fn from_steps(energies: Vec<f64>) -> Result<Self> {
        Self::new((0..energies.len()).map(|k| k as f64).collect(), energies)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Last energy over first; zero when both vanish.
    pub fn ratio(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(&first), Some(&last)) if first > 0.0 => last / first,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oversmoothing {
    pub oversmoothing: bool,
    pub rate: f64,
}

/// Fits `log E` against time over the tail half of the series.
pub fn detect_oversmoothing(series: &EnergySeries) -> Result<Oversmoothing> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_SERIES_LEN,
            got: n,
        });
    }
    let tail = n / 2;
    let ts = &series.times[tail..];
    let logs: Vec<f64> = series.energies[tail..].iter().map(|e| e.max(ENERGY_FLOOR).ln()).collect();
    let (slope, _, _) = linear_fit(ts, &logs);
    let first = series.energies[0].max(ENERGY_FLOOR);
    let last = series.energies[n - 1];
    Ok(Oversmoothing {
        oversmoothing: slope < SLOPE_THRESHOLD && last < RATIO_THRESHOLD * first,
        rate: -slope,
    })
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Connected components of the graph linking rows closer than `tol`.
pub fn cluster_count(x: &StateMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("cluster tolerance must be positive, got {tol}")));
    }
    let n = x.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let tol2 = tol * tol;
    let mut count = n;
    for i in 0..n {
        for j in i + 1..n {
            if squared_distance(x.row(i), x.row(j)) <= tol2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    count -= 1;
                }
            }
        }
    }
    Ok(count)
}

pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// Dominant left eigenvector of a row-stochastic `W`, normalised to sum 1.
pub fn stationary_distribution(g: &WeightedGraph) -> Result<Vec<f64>> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if let Some((row, sum)) = first_non_stochastic_row(g, STOCHASTIC_TOLERANCE) {
        return Err(Error::PreconditionFailed(format!("row {row} sums to {sum}")));
    }
    if !is_strongly_connected(g) {
        return Err(Error::PreconditionFailed("graph is not strongly connected".into()));
    }
    if !is_aperiodic(g)? {
        return Err(Error::PreconditionFailed("graph is periodic".into()));
    }
    let n = g.node_count();
    let mut z = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut next = vec![0.0; n];
        for (i, j, w) in g.arcs() {
            next[j] += z[i] * w;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change = next.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next;
        if change <= POWER_TOLERANCE {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence(POWER_MAX_ITERATIONS))
}

/// Consensus state `(zeta^T x0) 1` reached by repeated FD updates.
pub fn consensus_predict(g: &WeightedGraph, x0: &StateMatrix) -> Result<StateMatrix> {
    x0.check_rows(g.node_count())?;
    let zeta = stationary_distribution(g)?;
    let mut value = vec![0.0; x0.cols()];
    for (z, row) in zeta.iter().zip(x0.row_iter()) {
        for (v, x) in value.iter_mut().zip(row) {
            *v += z * x;
        }
    }
    StateMatrix::from_rows(&vec![value; x0.rows()])
}

/// Smallest eigenvalue of the diffusion operator above zero.
pub fn spectral_gap(h: &Hypergraph) -> Result<f64> {
    spectral_gap_with(h, KernelKind::Uniform)
}

pub fn spectral_gap_with(h: &Hypergraph, kind: KernelKind) -> Result<f64> {
    if h.node_count() > SPECTRAL_LIMIT {
        return Err(Error::TooLarge {
            size: h.node_count(),
            limit: SPECTRAL_LIMIT,
        });
    }
    let values = operator_eigenvalues(&DiffusionKernel::new(h, kind)?)?;
    values
        .into_iter()
        .find(|&v| v > ZERO_EIGENVALUE)
        .ok_or_else(|| Error::PreconditionFailed("operator has no positive eigenvalue".into()))
}

/// Sorted eigenvalues of `I - sum_e h(e)`.
pub fn operator_eigenvalues(kernel: &DiffusionKernel<'_>) -> Result<Vec<f64>> {
    let s = kernel.symmetric_operator();
    let n = s.nrows();
    let laplacian = nalgebra::DMatrix::identity(n, n) - s;
    let mut values: Vec<f64> = SymmetricEigen::new(laplacian).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    if let Some(&v) = values.first() {
        if v < -ZERO_EIGENVALUE {
            return Err(Error::NotSpd(v));
        }
    }
    Ok(values)
}

/// Largest entry-wise deviation between `x` and one FD update of it.
pub fn fd_residual(g: &WeightedGraph, x: &StateMatrix) -> f64 {
    weighted_average(g, x).max_abs_diff(x)
}
