use crate::error::{Error, Result};
use crate::graph::first_non_stochastic_row;
use crate::graph::WeightedGraph;
use crate::state::StateMatrix;

/// Row-sum tolerance used when checking the weight matrix.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// One French–DeGroot update `x'_i = sum_j w_ij x_j`.
pub fn fd_step(g: &WeightedGraph, x: &StateMatrix) -> Result<StateMatrix> {
    if let Some((row, sum)) = first_non_stochastic_row(g, STOCHASTIC_TOLERANCE) {
        return Err(Error::NotRowStochastic { row, sum });
    }
    x.check_rows(g.node_count())?;
    Ok(weighted_average(g, x))
}

/// `W x` without the stochasticity check.
pub(crate) fn weighted_average(g: &WeightedGraph, x: &StateMatrix) -> StateMatrix {
    let mut out = StateMatrix::zeros(x.rows(), x.cols());
    for i in 0..g.node_count() {
        let row = out.row_mut(i);
        for (j, w) in g.neighbors(i) {
            for (o, v) in row.iter_mut().zip(x.row(j)) {
                *o += w * v;
            }
        }
    }
    out
}
