use crate::error::{Error, Result};
use crate::state::{squared_distance, StateMatrix};

/// One Hegselmann–Krause update: each row becomes the mean of all rows
/// within Euclidean distance strictly less than `eps` of it (itself
/// included).
pub fn hk_step(x: &StateMatrix, eps: f64) -> Result<StateMatrix> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("hk radius must be positive, got {eps}")));
    }
    let eps2 = eps * eps;
    let mut out = StateMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let xi = x.row(i);
        let mut count = 0usize;
        let acc = out.row_mut(i);
        for j in 0..x.rows() {
            let xj = x.row(j);
            if squared_distance(xi, xj) < eps2 {
                count += 1;
                for (a, v) in acc.iter_mut().zip(xj) {
                    *a += v;
                }
            }
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
    }
    Ok(out)
}

/// Iterates [`hk_step`] until no entry moves by more than `tol`, returning
/// the final state and the number of steps taken.
pub fn hk_until_converged(x0: &StateMatrix, eps: f64, tol: f64, max_steps: usize) -> Result<(StateMatrix, usize)> {
    let mut x = x0.clone();
    for step in 1..=max_steps {
        let next = hk_step(&x, eps)?;
        let moved = next.max_abs_diff(&x);
        x = next;
        if moved <= tol {
            return Ok((x, step));
        }
    }
    Err(Error::NoConvergence(max_steps))
}
