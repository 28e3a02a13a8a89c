use ndarray::Array2;

use super::lp::{solve_lp, LpProblem};
use crate::cost::CostMatrix;
use crate::error::{Error, Result};

/// Exact transport divergence between two distributions on the cost's row
/// and column axes, solved as an LP over the M×M plan.
pub fn wasserstein_divergence(v: &[f64], vhat: &[f64], cost: &CostMatrix) -> Result<f64> {
    let (m, n) = cost.values().dim();
    if v.len() != m || vhat.len() != n {
        return Err(Error::dims(format!(
            "distributions of length {} and {} against a {m}×{n} cost",
            v.len(),
            vhat.len()
        )));
    }
    let mut cons = Array2::zeros((m + n, m * n));
    for i in 0..m {
        for j in 0..n {
            cons[[i, i * n + j]] = 1.0;
            cons[[m + j, i * n + j]] = 1.0;
        }
    }
    let rhs = v.iter().chain(vhat).copied().collect();
    let problem = LpProblem::new(cost.values().iter().copied().collect(), cons, rhs)?;
    Ok(solve_lp(&problem)?.objective.max(0.0))
}
