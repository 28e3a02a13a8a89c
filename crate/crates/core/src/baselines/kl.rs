use crate::error::{Error, Result};

/// Floor applied to model values before taking logs inside iterative solvers.
pub const KL_FLOOR: f64 = 1e-300;

/// `Σ v_i log(v_i / v̂_i)` with `0 log 0 = 0`. Returns `f64::INFINITY` when
/// `v` has mass where `v̂` has none.
pub fn kl_divergence(v: &[f64], vhat: &[f64]) -> Result<f64> {
    if v.len() != vhat.len() {
        return Err(Error::dims(format!("lengths {} and {}", v.len(), vhat.len())));
    }
    let mut d = 0.0;
    for (&p, &q) in v.iter().zip(vhat) {
        if p > 0.0 {
            if q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += p * (p / q).ln();
        }
    }
    Ok(d.max(0.0))
}

/// KL with `v̂` floored at [`KL_FLOOR`]; always finite.
pub(crate) fn kl_floored(v: &[f64], vhat: &[f64]) -> f64 {
    v.iter()
        .zip(vhat)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q.max(KL_FLOOR)).ln())
        .sum()
}
