//! Transport unmixing with an explicit dictionary: per frame, the joint LP
//! over the full M×M plan `T` and the activations `h`,
//! `min ⟨T, C⟩  s.t.  T 1 = v,  Tᵀ 1 = W h,  T, h ≥ 0`.

use ndarray::{Array2, ArrayView1};

use super::lp::{solve_lp, LpProblem};
use crate::cost::CostMatrix;
use crate::dictionary::{Dictionary, DictionaryKind};
use crate::error::{Error, Result};
use crate::frontend::NormalizedFrames;
use crate::solver::Activations;

/// Largest number of frequency bins accepted by the joint LP.
pub const OT_LP_MAX_BINS: usize = 64;

/// Frequency grid tolerance when placing Dirac templates on bins.
const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OtLpFrame {
    pub h: Vec<f64>,
    pub plan: Array2<f64>,
    pub objective: f64,
}

/// Solve the joint LP for one frame given explicit M×K templates and an M×M cost.
pub fn ot_unmix_lp_frame(v: ArrayView1<f64>, templates: &Array2<f64>, cost: &Array2<f64>) -> Result<OtLpFrame> {
    let m = v.len();
    let k = templates.ncols();
    if m > OT_LP_MAX_BINS {
        return Err(Error::GuardExceeded {
            size: m,
            guard: OT_LP_MAX_BINS,
        });
    }
    if cost.dim() != (m, m) || templates.nrows() != m {
        return Err(Error::dims(format!(
            "frame of {m} bins, cost {:?}, templates {:?}",
            cost.dim(),
            templates.dim()
        )));
    }
    let n_vars = m * m + k;
    let mut cons = Array2::zeros((2 * m, n_vars));
    for i in 0..m {
        for j in 0..m {
            cons[[i, i * m + j]] = 1.0;
            cons[[m + j, i * m + j]] = 1.0;
        }
    }
    for j in 0..m {
        for kk in 0..k {
            cons[[m + j, m * m + kk]] = -templates[[j, kk]];
        }
    }
    let mut objective: Vec<f64> = cost.iter().copied().collect();
    objective.extend(std::iter::repeat(0.0).take(k));
    let mut rhs: Vec<f64> = v.to_vec();
    rhs.extend(std::iter::repeat(0.0).take(m));
    let problem = LpProblem::new(objective, cons, rhs)?;
    let sol = solve_lp(&problem)?;
    let plan = Array2::from_shape_vec((m, m), sol.x[..m * m].to_vec()).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(OtLpFrame {
        h: sol.x[m * m..].to_vec(),
        plan,
        objective: sol.objective,
    })
}

/// Joint-LP unmixing of every active frame. Dirac dictionaries are placed on
/// the bins whose frequencies equal their fundamentals.
pub fn ot_unmix_lp(frames: &NormalizedFrames, dict: &Dictionary, cost: &CostMatrix) -> Result<Activations> {
    let m = frames.n_bins();
    if m > OT_LP_MAX_BINS {
        return Err(Error::GuardExceeded {
            size: m,
            guard: OT_LP_MAX_BINS,
        });
    }
    if cost.n_rows() != m || cost.n_cols() != m {
        return Err(Error::dims(format!("need an {m}×{m} cost, got {:?}", cost.values().dim())));
    }
    let templates = match dict.kind() {
        DictionaryKind::Harmonic => dict.templates().cloned().ok_or_else(|| Error::param("missing templates"))?,
        DictionaryKind::Dirac => dict.dirac_templates_on(&frames.freqs, GRID_TOL)?,
    };
    let k = dict.n_notes();
    let mut values = Array2::zeros((k, frames.n_frames()));
    for n in 0..frames.n_frames() {
        if !frames.active_mask[n] {
            continue;
        }
        let sol = ot_unmix_lp_frame(frames.columns.column(n), &templates, cost.values())?;
        for (kk, &h) in sol.h.iter().enumerate() {
            values[[kk, n]] = h;
        }
    }
    Ok(Activations {
        values,
        noise: None,
        fundamentals: dict.fundamentals().to_vec(),
        frame_hop_seconds: frames.frame_hop_seconds,
        frame_offset_seconds: frames.frame_offset_seconds,
    })
}
