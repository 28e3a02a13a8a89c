//! Reference methods the transport solvers are measured against.

pub mod kl;
pub mod lp;
pub mod ot_unmix;
pub mod plca;
pub mod wasserstein;

pub use kl::kl_divergence;
pub use lp::{solve_lp, solve_lp_with_guard, LpProblem, LpSolution};
pub use ot_unmix::{ot_unmix_lp, ot_unmix_lp_frame, OtLpFrame, OT_LP_MAX_BINS};
pub use plca::{plca_frame, plca_unmix, PlcaConfig, PlcaState};
pub use wasserstein::wasserstein_divergence;
