//! Optimal spectral transportation onto a Dirac dictionary.
//!
//! Every solver works on one frame `v` (a probability vector over the M
//! frequency bins) and a reduced M×K cost `C̃` whose columns are the note
//! fundamentals (plus an optional flat noise column). The plan `T̃` only has
//! to satisfy the row marginal `T̃ 1 = v`, so each row can be solved on its
//! own:
//!
//! * [`ost_frame`]: every row goes to its cheapest column.
//! * [`ost_entropic_frame`]: rows are spread with a softmax of `-C̃ / λ_e`.
//! * [`ost_group_frame`]: majorization-minimization of the group penalty
//!   `λ_g Σ_k sqrt(h_k)`; each step is a hard assignment against
//!   `C̃ + λ_g R̃` where `r̃_k = ½ h_k^{-1/2}`.
//! * [`ost_combined_frame`]: same outer loop with entropic inner steps.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::frontend::NormalizedFrames;

/// Column masses below this are treated as this value when building the
/// majorizer, so an emptied column keeps a large but finite surcharge.
pub const EMPTY_COLUMN_MASS: f64 = 1e-12;
pub const DEFAULT_MM_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Ost,
    OstEntropic,
    OstGroup,
    OstCombined,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Ost => "ost",
            Variant::OstEntropic => "ost_e",
            Variant::OstGroup => "ost_g",
            Variant::OstCombined => "ost_eg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda_e: f64,
    pub lambda_g: f64,
    pub mm_iterations: usize,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_e: 0.0,
            lambda_g: 0.0,
            mm_iterations: DEFAULT_MM_ITERATIONS,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

impl SolverConfig {
    pub fn validate_for(&self, variant: Variant) -> Result<()> {
        if self.mm_iterations == 0 {
            return Err(Error::param("mm_iterations must be at least 1"));
        }
        if !(self.lambda_e >= 0.0) || !self.lambda_e.is_finite() {
            return Err(Error::param("lambda_e must be finite and non-negative"));
        }
        if !(self.lambda_g >= 0.0) || !self.lambda_g.is_finite() {
            return Err(Error::param("lambda_g must be finite and non-negative"));
        }
        match variant {
            Variant::OstEntropic | Variant::OstCombined if self.lambda_e <= 0.0 => {
                Err(Error::param(format!("{} needs lambda_e > 0", variant.name())))
            }
            _ => Ok(()),
        }
    }
}

/// Reduced transport plan: rows are frequency bins, columns are notes
/// (and the noise column when the cost has one).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub plan: Array2<f64>,
    pub row_freqs: Vec<f64>,
    pub col_fundamentals: Vec<f64>,
}

impl TransportPlan {
    pub fn column_masses(&self) -> Vec<f64> {
        self.plan.sum_axis(Axis(0)).to_vec()
    }

    pub fn row_masses(&self) -> Vec<f64> {
        self.plan.sum_axis(Axis(1)).to_vec()
    }
}

/// Solution for one frame. `h` has one entry per cost column, the last
/// being the noise mass when a noise column is present.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSolution {
    pub plan: TransportPlan,
    pub h: Vec<f64>,
    /// Penalized objective at the start and after each MM step; empty for
    /// closed-form variants.
    pub objective_trace: Vec<f64>,
}

/// K×N note activations, with the noise mass kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub values: Array2<f64>,
    pub noise: Option<Vec<f64>>,
    pub fundamentals: Vec<f64>,
    pub frame_hop_seconds: f64,
    pub frame_offset_seconds: f64,
}

impl Activations {
    pub fn n_notes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames())
            .map(|n| self.frame_offset_seconds + n as f64 * self.frame_hop_seconds)
            .collect()
    }

    pub fn slice_frames(&self, range: std::ops::Range<usize>) -> Activations {
        let start = range.start;
        Activations {
            values: self.values.slice(ndarray::s![.., range.clone()]).to_owned(),
            noise: self.noise.as_ref().map(|n| n[range].to_vec()),
            fundamentals: self.fundamentals.clone(),
            frame_hop_seconds: self.frame_hop_seconds,
            frame_offset_seconds: self.frame_offset_seconds + start as f64 * self.frame_hop_seconds,
        }
    }
}

/// Row-wise argmin of a cost matrix (lowest index on ties).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labelling {
    assignments: Vec<usize>,
    n_cols: usize,
}

impl Labelling {
    pub fn from_cost(cost: &Array2<f64>) -> Self {
        let assignments = cost.rows().into_iter().map(row_argmin).collect();
        Self {
            assignments,
            n_cols: cost.ncols(),
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// `h = Lᵀ v`.
    pub fn apply(&self, v: ArrayView1<f64>) -> Vec<f64> {
        let mut h = vec![0.0; self.n_cols];
        for (&k, &vi) in self.assignments.iter().zip(v.iter()) {
            h[k] += vi;
        }
        h
    }

    pub fn plan(&self, v: ArrayView1<f64>) -> Array2<f64> {
        let mut t = Array2::zeros((self.assignments.len(), self.n_cols));
        for (i, (&k, &vi)) in self.assignments.iter().zip(v.iter()).enumerate() {
            t[[i, k]] = vi;
        }
        t
    }
}

fn row_argmin(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    let mut best_val = row[0];
    for (k, &c) in row.iter().enumerate().skip(1) {
        if c < best_val {
            best = k;
            best_val = c;
        }
    }
    best
}

/// Row-softmax labelling `l_ik = exp(-c_ik/λ) / Σ_p exp(-c_ip/λ)`.
pub fn entropic_labelling(cost: &Array2<f64>, lambda_e: f64) -> Array2<f64> {
    let mut l = cost.clone();
    for mut row in l.rows_mut() {
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.mapv_inplace(|c| (-(c - min) / lambda_e).exp());
        let s = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    l
}

fn check_frame(v: ArrayView1<f64>, cost: &CostMatrix) -> Result<()> {
    if v.len() != cost.n_rows() {
        return Err(Error::dims(format!(
            "frame has {} bins, cost has {} rows",
            v.len(),
            cost.n_rows()
        )));
    }
    if cost.n_cols() == 0 {
        return Err(Error::dims("cost has no columns"));
    }
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::param("frame entries must be finite and non-negative"));
    }
    Ok(())
}

fn column_fundamentals(cost: &CostMatrix) -> Vec<f64> {
    let mut f = cost.col_freqs().to_vec();
    if cost.noise_cost().is_some() {
        f.push(f64::NAN);
    }
    f
}

fn solution(cost: &CostMatrix, plan: Array2<f64>, objective_trace: Vec<f64>) -> FrameSolution {
    let h = plan.sum_axis(Axis(0)).to_vec();
    FrameSolution {
        plan: TransportPlan {
            plan,
            row_freqs: cost.row_freqs().to_vec(),
            col_fundamentals: column_fundamentals(cost),
        },
        h,
        objective_trace,
    }
}

/// Transport cost `⟨T, C⟩`.
pub fn transport_cost(plan: &Array2<f64>, cost: &Array2<f64>) -> f64 {
    plan.iter().zip(cost.iter()).map(|(t, c)| t * c).sum()
}

/// `Σ t log t` with `0 log 0 = 0`.
pub fn negentropy(plan: &Array2<f64>) -> f64 {
    plan.iter().filter(|&&t| t > 0.0).map(|&t| t * t.ln()).sum()
}

/// `Σ_k sqrt(h_k)` over plan columns.
pub fn group_penalty(plan: &Array2<f64>) -> f64 {
    plan.sum_axis(Axis(0)).iter().map(|&h| h.max(0.0).sqrt()).sum()
}

/// `⟨T,C⟩ + λ_e Ω_e(T) + λ_g Ω_g(T)`.
pub fn penalized_objective(plan: &Array2<f64>, cost: &Array2<f64>, lambda_e: f64, lambda_g: f64) -> f64 {
    let mut obj = transport_cost(plan, cost);
    if lambda_e > 0.0 {
        obj += lambda_e * negentropy(plan);
    }
    if lambda_g > 0.0 {
        obj += lambda_g * group_penalty(plan);
    }
    obj
}

/// Unregularized OST: each bin's mass goes to its cheapest note.
pub fn ost_frame(v: ArrayView1<f64>, cost: &CostMatrix) -> Result<FrameSolution> {
    check_frame(v, cost)?;
    let plan = Labelling::from_cost(cost.values()).plan(v);
    Ok(solution(cost, plan, Vec::new()))
}

fn entropic_plan(v: ArrayView1<f64>, cost: &Array2<f64>, lambda_e: f64) -> Array2<f64> {
    let mut l = entropic_labelling(cost, lambda_e);
    for (mut row, &vi) in l.rows_mut().into_iter().zip(v.iter()) {
        row.mapv_inplace(|x| x * vi);
    }
    l
}

/// Entropy-regularized OST (`λ_e > 0`).
pub fn ost_entropic_frame(v: ArrayView1<f64>, cost: &CostMatrix, lambda_e: f64) -> Result<FrameSolution> {
    check_frame(v, cost)?;
    if !(lambda_e > 0.0) || !lambda_e.is_finite() {
        return Err(Error::param("lambda_e must be positive; use ost_frame for the unregularized limit"));
    }
    let plan = entropic_plan(v, cost.values(), lambda_e);
    Ok(solution(cost, plan, Vec::new()))
}

#[derive(Clone, Copy)]
enum InnerStep {
    Hard,
    Entropic(f64),
}

fn majorized_cost(base: &Array2<f64>, plan: &Array2<f64>, lambda_g: f64) -> Array2<f64> {
    let surcharge: Array1<f64> = plan
        .sum_axis(Axis(0))
        .mapv(|h| lambda_g * 0.5 / h.max(EMPTY_COLUMN_MASS).sqrt());
    base + &surcharge.insert_axis(Axis(0))
}

fn inner_solve(v: ArrayView1<f64>, cost: &Array2<f64>, step: InnerStep) -> Array2<f64> {
    match step {
        InnerStep::Hard => Labelling::from_cost(cost).plan(v),
        InnerStep::Entropic(lambda_e) => entropic_plan(v, cost, lambda_e),
    }
}

fn group_mm(v: ArrayView1<f64>, cost: &CostMatrix, config: &SolverConfig, step: InnerStep) -> FrameSolution {
    let base = cost.values();
    let lambda_e = match step {
        InnerStep::Hard => 0.0,
        InnerStep::Entropic(l) => l,
    };
    let mut plan = inner_solve(v, base, step);
    let mut trace = Vec::with_capacity(config.mm_iterations + 1);
    trace.push(penalized_objective(&plan, base, lambda_e, config.lambda_g));
    if config.lambda_g > 0.0 {
        for _ in 0..config.mm_iterations {
            let surrogate = majorized_cost(base, &plan, config.lambda_g);
            plan = inner_solve(v, &surrogate, step);
            trace.push(penalized_objective(&plan, base, lambda_e, config.lambda_g));
        }
    }
    solution(cost, plan, trace)
}

/// Group-sparse OST by majorization-minimization.
pub fn ost_group_frame(v: ArrayView1<f64>, cost: &CostMatrix, config: &SolverConfig) -> Result<FrameSolution> {
    check_frame(v, cost)?;
    config.validate_for(Variant::OstGroup)?;
    Ok(group_mm(v, cost, config, InnerStep::Hard))
}

/// Entropic and group penalties together: MM outer loop, entropic inner steps.
pub fn ost_combined_frame(v: ArrayView1<f64>, cost: &CostMatrix, config: &SolverConfig) -> Result<FrameSolution> {
    check_frame(v, cost)?;
    config.validate_for(Variant::OstCombined)?;
    Ok(group_mm(v, cost, config, InnerStep::Entropic(config.lambda_e)))
}

/// Frame-invariant precomputation shared across a batch.
enum Prepared {
    Hard(Labelling),
    Soft(Array2<f64>),
    Iterative,
}

impl Prepared {
    fn new(cost: &CostMatrix, config: &SolverConfig, variant: Variant) -> Self {
        match variant {
            Variant::Ost => Prepared::Hard(Labelling::from_cost(cost.values())),
            Variant::OstEntropic => Prepared::Soft(entropic_labelling(cost.values(), config.lambda_e)),
            Variant::OstGroup | Variant::OstCombined => Prepared::Iterative,
        }
    }

    fn frame_h(&self, v: ArrayView1<f64>, cost: &CostMatrix, config: &SolverConfig, variant: Variant) -> Vec<f64> {
        match self {
            Prepared::Hard(l) => l.apply(v),
            Prepared::Soft(l) => l.t().dot(&v).to_vec(),
            Prepared::Iterative => {
                let step = match variant {
                    Variant::OstCombined => InnerStep::Entropic(config.lambda_e),
                    _ => InnerStep::Hard,
                };
                group_mm(v, cost, config, step).h
            }
        }
    }
}

/// Unmix every active frame independently; masked frames get zero columns.
pub fn unmix(frames: &NormalizedFrames, cost: &CostMatrix, config: &SolverConfig, variant: Variant) -> Result<Activations> {
    unmix_with_threads(frames, cost, config, variant, 1)
}

/// As [`unmix`], spreading frames over `threads` workers. Output is
/// identical to the sequential result.
pub fn unmix_with_threads(
    frames: &NormalizedFrames,
    cost: &CostMatrix,
    config: &SolverConfig,
    variant: Variant,
    threads: usize,
) -> Result<Activations> {
    if frames.n_bins() != cost.n_rows() {
        return Err(Error::dims(format!(
            "frames have {} bins, cost has {} rows",
            frames.n_bins(),
            cost.n_rows()
        )));
    }
    config.validate_for(variant)?;
    let prepared = Prepared::new(cost, config, variant);
    let n_cols = cost.n_cols();
    let solve = |n: usize| -> Vec<f64> {
        if frames.active_mask[n] {
            prepared.frame_h(frames.columns.column(n), cost, config, variant)
        } else {
            vec![0.0; n_cols]
        }
    };
    let n_frames = frames.n_frames();
    let columns: Vec<Vec<f64>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_frames).into_par_iter().map(solve).collect())
    } else {
        (0..n_frames).map(solve).collect()
    };

    let n_notes = cost.n_targets();
    let mut values = Array2::zeros((n_notes, n_frames));
    let mut noise = cost.noise_cost().map(|_| vec![0.0; n_frames]);
    for (n, h) in columns.iter().enumerate() {
        for k in 0..n_notes {
            values[[k, n]] = h[k];
        }
        if let Some(noise) = noise.as_mut() {
            noise[n] = h[n_notes];
        }
    }
    Ok(Activations {
        values,
        noise,
        fundamentals: cost.col_freqs().to_vec(),
        frame_hop_seconds: frames.frame_hop_seconds,
        frame_offset_seconds: frames.frame_offset_seconds,
    })
}
