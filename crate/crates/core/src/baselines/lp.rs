//! Dense two-phase revised simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Bland's rule on both the entering and the leaving choice rules out
//! cycling on the highly degenerate transportation polytopes this crate
//! feeds it. The basis inverse is kept explicitly and rebuilt from scratch
//! every [`REFACTOR_EVERY`] pivots.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Feasibility and optimality tolerance.
pub const LP_TOLERANCE: f64 = 1e-9;
/// Largest variable count accepted by [`solve_lp`].
pub const DEFAULT_VARIABLE_GUARD: usize = 5000;
const REFACTOR_EVERY: usize = 64;

/// Equality-form LP with non-negative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Array2<f64>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, constraints: Array2<f64>, rhs: Vec<f64>) -> Result<Self> {
        if constraints.nrows() != rhs.len() {
            return Err(Error::dims(format!(
                "{} constraint rows, {} right-hand sides",
                constraints.nrows(),
                rhs.len()
            )));
        }
        if constraints.ncols() != objective.len() {
            return Err(Error::dims(format!(
                "{} constraint columns, {} objective coefficients",
                constraints.ncols(),
                objective.len()
            )));
        }
        if rhs.iter().chain(&objective).chain(constraints.iter()).any(|x| !x.is_finite()) {
            return Err(Error::param("LP data must be finite"));
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// Largest absolute violation of `Ax = b` and `x ≥ 0`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let ax = self.constraints.dot(&ArrayView1::from(x));
        let eq = ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let neg = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        eq.max(neg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with_guard(problem, DEFAULT_VARIABLE_GUARD)
}

pub fn solve_lp_with_guard(problem: &LpProblem, guard: usize) -> Result<LpSolution> {
    if problem.n_vars() > guard {
        return Err(Error::GuardExceeded {
            size: problem.n_vars(),
            guard,
        });
    }
    Simplex::new(problem).run()
}

struct Simplex {
    m: usize,
    n: usize,
    /// `[A | I]` with rows sign-flipped so that `b ≥ 0`.
    a: Array2<f64>,
    b: Array1<f64>,
    /// Columns of `a` stored contiguously for pricing.
    at: Array2<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Array2<f64>,
    xb: Array1<f64>,
    iterations: usize,
    max_iterations: usize,
}

enum Phase {
    One,
    Two,
}

impl Simplex {
    fn new(p: &LpProblem) -> Self {
        let (m, n) = p.constraints.dim();
        let mut a = Array2::zeros((m, n + m));
        let mut b = Array1::from(p.rhs.clone());
        for i in 0..m {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            b[i] *= sign;
            for j in 0..n {
                a[[i, j]] = sign * p.constraints[[i, j]];
            }
            a[[i, n + i]] = 1.0;
        }
        let basis: Vec<usize> = (n..n + m).collect();
        let mut is_basic = vec![false; n + m];
        for &j in &basis {
            is_basic[j] = true;
        }
        Self {
            m,
            n,
            at: a.t().as_standard_layout().into_owned(),
            a,
            xb: b.clone(),
            b,
            cost: p.objective.clone(),
            basis,
            is_basic,
            binv: Array2::eye(m),
            iterations: 0,
            max_iterations: 50 * (n + 2 * m) + 1000,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n
    }

    fn phase_cost(&self, phase: &Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if self.is_artificial(j) {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if self.is_artificial(j) {
                    0.0
                } else {
                    self.cost[j]
                }
            }
        }
    }

    fn column(&self, j: usize) -> Array1<f64> {
        self.binv.dot(&self.at.row(j))
    }

    fn run(mut self) -> Result<LpSolution> {
        if self.m > 0 {
            self.iterate(Phase::One)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(self.xb.iter())
                .filter(|(&j, _)| self.is_artificial(j))
                .map(|(_, &x)| x)
                .sum();
            let scale = self.b.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
            if infeas > LP_TOLERANCE * scale {
                return Err(Error::Infeasible);
            }
            self.drive_out_artificials();
            self.iterate(Phase::Two)?;
            self.refactor()?;
        }
        let mut x = vec![0.0; self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[r].max(0.0);
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: self.iterations,
        })
    }

    fn iterate(&mut self, phase: Phase) -> Result<()> {
        let cmax = match phase {
            Phase::One => 1.0,
            Phase::Two => self.cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs())),
        };
        let dtol = LP_TOLERANCE * cmax;
        let mut since_refactor = 0;
        loop {
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
            // duals y = c_Bᵀ B⁻¹
            let cb = Array1::from_iter(self.basis.iter().map(|&j| self.phase_cost(&phase, j)));
            let y = cb.dot(&self.binv);
            let n_candidates = match phase {
                Phase::One => self.n + self.m,
                Phase::Two => self.n,
            };
            let entering = (0..n_candidates).find(|&j| {
                !self.is_basic[j] && self.phase_cost(&phase, j) - y.dot(&self.at.row(j)) < -dtol
            });
            let Some(entering) = entering else {
                return Ok(());
            };
            let u = self.column(entering);

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let ratio = if u[r] > LP_TOLERANCE {
                    self.xb[r].max(0.0) / u[r]
                } else if matches!(phase, Phase::Two) && self.is_artificial(self.basis[r]) && u[r].abs() > LP_TOLERANCE {
                    // zero-level artificial left over from a redundant row
                    0.0
                } else {
                    continue;
                };
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - 1e-15
                            || (ratio <= best_ratio + 1e-15 && self.basis[r] < self.basis[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, entering, &u);
            since_refactor += 1;
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::Numeric(format!(
                    "simplex did not terminate within {} pivots",
                    self.max_iterations
                )));
            }
        }
    }

    fn pivot(&mut self, r: usize, entering: usize, u: &Array1<f64>) {
        let piv = u[r];
        let theta = self.xb[r] / piv;
        for i in 0..self.m {
            if i != r {
                self.xb[i] -= theta * u[i];
            }
        }
        self.xb[r] = theta;
        let pivot_row = self.binv.row(r).to_owned() / piv;
        for i in 0..self.m {
            if i != r && u[i] != 0.0 {
                let f = u[i];
                self.binv.row_mut(i).scaled_add(-f, &pivot_row);
            }
        }
        self.binv.row_mut(r).assign(&pivot_row);
        self.is_basic[self.basis[r]] = false;
        self.is_basic[entering] = true;
        self.basis[r] = entering;
    }

    /// Swap zero-level artificials for structural columns where possible.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = self.binv.row(r).to_owned();
            let candidate = (0..self.n).find(|&j| !self.is_basic[j] && row.dot(&self.at.row(j)).abs() > 1e-7);
            if let Some(j) = candidate {
                let u = self.column(j);
                self.pivot(r, j, &u);
            }
        }
    }

    /// Recompute `B⁻¹` and `x_B` by Gauss-Jordan with partial pivoting.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut aug = Array2::<f64>::zeros((m, 2 * m));
        for (c, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                aug[[i, c]] = self.a[[i, j]];
            }
        }
        for i in 0..m {
            aug[[i, m + i]] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| aug[[x, c]].abs().total_cmp(&aug[[y, c]].abs()))
                .unwrap_or(c);
            if aug[[p, c]].abs() < 1e-12 {
                return Err(Error::Numeric("singular simplex basis".into()));
            }
            if p != c {
                for k in 0..2 * m {
                    aug.swap([p, k], [c, k]);
                }
            }
            let piv = aug[[c, c]];
            aug.row_mut(c).mapv_inplace(|x| x / piv);
            let pivot_row = aug.row(c).to_owned();
            for i in 0..m {
                if i != c {
                    let f = aug[[i, c]];
                    if f != 0.0 {
                        aug.row_mut(i).scaled_add(-f, &pivot_row);
                    }
                }
            }
        }
        self.binv = aug.slice(ndarray::s![.., m..]).to_owned();
        self.xb = self.binv.dot(&self.b);
        Ok(())
    }
}
