//! Transport cost matrices between frequency axes.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostRecipe {
    Quadratic,
    Harmonic { epsilon0: f64, octave_scaling: bool },
    Custom,
}

/// Dense non-negative cost between `row_freqs` (sources) and `col_freqs`
/// (targets), optionally followed by one flat noise column.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    row_freqs: Vec<f64>,
    col_freqs: Vec<f64>,
    recipe: CostRecipe,
    noise_cost: Option<f64>,
}

impl CostMatrix {
    /// Wrap an arbitrary cost matrix. Entries must be finite and non-negative.
    pub fn custom(values: Array2<f64>, row_freqs: Vec<f64>, col_freqs: Vec<f64>) -> Result<Self> {
        if values.dim() != (row_freqs.len(), col_freqs.len()) {
            return Err(Error::dims(format!(
                "cost is {:?} but axes are {}×{}",
                values.dim(),
                row_freqs.len(),
                col_freqs.len()
            )));
        }
        if values.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::param("costs must be finite and non-negative"));
        }
        Ok(Self {
            values,
            row_freqs,
            col_freqs,
            recipe: CostRecipe::Custom,
            noise_cost: None,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row_freqs(&self) -> &[f64] {
        &self.row_freqs
    }

    pub fn col_freqs(&self) -> &[f64] {
        &self.col_freqs
    }

    pub fn recipe(&self) -> CostRecipe {
        self.recipe
    }

    pub fn noise_cost(&self) -> Option<f64> {
        self.noise_cost
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of columns including the noise column.
    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    /// Number of note targets (excludes the noise column).
    pub fn n_targets(&self) -> usize {
        self.col_freqs.len()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[[i, k]]
    }

    /// Keep a subset of target columns; the noise column is dropped.
    pub fn select_columns(&self, cols: &[usize]) -> CostMatrix {
        let values = self.values.select(ndarray::Axis(1), cols);
        CostMatrix {
            values,
            row_freqs: self.row_freqs.clone(),
            col_freqs: cols.iter().map(|&j| self.col_freqs[j]).collect(),
            recipe: self.recipe,
            noise_cost: None,
        }
    }
}

fn check_axis(freqs: &[f64], what: &str) -> Result<()> {
    if let Some(&f) = freqs.iter().find(|&&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::param(format!("{what} frequency {f} must be positive and finite")));
    }
    Ok(())
}

/// `c_ij = (f_i - f_j)^2`.
pub fn quadratic_cost(row_freqs: &[f64], col_freqs: &[f64]) -> Result<CostMatrix> {
    check_axis(row_freqs, "row")?;
    check_axis(col_freqs, "column")?;
    let values = Array2::from_shape_fn((row_freqs.len(), col_freqs.len()), |(i, j)| {
        let d = row_freqs[i] - col_freqs[j];
        d * d
    });
    Ok(CostMatrix {
        values,
        row_freqs: row_freqs.to_vec(),
        col_freqs: col_freqs.to_vec(),
        recipe: CostRecipe::Quadratic,
        noise_cost: None,
    })
}

/// Cost of moving mass at `fi` onto a target at `fj` when every integer
/// multiple `q * fj` (q up to `ceil(fi / fj)`) is an admissible landing
/// point. Landing on q > 1 pays `epsilon0`, or `q * epsilon0` with
/// octave scaling.
pub fn harmonic_entry(fi: f64, fj: f64, epsilon0: f64, octave_scaling: bool) -> f64 {
    let q_max = (fi / fj).ceil().max(1.0) as usize;
    let mut best = {
        let d = fi - fj;
        d * d
    };
    for q in 2..=q_max {
        let d = fi - q as f64 * fj;
        let pen = if octave_scaling {
            q as f64 * epsilon0
        } else {
            epsilon0
        };
        let c = d * d + pen;
        if c < best {
            best = c;
        }
    }
    best
}

/// Harmonic-invariant cost. Passing note fundamentals as `col_freqs` gives
/// the reduced M×K matrix used against a Dirac dictionary.
pub fn harmonic_cost(
    row_freqs: &[f64],
    col_freqs: &[f64],
    epsilon0: f64,
    octave_scaling: bool,
) -> Result<CostMatrix> {
    check_axis(row_freqs, "row")?;
    check_axis(col_freqs, "column")?;
    if !(epsilon0 >= 0.0) || !epsilon0.is_finite() {
        return Err(Error::param("epsilon0 must be finite and non-negative"));
    }
    let values = Array2::from_shape_fn((row_freqs.len(), col_freqs.len()), |(i, j)| {
        harmonic_entry(row_freqs[i], col_freqs[j], epsilon0, octave_scaling)
    });
    Ok(CostMatrix {
        values,
        row_freqs: row_freqs.to_vec(),
        col_freqs: col_freqs.to_vec(),
        recipe: CostRecipe::Harmonic {
            epsilon0,
            octave_scaling,
        },
        noise_cost: None,
    })
}

/// Append a constant column that absorbs mass no note explains cheaply.
pub fn append_noise_column(cost: &CostMatrix, amplitude: f64) -> Result<CostMatrix> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::param(format!("noise amplitude {amplitude} must be finite and non-negative")));
    }
    if cost.noise_cost.is_some() {
        return Err(Error::param("cost already has a noise column"));
    }
    let (m, c) = cost.values.dim();
    let mut values = Array2::from_elem((m, c + 1), amplitude);
    values.slice_mut(ndarray::s![.., ..c]).assign(&cost.values);
    Ok(CostMatrix {
        values,
        noise_cost: Some(amplitude),
        ..cost.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerate every admissible multiple explicitly.
    fn harmonic_oracle(fi: f64, fj: f64, eps0: f64, scaling: bool) -> f64 {
        let q_max = (fi / fj).ceil() as usize;
        (1..=q_max.max(1))
            .map(|q| {
                let pen = match (q, scaling) {
                    (1, _) => 0.0,
                    (_, true) => q as f64 * eps0,
                    (_, false) => eps0,
                };
                (fi - q as f64 * fj).powi(2) + pen
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn quadratic_examples() {
        let c = quadratic_cost(&[100.0, 200.0], &[100.0, 200.0]).unwrap();
        assert_eq!(c.get(0, 1), 10000.0);
        assert_eq!(c.get(1, 0), 10000.0);
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.recipe(), CostRecipe::Quadratic);
    }

    #[test]
    fn harmonic_examples() {
        // candidates {40000, 10001, 1}
        assert_eq!(harmonic_cost(&[300.0], &[100.0], 1.0, false).unwrap().get(0, 0), 1.0);
        assert_eq!(harmonic_cost(&[100.0], &[200.0], 1.0, false).unwrap().get(0, 0), 10000.0);
        assert_eq!(harmonic_cost(&[200.0], &[100.0], 1.0, true).unwrap().get(0, 0), 2.0);
        assert!(harmonic_cost(&[200.0], &[0.0], 1.0, true).is_err());
        assert!(harmonic_cost(&[200.0], &[-5.0], 1.0, true).is_err());
    }

    #[test]
    fn noise_column() {
        let base = quadratic_cost(&[1.0, 2.0, 3.0], &[1.0, 2.0]).unwrap();
        let c = append_noise_column(&base, 7.0).unwrap();
        assert_eq!(c.n_cols(), 3);
        assert_eq!(c.n_targets(), 2);
        assert_eq!(c.noise_cost(), Some(7.0));
        assert!(c.values().column(2).iter().all(|&x| x == 7.0));
        assert_eq!(c.values().slice(ndarray::s![.., ..2]), base.values());
        let zero = append_noise_column(&base, 0.0).unwrap();
        assert!(zero.values().column(2).iter().all(|&x| x == 0.0));
        assert!(append_noise_column(&base, f64::INFINITY).is_err());
        assert!(append_noise_column(&base, -1.0).is_err());
        assert!(append_noise_column(&c, 1.0).is_err());
    }

    #[test]
    fn custom_rejects_bad_values() {
        let v = ndarray::array![[0.0, f64::NAN]];
        assert!(CostMatrix::custom(v, vec![1.0], vec![1.0, 2.0]).is_err());
        let v = ndarray::array![[0.0, 1.0]];
        assert!(CostMatrix::custom(v, vec![1.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn harmonic_matches_enumeration(fi in 1.0..5000.0f64, fj in 20.0..1000.0f64, eps in 0.0..1e4f64, scaling: bool) {
            let got = harmonic_entry(fi, fj, eps, scaling);
            prop_assert_eq!(got, harmonic_oracle(fi, fj, eps, scaling));
            prop_assert!(got.is_finite() && got >= 0.0);
        }

        #[test]
        fn harmonic_bounded_by_quadratic(freqs in proptest::collection::vec(1.0..3000.0f64, 1..12)) {
            let h = harmonic_cost(&freqs, &freqs, 0.0, true).unwrap();
            let q = quadratic_cost(&freqs, &freqs).unwrap();
            for (a, b) in h.values().iter().zip(q.values().iter()) {
                prop_assert!(a <= b);
            }
            for i in 0..freqs.len() {
                for j in 0..freqs.len() {
                    prop_assert_eq!(q.get(i, j), q.get(j, i));
                }
            }
        }

        #[test]
        fn exact_multiples_are_free(fj in 20.0..500.0f64, q in 1usize..12, eps in 0.1..100.0f64) {
            let fi = q as f64 * fj;
            prop_assert!(harmonic_entry(fi, fj, 0.0, true) <= 1e-18 * fi * fi);
            // the octave costs exactly its penalty
            let oct = harmonic_entry(2.0 * fj, fj, eps, true);
            prop_assert!((oct - 2.0 * eps).abs() <= 1e-9 * eps.max(1.0));
            prop_assert!(oct > 0.0);
        }
    }
}
