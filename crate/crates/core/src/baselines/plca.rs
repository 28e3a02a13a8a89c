//! PLCA with a fixed dictionary: per-frame EM on `min KL(v | W h)` over
//! the simplex.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::kl::{kl_floored, KL_FLOOR};
use crate::dictionary::{Dictionary, DictionaryKind};
use crate::error::{Error, Result};
use crate::frontend::NormalizedFrames;
use crate::solver::Activations;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlcaConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Append a flat `1/M` template for noise and non-harmonic content.
    pub noise_template: bool,
}

impl Default for PlcaConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            rel_tol: 1e-5,
            noise_template: false,
        }
    }
}

/// Per-frame outcome of the EM iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct PlcaState {
    /// K×N activations (noise row included when requested).
    pub h: Array2<f64>,
    /// KL objective after initialization and after every update, per frame.
    pub objective_trace: Vec<Vec<f64>>,
}

/// EM iterations for one frame from the uniform start. Returns `h` and the
/// objective trace.
pub fn plca_frame(v: ArrayView1<f64>, w: ArrayView2<f64>, max_iter: usize, rel_tol: f64) -> (Array1<f64>, Vec<f64>) {
    let k = w.ncols();
    let mut h = Array1::from_elem(k, 1.0 / k as f64);
    let vs = v.as_slice().map(|s| s.to_vec()).unwrap_or_else(|| v.to_vec());
    let mut model = w.dot(&h);
    let mut trace = vec![kl_floored(&vs, model.as_slice().unwrap())];
    if k == 1 {
        return (h, trace);
    }
    for _ in 0..max_iter {
        let ratio = Array1::from_iter(v.iter().zip(model.iter()).map(|(&vi, &m)| {
            if vi > 0.0 {
                vi / m.max(KL_FLOOR)
            } else {
                0.0
            }
        }));
        let back = w.t().dot(&ratio);
        h.zip_mut_with(&back, |hk, &b| *hk *= b);
        let s = h.sum();
        if !(s > 0.0) {
            break;
        }
        h /= s;
        model = w.dot(&h);
        let obj = kl_floored(&vs, model.as_slice().unwrap());
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if (prev - obj).abs() <= rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (h, trace)
}

fn template_matrix(dict: &Dictionary, noise: bool) -> Result<Array2<f64>> {
    let w = match (dict.kind(), dict.templates()) {
        (DictionaryKind::Harmonic, Some(w)) => w,
        _ => return Err(Error::param("PLCA needs a dictionary with explicit templates")),
    };
    if !noise {
        return Ok(w.clone());
    }
    let m = w.nrows();
    let flat = Array2::from_elem((m, 1), 1.0 / m as f64);
    ndarray::concatenate(Axis(1), &[w.view(), flat.view()]).map_err(|e| Error::Numeric(e.to_string()))
}

/// Unmix every active frame; masked frames get zero columns.
pub fn plca_unmix(
    frames: &NormalizedFrames,
    dict: &Dictionary,
    config: &PlcaConfig,
    threads: usize,
) -> Result<(Activations, PlcaState)> {
    if config.max_iter == 0 || !(config.rel_tol > 0.0) {
        return Err(Error::param("PLCA needs max_iter >= 1 and rel_tol > 0"));
    }
    let w = template_matrix(dict, config.noise_template)?;
    if w.nrows() != frames.n_bins() {
        return Err(Error::dims(format!(
            "dictionary has {} bins, frames have {}",
            w.nrows(),
            frames.n_bins()
        )));
    }
    let k = w.ncols();
    let solve = |n: usize| -> (Vec<f64>, Vec<f64>) {
        if frames.active_mask[n] {
            let (h, trace) = plca_frame(frames.columns.column(n), w.view(), config.max_iter, config.rel_tol);
            (h.to_vec(), trace)
        } else {
            (vec![0.0; k], Vec::new())
        }
    };
    let n_frames = frames.n_frames();
    let results: Vec<(Vec<f64>, Vec<f64>)> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_frames).into_par_iter().map(solve).collect())
    } else {
        (0..n_frames).map(solve).collect()
    };

    let mut h = Array2::zeros((k, n_frames));
    let mut traces = Vec::with_capacity(n_frames);
    for (n, (col, trace)) in results.into_iter().enumerate() {
        h.column_mut(n).assign(&Array1::from(col));
        traces.push(trace);
    }
    let n_notes = dict.n_notes();
    let acts = Activations {
        values: h.slice(ndarray::s![..n_notes, ..]).to_owned(),
        noise: config.noise_template.then(|| h.row(n_notes).to_vec()),
        fundamentals: dict.fundamentals().to_vec(),
        frame_hop_seconds: frames.frame_hop_seconds,
        frame_offset_seconds: frames.frame_offset_seconds,
    };
    Ok((
        acts,
        PlcaState {
            h,
            objective_trace: traces,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{make_dirac_dictionary, make_harmonic_dictionary, HarmonicTemplateParams};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dictionary_recovers_frame() {
        let w = Array2::<f64>::eye(4);
        let v = array![0.1, 0.2, 0.3, 0.4];
        let (h, trace) = plca_frame(v.view(), w.view(), 1000, 1e-12);
        for (a, b) in h.iter().zip(v.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(trace.last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_template_is_immediate() {
        let w = array![[0.5], [0.5]];
        let (h, trace) = plca_frame(array![0.9, 0.1].view(), w.view(), 1000, 1e-5);
        assert_eq!(h.to_vec(), vec![1.0]);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn exact_template_is_found() {
        let freqs: Vec<f64> = (1..=128).map(|i| i as f64 * 10.0).collect();
        let p = HarmonicTemplateParams {
            kernel_width: 8.0,
            damping: 0.3,
            n_partials: 6,
        };
        let d = make_harmonic_dictionary(&freqs, &[110.0, 165.0, 220.0], &p).unwrap();
        let w = d.templates().unwrap();
        let (h, trace) = plca_frame(w.column(1), w.view(), 5000, 1e-12);
        assert!(*trace.last().unwrap() < 1e-8);
        assert!(h[1] > 0.99);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let (m, k) = (rng.gen_range(2..40), rng.gen_range(1..8));
            let mut w = Array2::from_shape_fn((m, k), |_| rng.gen_range(0.0..1.0f64).powi(3));
            for mut c in w.columns_mut() {
                let s = c.sum();
                c /= s;
            }
            let mut v = Array1::from_shape_fn(m, |_| rng.gen_range(0.0..1.0f64));
            let s = v.sum();
            v /= s;
            let (h, trace) = plca_frame(v.view(), w.view(), 300, 1e-12);
            assert!((h.sum() - 1.0).abs() < 1e-12);
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "{pair:?}");
            }
        }
    }

    #[test]
    fn rejects_dirac_dictionary_and_mismatch() {
        let frames = NormalizedFrames::from_columns(array![[1.0], [0.0]], vec![10.0, 20.0], 0.1).unwrap();
        let dirac = make_dirac_dictionary(&[10.0]).unwrap();
        assert!(plca_unmix(&frames, &dirac, &PlcaConfig::default(), 1).is_err());
        let freqs: Vec<f64> = (1..=3).map(|i| i as f64 * 10.0).collect();
        let p = HarmonicTemplateParams {
            kernel_width: 5.0,
            damping: 0.3,
            n_partials: 1,
        };
        let d = make_harmonic_dictionary(&freqs, &[10.0], &p).unwrap();
        assert!(matches!(
            plca_unmix(&frames, &d, &PlcaConfig::default(), 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn noise_template_row_is_split_out() {
        let freqs: Vec<f64> = (1..=3).map(|i| i as f64 * 10.0).collect();
        let p = HarmonicTemplateParams {
            kernel_width: 1.0,
            damping: 0.3,
            n_partials: 1,
        };
        let d = make_harmonic_dictionary(&freqs, &[10.0], &p).unwrap();
        let frames = NormalizedFrames::from_columns(array![[0.5, 0.0], [0.25, 0.0], [0.25, 0.0]], freqs, 0.1).unwrap();
        let cfg = PlcaConfig {
            noise_template: true,
            ..PlcaConfig::default()
        };
        let (acts, state) = plca_unmix(&frames, &d, &cfg, 1).unwrap();
        assert_eq!(acts.n_notes(), 1);
        let noise = acts.noise.unwrap();
        assert!((acts.values[[0, 0]] + noise[0] - 1.0).abs() < 1e-12);
        assert_eq!(noise[1], 0.0);
        assert!(state.objective_trace[1].is_empty());
    }
}
