//! Two-note unmixing scenarios under model misspecification, and a runner
//! that scores every method on them.

use std::time::Instant;

use ndarray::{Array1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{ot_unmix_lp_frame, plca_frame, PlcaConfig};
use crate::cost::{harmonic_cost, CostMatrix};
use crate::dictionary::{make_harmonic_dictionary, midi_to_freq, Dictionary, HarmonicTemplateParams};
use crate::error::{Error, Result};
use crate::eval::metrics::l1_activation_error;
use crate::solver::{ost_combined_frame, ost_entropic_frame, ost_frame, ost_group_frame, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyScenario {
    /// Templates 1 and 4 mixed with sharpened fundamentals.
    ShiftedFundamentals,
    /// Templates 1 and 6 mixed with redrawn partial amplitudes.
    WrongAmplitudes,
}

impl ToyScenario {
    pub fn mixed_templates(self) -> (usize, usize) {
        match self {
            ToyScenario::ShiftedFundamentals => (0, 3),
            ToyScenario::WrongAmplitudes => (0, 5),
        }
    }
}

/// Synthesis settings shared by both scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub bin_hz: f64,
    pub n_bins: usize,
    /// The last pitch is the upper octave of the first.
    pub midi: Vec<i32>,
    /// Kernel width in bins.
    pub kernel_width_bins: f64,
    pub damping: f64,
    pub n_partials: usize,
    pub weights: (f64, f64),
    /// Relative fundamental shift in scenario (a).
    pub shift: f64,
    /// Each draw scales the shift by a factor in `[1 - jitter, 1 + jitter]`.
    pub shift_jitter: f64,
    /// Log-uniform range of the partial amplitude factors in scenario (b).
    pub amplitude_range: (f64, f64),
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            bin_hz: 2.0,
            n_bins: 640,
            midi: vec![48, 52, 55, 57, 59, 62, 64, 60],
            kernel_width_bins: 2.0,
            damping: 0.3,
            n_partials: 8,
            weights: (0.5, 0.5),
            shift: 0.015,
            shift_jitter: 0.5,
            amplitude_range: (0.25, 4.0),
        }
    }
}

impl ToyConfig {
    pub fn freqs(&self) -> Vec<f64> {
        (1..=self.n_bins).map(|i| i as f64 * self.bin_hz).collect()
    }

    pub fn fundamentals(&self) -> Result<Vec<f64>> {
        self.midi.iter().map(|&m| midi_to_freq(m)).collect()
    }

    pub fn template_params(&self) -> HarmonicTemplateParams {
        HarmonicTemplateParams {
            kernel_width: self.kernel_width_bins * self.bin_hz,
            damping: self.damping,
            n_partials: self.n_partials,
        }
    }
}

/// One synthetic frame with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyInstance {
    pub scenario: ToyScenario,
    pub freqs: Vec<f64>,
    pub v: Array1<f64>,
    pub h_true: Vec<f64>,
    /// Unperturbed harmonic dictionary.
    pub dictionary: Dictionary,
}

pub fn make_toy_scenario(which: ToyScenario, seed: u64) -> Result<ToyInstance> {
    make_toy_scenario_with(which, seed, &ToyConfig::default())
}

pub fn make_toy_scenario_with(which: ToyScenario, seed: u64, config: &ToyConfig) -> Result<ToyInstance> {
    let freqs = config.freqs();
    let fundamentals = config.fundamentals()?;
    let params = config.template_params();
    let dictionary = make_harmonic_dictionary(&freqs, &fundamentals, &params)?;
    let (a, b) = which.mixed_templates();
    if b >= fundamentals.len() {
        return Err(Error::param("toy dictionary needs at least 6 templates"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wa, wb) = config.weights;

    let (col_a, col_b) = match which {
        ToyScenario::ShiftedFundamentals => {
            let mut shifted = |nu: f64| -> Result<Array1<f64>> {
                let jitter = if config.shift_jitter > 0.0 {
                    rng.gen_range(-config.shift_jitter..=config.shift_jitter)
                } else {
                    0.0
                };
                let nu = nu * (1.0 + config.shift * (1.0 + jitter));
                let d = make_harmonic_dictionary(&freqs, &[nu], &params)?;
                Ok(d.templates().unwrap().column(0).to_owned())
            };
            (shifted(fundamentals[a])?, shifted(fundamentals[b])?)
        }
        ToyScenario::WrongAmplitudes => {
            let (lo, hi) = config.amplitude_range;
            let mut timbre = |nu: f64| -> Result<Array1<f64>> {
                let mut col = Array1::zeros(freqs.len());
                for p in 1..=config.n_partials {
                    if p as f64 * nu > *freqs.last().unwrap() {
                        break;
                    }
                    let factor = (rng.gen_range(lo.ln()..=hi.ln())).exp();
                    // a single partial, shaped like the template's kernel
                    let one = HarmonicTemplateParams {
                        n_partials: 1,
                        ..params
                    };
                    let d = make_harmonic_dictionary(&freqs, &[p as f64 * nu], &one)?;
                    let amp = (-(p as f64) * params.damping).exp() * factor;
                    col.scaled_add(amp, &d.templates().unwrap().column(0));
                }
                let s = col.sum();
                Ok(col / s)
            };
            (timbre(fundamentals[a])?, timbre(fundamentals[b])?)
        }
    };
    let v = col_a * wa + col_b * wb;
    let s = v.sum();
    let mut h_true = vec![0.0; fundamentals.len()];
    h_true[a] = wa / s;
    h_true[b] = wb / s;
    Ok(ToyInstance {
        scenario: which,
        freqs,
        v: v / s,
        h_true,
        dictionary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyMethod {
    Plca,
    OtH,
    Ost,
    OstG,
    OstE,
    OstEg,
}

impl ToyMethod {
    pub const ALL: [ToyMethod; 6] = [
        ToyMethod::Plca,
        ToyMethod::OtH,
        ToyMethod::Ost,
        ToyMethod::OstG,
        ToyMethod::OstE,
        ToyMethod::OstEg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToyMethod::Plca => "PLCA",
            ToyMethod::OtH => "OT_h",
            ToyMethod::Ost => "OST",
            ToyMethod::OstG => "OST_g",
            ToyMethod::OstE => "OST_e",
            ToyMethod::OstEg => "OST_e+g",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "plca" => Some(ToyMethod::Plca),
            "ot_h" | "oth" => Some(ToyMethod::OtH),
            "ost" => Some(ToyMethod::Ost),
            "ost_g" => Some(ToyMethod::OstG),
            "ost_e" => Some(ToyMethod::OstE),
            "ost_eg" | "ost_e_g" => Some(ToyMethod::OstEg),
            _ => None,
        }
    }
}

/// Hyper-parameters used by the toy runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyHyper {
    pub epsilon0: f64,
    pub octave_scaling: bool,
    pub solver: SolverConfig,
    pub plca: PlcaConfig,
}

impl Default for ToyHyper {
    fn default() -> Self {
        Self {
            epsilon0: 10.0,
            octave_scaling: true,
            solver: SolverConfig {
                lambda_e: 100.0,
                lambda_g: 1000.0,
                ..SolverConfig::default()
            },
            plca: PlcaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyResult {
    pub method: ToyMethod,
    pub h: Vec<f64>,
    pub l1_error: f64,
    pub seconds: f64,
}

/// Reduced cost against the instance's fundamentals.
pub fn toy_reduced_cost(instance: &ToyInstance, hyper: &ToyHyper) -> Result<CostMatrix> {
    harmonic_cost(
        &instance.freqs,
        instance.dictionary.fundamentals(),
        hyper.epsilon0,
        hyper.octave_scaling,
    )
}

pub fn run_toy_method(instance: &ToyInstance, method: ToyMethod, hyper: &ToyHyper) -> Result<ToyResult> {
    let start = Instant::now();
    let v = instance.v.view();
    let h = match method {
        ToyMethod::Plca => {
            let w = instance.dictionary.templates().ok_or_else(|| Error::param("missing templates"))?;
            plca_frame(v, w.view(), hyper.plca.max_iter, hyper.plca.rel_tol).0.to_vec()
        }
        ToyMethod::OtH => {
            let w = instance.dictionary.templates().ok_or_else(|| Error::param("missing templates"))?;
            let full = harmonic_cost(&instance.freqs, &instance.freqs, hyper.epsilon0, hyper.octave_scaling)?;
            ot_unmix_lp_frame(v, w, full.values())?.h
        }
        ToyMethod::Ost => ost_frame(v, &toy_reduced_cost(instance, hyper)?)?.h,
        ToyMethod::OstG => ost_group_frame(v, &toy_reduced_cost(instance, hyper)?, &hyper.solver)?.h,
        ToyMethod::OstE => ost_entropic_frame(v, &toy_reduced_cost(instance, hyper)?, hyper.solver.lambda_e)?.h,
        ToyMethod::OstEg => ost_combined_frame(v, &toy_reduced_cost(instance, hyper)?, &hyper.solver)?.h,
    };
    let seconds = start.elapsed().as_secs_f64();
    let l1_error = l1_activation_error(&h, &instance.h_true)?;
    Ok(ToyResult {
        method,
        h,
        l1_error,
        seconds,
    })
}

pub fn run_toy(instance: &ToyInstance, methods: &[ToyMethod], hyper: &ToyHyper) -> Result<Vec<ToyResult>> {
    methods.iter().map(|&m| run_toy_method(instance, m, hyper)).collect()
}

/// Sum of a column-stochastic instance, exposed for sanity checks.
pub fn total_mass(instance: &ToyInstance) -> f64 {
    instance.v.sum_axis(Axis(0)).into_scalar()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        for s in [ToyScenario::ShiftedFundamentals, ToyScenario::WrongAmplitudes] {
            let a = make_toy_scenario(s, 42).unwrap();
            let b = make_toy_scenario(s, 42).unwrap();
            assert_eq!(a, b);
            assert!((total_mass(&a) - 1.0).abs() < 1e-12);
            let c = make_toy_scenario(s, 43).unwrap();
            assert_ne!(a.v, c.v);
        }
    }

    #[test]
    fn dictionary_layout() {
        let inst = make_toy_scenario(ToyScenario::ShiftedFundamentals, 0).unwrap();
        let f = inst.dictionary.fundamentals();
        assert_eq!(f.len(), 8);
        assert!((f[7] - 2.0 * f[0]).abs() < 1e-9);
        let expect = [0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert!(inst.h_true.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn zero_shift_is_recovered_exactly() {
        let cfg = ToyConfig {
            shift: 0.0,
            kernel_width_bins: 0.25,
            ..ToyConfig::default()
        };
        let inst = make_toy_scenario_with(ToyScenario::ShiftedFundamentals, 3, &cfg).unwrap();
        let hyper = ToyHyper {
            epsilon0: 1.0,
            solver: SolverConfig {
                lambda_g: 100.0,
                ..ToyHyper::default().solver
            },
            ..ToyHyper::default()
        };
        let r = run_toy_method(&inst, ToyMethod::OstG, &hyper).unwrap();
        assert!(r.l1_error < 1e-6, "{}", r.l1_error);
    }

    fn median_errors(which: ToyScenario, methods: &[ToyMethod]) -> Vec<f64> {
        let mut errs = vec![Vec::new(); methods.len()];
        for seed in 0..11 {
            let inst = make_toy_scenario(which, seed).unwrap();
            for (e, r) in errs.iter_mut().zip(run_toy(&inst, methods, &ToyHyper::default()).unwrap()) {
                e.push(r.l1_error);
            }
        }
        errs.into_iter()
            .map(|mut e| {
                e.sort_by(f64::total_cmp);
                e[e.len() / 2]
            })
            .collect()
    }

    #[test]
    fn shift_hurts_plca_more_than_ost_g() {
        let m = median_errors(ToyScenario::ShiftedFundamentals, &[ToyMethod::Plca, ToyMethod::Ost, ToyMethod::OstG]);
        assert!(m[2] < m[0] && m[2] < m[1], "{m:?}");
    }

    #[test]
    fn oth_respects_the_bin_guard() {
        let inst = make_toy_scenario(ToyScenario::WrongAmplitudes, 0).unwrap();
        assert!(matches!(
            run_toy_method(&inst, ToyMethod::OtH, &ToyHyper::default()),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn method_names_parse() {
        for m in ToyMethod::ALL {
            assert_eq!(ToyMethod::parse(m.name()), Some(m));
        }
        assert_eq!(ToyMethod::parse("nope"), None);
    }
}
