//! Audio-to-activations pipeline shared by the command-line tool and tests.

use std::time::Instant;

use crate::baselines::{ot_unmix_lp, plca_unmix, PlcaConfig};
use crate::cost::{append_noise_column, harmonic_cost, CostMatrix};
use crate::dictionary::{chromatic_fundamentals, make_dirac_dictionary, make_harmonic_dictionary, Dictionary};
use crate::dictionary::{HarmonicTemplateParams, DEFAULT_MIDI_HIGH, DEFAULT_MIDI_LOW};
use crate::error::{Error, Result};
use crate::eval::{f_measure, threshold_activations, EvalReport, MidiRange, PianoRoll};
use crate::frontend::{normalize_frames, stft_magnitude, AudioBuffer, NormalizedFrames, SpectrumScale};
use crate::frontend::{DEFAULT_HOP, DEFAULT_SILENCE_THRESHOLD, DEFAULT_WINDOW_LEN};
use crate::solver::{unmix_with_threads, Activations, SolverConfig, Variant, DEFAULT_MM_ITERATIONS};

pub const DEFAULT_EPSILON0: f64 = 10.0;
pub const DEFAULT_LAMBDA_E: f64 = 30.0;
pub const DEFAULT_NOISE_AMPLITUDE: f64 = 100.0;
pub const DEFAULT_LAMBDA_G: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Plca,
    OtH,
    Ost,
    OstE,
    OstG,
    OstEg,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Plca,
        Method::OtH,
        Method::Ost,
        Method::OstE,
        Method::OstG,
        Method::OstEg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Plca => "plca",
            Method::OtH => "ot_h",
            Method::Ost => "ost",
            Method::OstE => "ost_e",
            Method::OstG => "ost_g",
            Method::OstEg => "ost_eg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Solver variant for the Dirac-dictionary methods.
    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Plca | Method::OtH => None,
            Method::Ost => Some(Variant::Ost),
            Method::OstE => Some(Variant::OstEntropic),
            Method::OstG => Some(Variant::OstGroup),
            Method::OstEg => Some(Variant::OstCombined),
        }
    }

    pub fn uses_lambda_e(self) -> bool {
        matches!(self, Method::OstE | Method::OstEg)
    }

    pub fn uses_lambda_g(self) -> bool {
        matches!(self, Method::OstG | Method::OstEg)
    }
}

/// Everything needed to turn a recording into activations.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub epsilon0: f64,
    pub octave_scaling: bool,
    /// Unset means the default for methods that use it.
    pub lambda_e: Option<f64>,
    pub lambda_g: Option<f64>,
    /// Cost of the flat noise column (Dirac methods) or switch for the flat
    /// noise template (PLCA).
    pub noise_amplitude: Option<f64>,
    pub midi_range: MidiRange,
    pub window_len: usize,
    pub hop: usize,
    pub scale: SpectrumScale,
    pub silence_threshold: f64,
    pub mm_iterations: usize,
    /// Harmonic templates for PLCA and OT_h; the width is in STFT bins.
    pub kernel_width_bins: f64,
    pub damping: f64,
    pub n_partials: usize,
    pub plca_max_iter: usize,
    pub plca_rel_tol: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plca = PlcaConfig::default();
        Self {
            method: Method::OstE,
            epsilon0: DEFAULT_EPSILON0,
            octave_scaling: true,
            lambda_e: None,
            lambda_g: None,
            noise_amplitude: None,
            midi_range: MidiRange {
                low: DEFAULT_MIDI_LOW as i32,
                high: DEFAULT_MIDI_HIGH as i32,
            },
            window_len: DEFAULT_WINDOW_LEN,
            hop: DEFAULT_HOP,
            scale: SpectrumScale::Magnitude,
            silence_threshold: DEFAULT_SILENCE_THRESHOLD,
            mm_iterations: DEFAULT_MM_ITERATIONS,
            kernel_width_bins: 1.0,
            damping: 0.3,
            n_partials: 8,
            plca_max_iter: plca.max_iter,
            plca_rel_tol: plca.rel_tol,
            seed: 0,
            threads: 1,
        }
    }
}

impl RunConfig {
    /// Reject parameters the chosen method would silently ignore, and
    /// out-of-range values.
    pub fn validate(&self) -> Result<()> {
        if self.lambda_e.is_some() && !self.method.uses_lambda_e() {
            return Err(Error::param(format!("lambda_e does not apply to method {}", self.method.name())));
        }
        if self.lambda_g.is_some() && !self.method.uses_lambda_g() {
            return Err(Error::param(format!("lambda_g does not apply to method {}", self.method.name())));
        }
        if !(self.epsilon0 >= 0.0) || !self.epsilon0.is_finite() {
            return Err(Error::param("epsilon0 must be finite and non-negative"));
        }
        if let Some(a) = self.noise_amplitude {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::param("noise amplitude must be finite and non-negative"));
            }
        }
        if self.window_len < 2 || self.hop == 0 {
            return Err(Error::param("window length must be at least 2 and hop positive"));
        }
        if self.threads == 0 {
            return Err(Error::param("threads must be at least 1"));
        }
        if !(self.plca_rel_tol > 0.0) || self.plca_max_iter == 0 {
            return Err(Error::param("PLCA needs a positive tolerance and iteration cap"));
        }
        self.template_params(1.0).validate()?;
        if let Some(v) = self.method.variant() {
            self.solver_config().validate_for(v)?;
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda_e: if self.method.uses_lambda_e() {
                self.lambda_e.unwrap_or(DEFAULT_LAMBDA_E)
            } else {
                0.0
            },
            lambda_g: if self.method.uses_lambda_g() {
                self.lambda_g.unwrap_or(DEFAULT_LAMBDA_G)
            } else {
                0.0
            },
            mm_iterations: self.mm_iterations,
            ..SolverConfig::default()
        }
    }

    pub fn template_params(&self, bin_hz: f64) -> HarmonicTemplateParams {
        HarmonicTemplateParams {
            kernel_width: self.kernel_width_bins * bin_hz,
            damping: self.damping,
            n_partials: self.n_partials,
        }
    }

    pub fn plca_config(&self) -> PlcaConfig {
        PlcaConfig {
            max_iter: self.plca_max_iter,
            rel_tol: self.plca_rel_tol,
            noise_template: self.noise_amplitude.is_some(),
        }
    }
}

pub fn analyze(audio: &AudioBuffer, config: &RunConfig) -> Result<NormalizedFrames> {
    let spec = stft_magnitude(audio, config.window_len, config.hop, config.scale)?;
    Ok(normalize_frames(&spec, config.silence_threshold))
}

/// Reduced cost against the fundamentals, with the noise column if requested.
pub fn reduced_cost(freqs: &[f64], fundamentals: &[f64], config: &RunConfig) -> Result<CostMatrix> {
    let cost = harmonic_cost(freqs, fundamentals, config.epsilon0, config.octave_scaling)?;
    match config.noise_amplitude {
        Some(a) => append_noise_column(&cost, a),
        None => Ok(cost),
    }
}

fn harmonic_dictionary(frames: &NormalizedFrames, fundamentals: &[f64], config: &RunConfig) -> Result<Dictionary> {
    let bin_hz = match frames.freqs.as_slice() {
        [a, b, ..] => b - a,
        [a] => *a,
        [] => return Err(Error::dims("no frequency bins")),
    };
    make_harmonic_dictionary(&frames.freqs, fundamentals, &config.template_params(bin_hz))
}

pub fn transcribe_frames(frames: &NormalizedFrames, config: &RunConfig) -> Result<Activations> {
    config.validate()?;
    let fundamentals = chromatic_fundamentals(config.midi_range.low, config.midi_range.high)?;
    match config.method {
        Method::Plca => {
            let dict = harmonic_dictionary(frames, &fundamentals, config)?;
            Ok(plca_unmix(frames, &dict, &config.plca_config(), config.threads)?.0)
        }
        Method::OtH => {
            let dict = harmonic_dictionary(frames, &fundamentals, config)?;
            let cost = harmonic_cost(&frames.freqs, &frames.freqs, config.epsilon0, config.octave_scaling)?;
            ot_unmix_lp(frames, &dict, &cost)
        }
        method => {
            let variant = method.variant().expect("Dirac methods have a solver variant");
            make_dirac_dictionary(&fundamentals)?;
            let cost = reduced_cost(&frames.freqs, &fundamentals, config)?;
            unmix_with_threads(frames, &cost, &config.solver_config(), variant, config.threads)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    pub activations: Activations,
    /// Wall-clock seconds spent unmixing, excluding the STFT.
    pub unmix_seconds: f64,
}

pub fn transcribe(audio: &AudioBuffer, config: &RunConfig) -> Result<Transcription> {
    config.validate()?;
    let frames = analyze(audio, config)?;
    let start = Instant::now();
    let activations = transcribe_frames(&frames, config)?;
    Ok(Transcription {
        activations,
        unmix_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Threshold with the ground-truth polyphony and score.
pub fn score(activations: &Activations, truth: &PianoRoll) -> Result<(PianoRoll, EvalReport)> {
    let estimate = threshold_activations(activations, truth)?;
    let report = f_measure(&estimate, truth)?;
    Ok((estimate, report))
}
