//! Spectral unmixing with harmonic-invariant optimal transport.
//!
//! A magnitude spectrogram is normalized frame by frame and each frame is
//! transported onto Dirac spikes at the note fundamentals under a cost that
//! lets energy slide for free onto divisors of its frequency. With that cost
//! the unmixing problem collapses to a per-bin assignment, so transcription
//! runs orders of magnitude faster than dictionary-based NMF.
//!
//! Module map:
//! - [`frontend`]: WAV decoding, STFT, frame normalization
//! - [`dictionary`]: harmonic and Dirac note dictionaries
//! - [`cost`]: quadratic and harmonic transport costs
//! - [`solver`]: OST and its entropic / group-regularized variants
//! - [`baselines`]: PLCA, exact LP transport, KL
//! - [`eval`]: ground truth, thresholding, F-measure, toy scenarios
//! - [`pipeline`]: audio to activations in one call
//! - [`tsv`]: text dumps of every artifact

pub mod baselines;
pub mod cost;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod pipeline;
pub mod solver;
pub mod tsv;

pub use cost::{append_noise_column, harmonic_cost, quadratic_cost, CostMatrix, CostRecipe};
pub use dictionary::{
    make_dirac_dictionary, make_harmonic_dictionary, midi_to_freq, Dictionary, DictionaryKind, HarmonicTemplateParams,
};
pub use error::{Error, Result};
pub use frontend::{decode_wav, normalize_frames, stft_magnitude, AudioBuffer, NormalizedFrames, Spectrogram, SpectrumScale};
pub use pipeline::{transcribe, transcribe_frames, Method, RunConfig, Transcription};
pub use solver::{
    ost_combined_frame, ost_entropic_frame, ost_frame, ost_group_frame, unmix, unmix_with_threads, Activations,
    FrameSolution, SolverConfig, TransportPlan, Variant,
};
