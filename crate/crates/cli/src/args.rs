use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ost_core::eval::{MidiRange, ToyScenario};
use ost_core::pipeline::RunConfig;
use ost_core::{Method, SpectrumScale};

use crate::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "ost", version, about = "Spectral unmixing and transcription with harmonic-invariant optimal transport")]
pub struct Cli {
    /// key=value file supplying defaults for any long flag of the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for frame-parallel solvers
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: u32,

    /// Output format for written artifacts
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Unmix a WAV file into note activations and optionally score them
    #[command(args_override_self = true)]
    Transcribe(TranscribeArgs),
    /// Unmix a synthetic misspecified frame with every method
    #[command(args_override_self = true)]
    Toy(ToyArgs),
    /// Grid-search hyper-parameters on the first half of a recording
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Time PLCA, OST and OST_e on random frames
    #[command(args_override_self = true)]
    Bench(BenchArgs),
    /// Score an activations TSV against a ground-truth file
    #[command(args_override_self = true)]
    Eval(EvalArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_method, default_value = "ost_e")]
    pub method: Method,
    /// Harmonic penalty per landing multiple [default: 10]
    #[arg(long)]
    pub epsilon0: Option<f64>,
    /// Use a flat harmonic penalty instead of one growing with the multiple
    #[arg(long)]
    pub no_octave_scaling: bool,
    #[arg(long)]
    pub lambda_e: Option<f64>,
    #[arg(long)]
    pub lambda_g: Option<f64>,
    /// Add a flat noise column (or the PLCA noise template) with this cost
    #[arg(long)]
    pub noise_amplitude: Option<f64>,
    #[arg(long, default_value_t = ost_core::dictionary::DEFAULT_MIDI_LOW as i32)]
    pub midi_low: i32,
    #[arg(long, default_value_t = ost_core::dictionary::DEFAULT_MIDI_HIGH as i32)]
    pub midi_high: i32,
    #[arg(long, default_value_t = ost_core::frontend::DEFAULT_WINDOW_LEN)]
    pub window: usize,
    #[arg(long, default_value_t = ost_core::frontend::DEFAULT_HOP)]
    pub hop: usize,
    /// Power instead of magnitude spectrogram
    #[arg(long)]
    pub power: bool,
    #[arg(long, default_value_t = ost_core::frontend::DEFAULT_SILENCE_THRESHOLD)]
    pub silence_threshold: f64,
    #[arg(long, default_value_t = ost_core::solver::DEFAULT_MM_ITERATIONS)]
    pub mm_iterations: usize,
    /// Harmonic template kernel width in STFT bins (PLCA, OT_h)
    #[arg(long, default_value_t = 1.0)]
    pub kernel_width: f64,
    #[arg(long, default_value_t = 0.3)]
    pub damping: f64,
    #[arg(long, default_value_t = 8)]
    pub partials: usize,
    #[arg(long, default_value_t = 1000)]
    pub plca_max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub plca_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunArgs {
    pub fn to_config(&self, threads: u32) -> CliResult<RunConfig> {
        let cfg = RunConfig {
            method: self.method,
            epsilon0: self.epsilon0.unwrap_or(ost_core::pipeline::DEFAULT_EPSILON0),
            octave_scaling: !self.no_octave_scaling,
            lambda_e: self.lambda_e,
            lambda_g: self.lambda_g,
            noise_amplitude: self.noise_amplitude,
            midi_range: MidiRange::new(self.midi_low, self.midi_high)?,
            window_len: self.window,
            hop: self.hop,
            scale: if self.power {
                SpectrumScale::Power
            } else {
                SpectrumScale::Magnitude
            },
            silence_threshold: self.silence_threshold,
            mm_iterations: self.mm_iterations,
            kernel_width_bins: self.kernel_width,
            damping: self.damping,
            n_partials: self.partials,
            plca_max_iter: self.plca_max_iter,
            plca_rel_tol: self.plca_tol,
            seed: self.seed,
            threads: threads as usize,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct TranscribeArgs {
    pub wav: PathBuf,
    /// Ground-truth note events (onset, offset, MIDI pitch)
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioArg {
    /// Shifted fundamentals
    A,
    /// Wrong partial amplitudes
    B,
    Both,
}

impl ScenarioArg {
    pub fn scenarios(self) -> Vec<ToyScenario> {
        match self {
            ScenarioArg::A => vec![ToyScenario::ShiftedFundamentals],
            ScenarioArg::B => vec![ToyScenario::WrongAmplitudes],
            ScenarioArg::Both => vec![ToyScenario::ShiftedFundamentals, ToyScenario::WrongAmplitudes],
        }
    }
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::Both)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds; more than one reports medians
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    /// Comma-separated subset of plca, ot_h, ost, ost_g, ost_e, ost_eg
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Number of frequency bins of the toy grid
    #[arg(long)]
    pub bins: Option<usize>,
    /// Spacing of the toy grid in Hz
    #[arg(long)]
    pub bin_hz: Option<f64>,
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[arg(long)]
    pub lambda_e: Option<f64>,
    #[arg(long)]
    pub lambda_g: Option<f64>,
    #[arg(long)]
    pub no_octave_scaling: bool,
    /// Also write the table as TSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub wav: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Comma-separated epsilon0 values
    #[arg(long)]
    pub grid_epsilon0: Option<String>,
    /// Comma-separated lambda_e values
    #[arg(long)]
    pub grid_lambda_e: Option<String>,
    /// Comma-separated lambda_g values
    #[arg(long)]
    pub grid_lambda_g: Option<String>,
    /// Comma-separated noise amplitudes; `none` disables the noise column
    #[arg(long)]
    pub grid_noise: Option<String>,
    /// Write every grid point and its validation F-measure as TSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Frequency bins per frame
    #[arg(long, default_value_t = 2048)]
    pub bins: usize,
    /// Notes in the dictionary
    #[arg(long, default_value_t = 60)]
    pub notes: usize,
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub plca_max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub(crate) fn parse_grid(spec: &str, what: &str) -> CliResult<Vec<Option<f64>>> {
    let items: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::usage(format!("empty {what} grid")));
    }
    items
        .into_iter()
        .map(|s| {
            if s.eq_ignore_ascii_case("none") {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| CliError::usage(format!("bad {what} grid value `{s}`")))
            }
        })
        .collect()
}
