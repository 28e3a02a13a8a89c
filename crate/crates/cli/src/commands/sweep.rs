use std::fmt::Write;
use std::path::Path;

use ost_core::eval::EvalReport;
use ost_core::pipeline::{analyze, score, transcribe_frames, RunConfig};
use ost_core::{decode_wav, Error, Method};

use super::{truth_roll, write_all};
use crate::args::{parse_grid, SweepArgs};
use crate::{CliError, CliResult};

/// Candidate values per hyper-parameter; `None` leaves the setting unset.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub epsilon0: Vec<f64>,
    pub lambda_e: Vec<Option<f64>>,
    pub lambda_g: Vec<Option<f64>>,
    pub noise: Vec<Option<f64>>,
}

impl SweepGrid {
    /// Five decades of epsilon0, four of lambda_e and three of noise
    /// amplitude, each centred on the defaults.
    pub fn default_for(method: Method) -> Self {
        let dirac = method.variant().is_some();
        Self {
            epsilon0: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            lambda_e: if method.uses_lambda_e() {
                vec![Some(0.3), Some(3.0), Some(30.0), Some(300.0)]
            } else {
                vec![None]
            },
            lambda_g: vec![None],
            noise: if dirac {
                vec![Some(10.0), Some(100.0), Some(1000.0)]
            } else {
                vec![None]
            },
        }
    }

    pub fn len(&self) -> usize {
        self.epsilon0.len() * self.lambda_e.len() * self.lambda_g.len() * self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn configs(&self, base: &RunConfig) -> Vec<RunConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &epsilon0 in &self.epsilon0 {
            for &lambda_e in &self.lambda_e {
                for &lambda_g in &self.lambda_g {
                    for &noise_amplitude in &self.noise {
                        out.push(RunConfig {
                            epsilon0,
                            lambda_e,
                            lambda_g,
                            noise_amplitude,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: RunConfig,
    pub validation_f: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub best: usize,
    pub test_report: EvalReport,
    pub validation_frames: usize,
    pub test_frames: usize,
}

impl SweepOutcome {
    pub fn best_point(&self) -> &SweepPoint {
        &self.points[self.best]
    }
}

/// Score every grid point on the first half of the frames, then report the
/// best point on the second half. Ties keep the earliest point.
pub fn cmd_sweep(wav: &Path, truth: &Path, grid: &SweepGrid, base: &RunConfig) -> CliResult<SweepOutcome> {
    if grid.is_empty() {
        return Err(CliError::usage("empty hyper-parameter grid"));
    }
    let configs = grid.configs(base);
    for c in &configs {
        c.validate()?;
    }
    let audio = decode_wav(wav)?;
    let frames = analyze(&audio, base)?;
    let roll = truth_roll(truth, &frames, base)?;
    let n = frames.n_frames();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!("{n} frame(s); a sweep needs at least 2")).into());
    }
    let half = n / 2;
    let (val_frames, test_frames) = (frames.slice_frames(0..half), frames.slice_frames(half..n));
    let (val_roll, test_roll) = (roll.slice_frames(0..half), roll.slice_frames(half..n));

    let mut points = Vec::with_capacity(configs.len());
    let mut best = 0;
    for config in configs {
        let acts = transcribe_frames(&val_frames, &config)?;
        let validation_f = score(&acts, &val_roll)?.1.f_measure;
        if validation_f > points.get(best).map_or(f64::NEG_INFINITY, |p: &SweepPoint| p.validation_f) {
            best = points.len();
        }
        points.push(SweepPoint { config, validation_f });
    }
    let acts = transcribe_frames(&test_frames, &points[best].config)?;
    let test_report = score(&acts, &test_roll)?.1;
    Ok(SweepOutcome {
        points,
        best,
        test_report,
        validation_frames: half,
        test_frames: n - half,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

pub fn points_to_tsv(points: &[SweepPoint]) -> String {
    let mut out = String::from("epsilon0\tlambda_e\tlambda_g\tnoise_amplitude\tvalidation_f\n");
    for p in points {
        let c = &p.config;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            c.epsilon0,
            opt(c.lambda_e),
            opt(c.lambda_g),
            opt(c.noise_amplitude),
            p.validation_f
        );
    }
    out
}

pub(super) fn run(args: &SweepArgs, threads: u32) -> CliResult<String> {
    let base = args.run.to_config(threads)?;
    let mut grid = SweepGrid::default_for(base.method);
    if let Some(s) = &args.grid_epsilon0 {
        grid.epsilon0 = parse_grid(s, "epsilon0")?
            .into_iter()
            .map(|x| x.ok_or_else(|| CliError::usage("epsilon0 grid cannot contain `none`")))
            .collect::<CliResult<_>>()?;
    } else if let Some(e) = args.run.epsilon0 {
        grid.epsilon0 = vec![e];
    }
    match (&args.grid_lambda_e, args.run.lambda_e) {
        (Some(s), _) => grid.lambda_e = parse_grid(s, "lambda_e")?,
        (None, Some(l)) => grid.lambda_e = vec![Some(l)],
        _ => {}
    }
    match (&args.grid_lambda_g, args.run.lambda_g) {
        (Some(s), _) => grid.lambda_g = parse_grid(s, "lambda_g")?,
        (None, Some(l)) => grid.lambda_g = vec![Some(l)],
        _ => {}
    }
    match (&args.grid_noise, args.run.noise_amplitude) {
        (Some(s), _) => grid.noise = parse_grid(s, "noise")?,
        (None, Some(a)) => grid.noise = vec![Some(a)],
        _ => {}
    }
    let out = cmd_sweep(&args.wav, &args.truth, &grid, &base)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{} grid points, validation on {} frames, test on {} frames",
        out.points.len(),
        out.validation_frames,
        out.test_frames
    );
    let _ = writeln!(
        text,
        "{:>10}{:>10}{:>10}{:>10}{:>10}",
        "epsilon0", "lambda_e", "lambda_g", "noise", "F(val)"
    );
    for (i, p) in out.points.iter().enumerate() {
        let c = &p.config;
        let _ = writeln!(
            text,
            "{:>10}{:>10}{:>10}{:>10}{:>10.3}{}",
            c.epsilon0,
            opt(c.lambda_e),
            opt(c.lambda_g),
            opt(c.noise_amplitude),
            p.validation_f,
            if i == out.best { "  *" } else { "" }
        );
    }
    let b = &out.best_point().config;
    let _ = writeln!(
        text,
        "best: method={} epsilon0={} lambda_e={} lambda_g={} noise_amplitude={}",
        b.method.name(),
        b.epsilon0,
        opt(b.lambda_e),
        opt(b.lambda_g),
        opt(b.noise_amplitude)
    );
    let _ = writeln!(text, "test F-measure {:.4}", out.test_report.f_measure);
    if let Some(path) = &args.out {
        write_all(&[(path.clone(), points_to_tsv(&out.points))])?;
        let _ = writeln!(text, "wrote {}", path.display());
    }
    Ok(text)
}
