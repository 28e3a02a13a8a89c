use std::fmt::Write;
use std::time::Instant;

use ndarray::Array2;
use ost_core::baselines::{plca_unmix, PlcaConfig};
use ost_core::dictionary::{make_harmonic_dictionary, Dictionary, HarmonicTemplateParams};
use ost_core::pipeline::{DEFAULT_EPSILON0, DEFAULT_LAMBDA_E};
use ost_core::{harmonic_cost, unmix_with_threads, NormalizedFrames, SolverConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::write_all;
use crate::args::BenchArgs;
use crate::{CliError, CliResult};

/// Bin spacing of a 4096-point STFT at 44.1 kHz.
const BENCH_BIN_HZ: f64 = 44100.0 / 4096.0;
const LOWEST_FUNDAMENTAL: f64 = 65.406_391_325_149_66;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub bins: usize,
    pub notes: usize,
    pub frames: usize,
    pub seed: u64,
    pub plca_max_iter: usize,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            bins: 2048,
            notes: 60,
            frames: 100,
            seed: 0,
            plca_max_iter: 1000,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: &'static str,
    pub total_seconds: f64,
    pub seconds_per_frame: f64,
    /// Mean iterations per frame (1 for closed-form solvers).
    pub iterations: f64,
    /// PLCA time per frame over this method's.
    pub speedup: f64,
}

/// Random simplex frames on a uniform grid with semitone-spaced notes: each
/// frame mixes one to four harmonic templates with random weights and
/// multiplicative noise on every bin.
pub fn bench_frames(cfg: &BenchConfig) -> CliResult<(NormalizedFrames, Dictionary)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let freqs: Vec<f64> = (1..=cfg.bins).map(|i| i as f64 * BENCH_BIN_HZ).collect();
    let fundamentals: Vec<f64> = (0..cfg.notes)
        .map(|k| LOWEST_FUNDAMENTAL * 2f64.powf(k as f64 / 12.0))
        .collect();
    let params = HarmonicTemplateParams {
        kernel_width: BENCH_BIN_HZ,
        damping: 0.3,
        n_partials: 8,
    };
    let dict = make_harmonic_dictionary(&freqs, &fundamentals, &params)?;
    let w = dict.templates().expect("harmonic dictionaries carry templates");
    let mut cols = Array2::zeros((cfg.bins, cfg.frames));
    for mut c in cols.columns_mut() {
        for _ in 0..rng.gen_range(1..=4) {
            let k = rng.gen_range(0..cfg.notes);
            c.scaled_add(rng.gen_range(0.1..1.0), &w.column(k));
        }
        c.mapv_inplace(|x| x * rng.gen_range(0.5..1.5) + 1e-6 * rng.gen::<f64>());
        let s = c.sum();
        c /= s;
    }
    Ok((NormalizedFrames::from_columns(cols, freqs, 2048.0 / 44100.0)?, dict))
}

pub fn bench(cfg: &BenchConfig) -> CliResult<Vec<BenchRow>> {
    if cfg.bins == 0 || cfg.notes == 0 {
        return Err(CliError::usage("bench needs at least one bin and one note"));
    }
    if cfg.frames == 0 {
        return Ok(Vec::new());
    }
    let (frames, dict) = bench_frames(cfg)?;
    let n = cfg.frames as f64;
    let plca = PlcaConfig {
        max_iter: cfg.plca_max_iter,
        ..PlcaConfig::default()
    };
    let start = Instant::now();
    let (_, state) = plca_unmix(&frames, &dict, &plca, cfg.threads)?;
    let plca_total = start.elapsed().as_secs_f64();
    let iterations = state.objective_trace.iter().map(|t| t.len() - 1).sum::<usize>() as f64 / n;

    let cost = harmonic_cost(&frames.freqs, dict.fundamentals(), DEFAULT_EPSILON0, true)?;
    let solver = SolverConfig {
        lambda_e: DEFAULT_LAMBDA_E,
        ..SolverConfig::default()
    };
    let mut timed = vec![("plca", plca_total, iterations)];
    for (name, variant) in [("ost", Variant::Ost), ("ost_e", Variant::OstEntropic)] {
        let start = Instant::now();
        unmix_with_threads(&frames, &cost, &solver, variant, cfg.threads)?;
        timed.push((name, start.elapsed().as_secs_f64(), 1.0));
    }
    let plca_per_frame = plca_total / n;
    Ok(timed
        .into_iter()
        .map(|(method, total, iterations)| BenchRow {
            method,
            iterations,
            total_seconds: total,
            seconds_per_frame: total / n,
            speedup: plca_per_frame / (total / n).max(f64::MIN_POSITIVE),
        })
        .collect())
}

pub fn rows_to_tsv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method\ttotal_seconds\tseconds_per_frame\titerations\tspeedup_vs_plca\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.method, r.total_seconds, r.seconds_per_frame, r.iterations, r.speedup
        );
    }
    out
}

pub(super) fn run(args: &BenchArgs, threads: u32) -> CliResult<String> {
    let cfg = BenchConfig {
        bins: args.bins,
        notes: args.notes,
        frames: args.frames,
        seed: args.seed,
        plca_max_iter: args.plca_max_iter,
        threads: threads as usize,
    };
    let rows = bench(&cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "M={} K={} N={}", cfg.bins, cfg.notes, cfg.frames);
    let _ = writeln!(
        text,
        "{:<8}{:>14}{:>16}{:>12}{:>12}",
        "method", "total (s)", "per frame (s)", "iter/frame", "speedup"
    );
    for r in &rows {
        let _ = writeln!(
            text,
            "{:<8}{:>14.4}{:>16.3e}{:>12.1}{:>11.1}x",
            r.method, r.total_seconds, r.seconds_per_frame, r.iterations, r.speedup
        );
    }
    if let Some(out) = &args.out {
        write_all(&[(out.clone(), rows_to_tsv(&rows))])?;
        let _ = writeln!(text, "wrote {}", out.display());
    }
    Ok(text)
}
