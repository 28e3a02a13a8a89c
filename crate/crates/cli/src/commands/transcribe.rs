use std::fmt::Write;
use std::path::Path;
use std::time::Instant;

use ost_core::eval::{EvalReport, PianoRoll};
use ost_core::pipeline::{analyze, score, transcribe_frames, RunConfig};
use ost_core::tsv::{activations_to_tsv, piano_roll_to_tsv, report_table, report_to_tsv};
use ost_core::{decode_wav, Activations};

use super::{truth_roll, write_all};
use crate::args::TranscribeArgs;
use crate::CliResult;

#[derive(Debug, Clone)]
pub struct TranscribeOutcome {
    pub activations: Activations,
    pub estimate: Option<PianoRoll>,
    pub report: Option<EvalReport>,
    pub stft_seconds: f64,
    pub unmix_seconds: f64,
}

pub fn cmd_transcribe(wav: &Path, truth: Option<&Path>, cfg: &RunConfig) -> CliResult<TranscribeOutcome> {
    cfg.validate()?;
    let audio = decode_wav(wav)?;
    let start = Instant::now();
    let frames = analyze(&audio, cfg)?;
    let stft_seconds = start.elapsed().as_secs_f64();
    let truth = truth.map(|p| truth_roll(p, &frames, cfg)).transpose()?;
    let start = Instant::now();
    let activations = transcribe_frames(&frames, cfg)?;
    let unmix_seconds = start.elapsed().as_secs_f64();
    let (estimate, report) = match truth {
        Some(t) => {
            let (est, mut rep) = score(&activations, &t)?;
            rep.wall_time_seconds.push((cfg.method.name().to_string(), unmix_seconds));
            (Some(est), Some(rep))
        }
        None => (None, None),
    };
    Ok(TranscribeOutcome {
        activations,
        estimate,
        report,
        stft_seconds,
        unmix_seconds,
    })
}

pub(super) fn run(args: &TranscribeArgs, threads: u32) -> CliResult<String> {
    let cfg = args.run.to_config(threads)?;
    let out = cmd_transcribe(&args.wav, args.truth.as_deref(), &cfg)?;

    let dir = &args.out_dir;
    let mut files = vec![(dir.join("activations.tsv"), activations_to_tsv(&out.activations))];
    if let (Some(est), Some(rep)) = (&out.estimate, &out.report) {
        files.push((dir.join("piano_roll.tsv"), piano_roll_to_tsv(est)));
        files.push((dir.join("report.tsv"), report_to_tsv(rep)));
    }
    let timing = format!(
        "stage\tseconds\nstft\t{}\nunmix\t{}\nunmix_per_frame\t{}\n",
        out.stft_seconds,
        out.unmix_seconds,
        out.unmix_seconds / out.activations.n_frames().max(1) as f64
    );
    files.push((dir.join("timing.tsv"), timing));
    write_all(&files)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{}: {} notes x {} frames, unmixing {:.4}s",
        cfg.method.name(),
        out.activations.n_notes(),
        out.activations.n_frames(),
        out.unmix_seconds
    );
    if let Some(rep) = &out.report {
        text.push_str(&report_table(rep));
    }
    for (p, _) in &files {
        let _ = writeln!(text, "wrote {}", p.display());
    }
    Ok(text)
}
