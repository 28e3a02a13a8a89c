use std::fmt::Write;
use std::path::Path;

use ost_core::dictionary::freq_to_midi;
use ost_core::eval::{load_ground_truth, EvalReport, FrameClock, MidiRange};
use ost_core::pipeline::score;
use ost_core::tsv::{activations_from_tsv, report_table, report_to_tsv};
use ost_core::Error;

use super::write_all;
use crate::args::EvalArgs;
use crate::CliResult;

pub fn cmd_eval(activations: &Path, truth: &Path) -> CliResult<EvalReport> {
    let text = std::fs::read_to_string(activations).map_err(|e| Error::Io {
        path: activations.to_path_buf(),
        source: e,
    })?;
    let acts = activations_from_tsv(&text)?;
    let (Some(&lo), Some(&hi)) = (acts.fundamentals.first(), acts.fundamentals.last()) else {
        return Err(Error::DimensionMismatch("activations have no note rows".into()).into());
    };
    let range = MidiRange::new(freq_to_midi(lo), freq_to_midi(hi))?;
    let clock = FrameClock {
        hop_seconds: acts.frame_hop_seconds,
        offset_seconds: acts.frame_offset_seconds,
        n_frames: acts.n_frames(),
    };
    let roll = load_ground_truth(truth, range, clock)?.roll;
    Ok(score(&acts, &roll)?.1)
}

pub(super) fn run(args: &EvalArgs) -> CliResult<String> {
    let report = cmd_eval(&args.activations, &args.truth)?;
    let mut text = report_table(&report);
    if let Some(out) = &args.out {
        write_all(&[(out.clone(), report_to_tsv(&report))])?;
        let _ = writeln!(text, "wrote {}", out.display());
    }
    Ok(text)
}
