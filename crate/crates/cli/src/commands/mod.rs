pub mod bench;
pub mod eval;
pub mod sweep;
pub mod toy;
pub mod transcribe;

use std::path::Path;

use ost_core::eval::{FrameClock, PianoRoll};
use ost_core::frontend::NormalizedFrames;

use crate::args::{Cli, Command};
use crate::CliResult;

pub use bench::{bench, BenchConfig, BenchRow};
pub use eval::cmd_eval;
pub use sweep::{cmd_sweep, SweepGrid, SweepOutcome, SweepPoint};
pub use toy::{cmd_toy, ToyRow, ToyRunConfig};
pub use transcribe::{cmd_transcribe, TranscribeOutcome};

pub fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Transcribe(a) => transcribe::run(a, cli.threads),
        Command::Toy(a) => toy::run(a),
        Command::Sweep(a) => sweep::run(a, cli.threads),
        Command::Bench(a) => bench::run(a, cli.threads),
        Command::Eval(a) => eval::run(a),
    }
}

pub(crate) fn clock_of(frames: &NormalizedFrames) -> FrameClock {
    FrameClock {
        hop_seconds: frames.frame_hop_seconds,
        offset_seconds: frames.frame_offset_seconds,
        n_frames: frames.n_frames(),
    }
}

pub(crate) fn truth_roll(path: &Path, frames: &NormalizedFrames, cfg: &ost_core::pipeline::RunConfig) -> CliResult<PianoRoll> {
    Ok(ost_core::eval::load_ground_truth(path, cfg.midi_range, clock_of(frames))?.roll)
}

pub(crate) fn write_all(files: &[(std::path::PathBuf, String)]) -> CliResult<()> {
    for (path, text) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| ost_core::Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
        ost_core::tsv::write_atomic(path, text)?;
    }
    Ok(())
}
