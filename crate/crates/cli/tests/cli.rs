use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ost_cli::commands::{cmd_sweep, cmd_transcribe, SweepGrid};
use ost_core::eval::{format_note_events, generate_piece, render, NoteEvent, SynthConfig};
use ost_core::frontend::write_wav;
use ost_core::pipeline::{score, RunConfig};
use ost_core::tsv::{activations_from_tsv, piano_roll_from_tsv};
use ost_core::Method;

fn ost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ost")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn single_note(dir: &Path, midi: i32) -> (PathBuf, PathBuf) {
    let cfg = SynthConfig {
        duration_seconds: 2.0,
        sample_rate: 22050,
        ..SynthConfig::default()
    };
    let events = vec![NoteEvent::new(0.0, 2.0, midi).unwrap()];
    let audio = render(&events, &cfg).unwrap();
    let wav = dir.join("note.wav");
    let truth = dir.join("note.txt");
    write_wav(&wav, &audio).unwrap();
    std::fs::write(&truth, format_note_events(&events)).unwrap();
    (wav, truth)
}

fn short_piece(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = SynthConfig {
        duration_seconds: 8.0,
        sample_rate: 22050,
        seed: 3,
        ..SynthConfig::default()
    };
    let (audio, events) = generate_piece(&cfg).unwrap();
    let wav = dir.join("piece.wav");
    let truth = dir.join("piece.txt");
    write_wav(&wav, &audio).unwrap();
    std::fs::write(&truth, format_note_events(&events)).unwrap();
    (wav, truth)
}

#[test]
fn single_note_is_transcribed_at_its_own_pitch() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, truth) = single_note(dir.path(), 50);
    let out = dir.path().join("out");
    let o = ost(&["transcribe", s(&wav), "--truth", s(&truth), "--out-dir", s(&out), "--method", "ost_e"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let roll = piano_roll_from_tsv(&std::fs::read_to_string(out.join("piano_roll.tsv")).unwrap()).unwrap();
    let k50 = (50 - roll.midi_range.low) as usize;
    let k62 = (62 - roll.midi_range.low) as usize;
    let active: Vec<usize> = (0..roll.n_frames()).filter(|&n| roll.active.column(n).iter().any(|&a| a)).collect();
    assert!(!active.is_empty());
    for n in active {
        assert!(roll.active[[k50, n]], "frame {n}");
        assert!(!roll.active[[k62, n]], "frame {n}");
    }
    for f in ["activations.tsv", "report.tsv", "timing.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn missing_input_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ost(&["transcribe", "/nonexistent/in.wav", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn inapplicable_lambda_is_a_usage_error() {
    let o = ost(&["transcribe", "x.wav", "--method", "ost", "--lambda-e", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ost(&["transcribe", "x.wav", "--method", "nmf"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_succeeds() {
    let o = ost(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("transcribe"));
}

#[test]
fn toy_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    for p in [&a, &b] {
        let o = ost(&["toy", "--seed", "5", "--out", s(p)]);
        assert!(o.status.success());
    }
    let errors = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| l.split('\t').take(3).collect::<Vec<_>>().join("\t"))
            .collect()
    };
    assert_eq!(errors(&a), errors(&b));
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("OT_h\tNA\tNA\tskipped"));
}

#[test]
fn toy_scenario_a_ranks_group_methods_first() {
    let o = ost(&["toy", "--scenario", "a", "--seeds", "11", "--methods", "plca,ost,ost_g,ost_e,ost_eg"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows: Vec<(String, f64)> = text
        .lines()
        .skip(2)
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            Some((f.first()?.to_string(), f.get(1)?.parse().ok()?))
        })
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let top: Vec<&str> = rows.iter().take(2).map(|r| r.0.as_str()).collect();
    assert!(top.contains(&"OST_g") && top.contains(&"OST_e+g"), "{text}");
}

#[test]
fn bench_edge_sizes() {
    let o = ost(&["bench", "--frames", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = ost(&["bench", "--bins", "128", "--notes", "1", "--frames", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = ost(&["bench", "--notes", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn threads_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = short_piece(dir.path());
    let mut outputs = Vec::new();
    for (t, method) in [("1", "ost_eg"), ("4", "ost_eg"), ("1", "plca"), ("3", "plca")] {
        let out = dir.path().join(format!("{method}{t}"));
        let o = ost(&["transcribe", s(&wav), "--method", method, "--threads", t, "--out-dir", s(&out)]);
        assert!(o.status.success());
        outputs.push(std::fs::read(out.join("activations.tsv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
}

#[test]
fn eval_rescores_written_activations() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, truth) = short_piece(dir.path());
    let out = dir.path().join("out");
    let o = ost(&["transcribe", s(&wav), "--truth", s(&truth), "--out-dir", s(&out), "--noise-amplitude", "100"]);
    assert!(o.status.success());
    let report = dir.path().join("eval.tsv");
    let o = ost(&["eval", "--activations", s(&out.join("activations.tsv")), "--truth", s(&truth), "--out", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = |p: &Path| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .find(|l| l.starts_with("f_measure"))
            .unwrap()
            .to_string()
    };
    assert_eq!(f(&report), f(&out.join("report.tsv")));
    let acts = activations_from_tsv(&std::fs::read_to_string(out.join("activations.tsv")).unwrap()).unwrap();
    assert!(acts.noise.is_some());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bench.conf");
    std::fs::write(&conf, "# small run\nbins = 64\nnotes = 3\nframes = 7\n").unwrap();
    let o = ost(&["--config", s(&conf), "bench", "--frames", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("M=64 K=3 N=2"));
    std::fs::write(&conf, "unknown = 1\n").unwrap();
    assert_eq!(ost(&["bench", "--config", s(&conf)]).status.code(), Some(1));
}

#[test]
fn empty_sweep_grid_is_a_usage_error() {
    let o = ost(&["sweep", "x.wav", "--truth", "x.txt", "--grid-epsilon0", ""]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_bookkeeping() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, truth) = short_piece(dir.path());
    let base = RunConfig {
        method: Method::OstE,
        ..RunConfig::default()
    };

    let grid = SweepGrid {
        epsilon0: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
        lambda_e: vec![Some(30.0)],
        lambda_g: vec![None],
        noise: vec![None],
    };
    let out = cmd_sweep(&wav, &truth, &grid, &base).unwrap();
    assert_eq!(out.points.len(), 5);
    let best = out.best_point().validation_f;
    assert!(out.points.iter().all(|p| p.validation_f <= best));

    let one = SweepGrid {
        epsilon0: vec![10.0],
        lambda_e: vec![Some(30.0)],
        lambda_g: vec![None],
        noise: vec![Some(100.0)],
    };
    let out = cmd_sweep(&wav, &truth, &one, &base).unwrap();
    let cfg = out.best_point().config.clone();
    let full = cmd_transcribe(&wav, Some(&truth), &cfg).unwrap();
    let n = full.activations.n_frames();
    let test_acts = full.activations.slice_frames(n / 2..n);
    let truth_roll = ost_core::eval::load_ground_truth(
        &truth,
        cfg.midi_range,
        ost_core::eval::FrameClock {
            hop_seconds: full.activations.frame_hop_seconds,
            offset_seconds: full.activations.frame_offset_seconds,
            n_frames: n,
        },
    )
    .unwrap()
    .roll
    .slice_frames(n / 2..n);
    let (_, report) = score(&test_acts, &truth_roll).unwrap();
    assert_eq!(report.f_measure, out.test_report.f_measure);
    assert_eq!(report.true_positives, out.test_report.true_positives);
}
