//! Tab-separated dumps of spectrograms, dictionaries, costs, activations,
//! piano rolls and reports.
//!
//! Matrix files share one layout: an optional `# key=value ...` metadata
//! line, a header row whose first cell names the row axis and whose other
//! cells are column labels, then one row per entry of the row axis. Floats
//! are written with shortest round-trip formatting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::cost::{CostMatrix, CostRecipe};
use crate::dictionary::{freq_to_midi, midi_to_freq, Dictionary, DictionaryKind};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, MidiRange, PianoRoll};
use crate::frontend::{NormalizedFrames, Spectrogram};
use crate::solver::{Activations, TransportPlan};

/// Write `contents` next to `path` and rename into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::param(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\t")
}

fn matrix_tsv(meta: &str, corner: &str, col_labels: &[String], rows: &[(String, Vec<String>)]) -> String {
    let mut out = String::new();
    if !meta.is_empty() {
        let _ = writeln!(out, "# {meta}");
    }
    let _ = writeln!(out, "{corner}\t{}", col_labels.join("\t"));
    for (label, cells) in rows {
        let _ = writeln!(out, "{label}\t{}", cells.join("\t"));
    }
    out
}

struct ParsedMatrix {
    meta: HashMap<String, String>,
    col_labels: Vec<String>,
    rows: Vec<(String, Vec<String>)>,
}

fn parse_matrix(text: &str) -> Result<ParsedMatrix> {
    let mut meta = HashMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for kv in rest.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let cells: Vec<String> = line.split('\t').map(|s| s.trim().to_string()).collect();
        match &header {
            None => header = Some(cells[1..].to_vec()),
            Some(h) => {
                if cells.len() != h.len() + 1 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        reason: format!("expected {} cells, found {}", h.len() + 1, cells.len()),
                    });
                }
                rows.push((cells[0].clone(), cells[1..].to_vec()));
            }
        }
    }
    let col_labels = header.ok_or(Error::Parse {
        line: 1,
        reason: "missing header row".into(),
    })?;
    Ok(ParsedMatrix {
        meta,
        col_labels: col_labels.into_iter().filter(|c| !c.is_empty()).collect(),
        rows,
    })
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("not a number: `{s}`"),
    })
}

fn meta_f64(meta: &HashMap<String, String>, key: &str) -> Result<Option<f64>> {
    meta.get(key)
        .map(|v| parse_f64(v, 1))
        .transpose()
}

fn frame_matrix(values: &Array2<f64>, freqs: &[f64], times: &[f64], meta: &str) -> String {
    let cols: Vec<String> = times.iter().map(|t| t.to_string()).collect();
    let rows: Vec<(String, Vec<String>)> = freqs
        .iter()
        .enumerate()
        .map(|(i, f)| (f.to_string(), values.row(i).iter().map(|x| x.to_string()).collect()))
        .collect();
    matrix_tsv(meta, "freq_hz", &cols, &rows)
}

pub fn spectrogram_to_tsv(spec: &Spectrogram) -> String {
    let meta = format!("hop={} offset={}", spec.frame_hop_seconds, spec.frame_offset_seconds);
    frame_matrix(&spec.values, &spec.freqs, &spec.frame_times(), &meta)
}

pub fn frames_to_tsv(frames: &NormalizedFrames) -> String {
    let meta = format!(
        "hop={} offset={} active={}",
        frames.frame_hop_seconds,
        frames.frame_offset_seconds,
        frames.active_mask.iter().map(|&a| if a { '1' } else { '0' }).collect::<String>()
    );
    frame_matrix(&frames.columns, &frames.freqs, &frames.frame_times(), &meta)
}

/// Dump with row indices in place of frequencies.
pub fn dictionary_to_tsv(dict: &Dictionary) -> String {
    let mut out = dictionary_header(dict);
    if let Some(w) = dict.templates() {
        for (i, row) in w.rows().into_iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}", join(row.iter()));
        }
    }
    out
}

fn dictionary_header(dict: &Dictionary) -> String {
    let fundamentals: Vec<String> = dict.fundamentals().iter().map(|f| f.to_string()).collect();
    let cols: Vec<String> = dict.midi_labels().iter().map(|m| m.to_string()).collect();
    matrix_tsv(
        &format!("kind={} fundamentals={}", dict.kind().as_str(), fundamentals.join(",")),
        "freq_hz",
        &cols,
        &[],
    )
}

/// Dump templates with their frequency axis in the first column.
pub fn dictionary_to_tsv_on(dict: &Dictionary, freqs: &[f64]) -> Result<String> {
    let mut out = dictionary_header(dict);
    if let Some(w) = dict.templates() {
        if w.nrows() != freqs.len() {
            return Err(Error::dims(format!("{} template rows for {} frequencies", w.nrows(), freqs.len())));
        }
        for (f, row) in freqs.iter().zip(w.rows()) {
            let _ = writeln!(out, "{f}\t{}", join(row.iter()));
        }
    }
    Ok(out)
}

pub fn dictionary_from_tsv(text: &str) -> Result<Dictionary> {
    let parsed = parse_matrix(text)?;
    let kind = match parsed.meta.get("kind").map(String::as_str) {
        Some("harmonic") => DictionaryKind::Harmonic,
        Some("dirac") => DictionaryKind::Dirac,
        other => {
            return Err(Error::Parse {
                line: 1,
                reason: format!("unknown dictionary kind {other:?}"),
            })
        }
    };
    let fundamentals = parsed
        .meta
        .get("fundamentals")
        .ok_or(Error::Parse {
            line: 1,
            reason: "missing fundamentals".into(),
        })?
        .split(',')
        .map(|s| parse_f64(s, 1))
        .collect::<Result<Vec<_>>>()?;
    let templates = match kind {
        DictionaryKind::Dirac => None,
        DictionaryKind::Harmonic => {
            let k = fundamentals.len();
            let mut w = Array2::zeros((parsed.rows.len(), k));
            for (i, (_, cells)) in parsed.rows.iter().enumerate() {
                if cells.len() != k {
                    return Err(Error::Parse {
                        line: i + 3,
                        reason: format!("expected {k} template values"),
                    });
                }
                for (j, c) in cells.iter().enumerate() {
                    w[[i, j]] = parse_f64(c, i + 3)?;
                }
            }
            Some(w)
        }
    };
    Dictionary::from_parts(kind, fundamentals, templates)
}

pub fn cost_to_tsv(cost: &CostMatrix) -> String {
    let recipe = match cost.recipe() {
        CostRecipe::Quadratic => "quadratic".to_string(),
        CostRecipe::Harmonic {
            epsilon0,
            octave_scaling,
        } => format!("harmonic epsilon0={epsilon0} octave_scaling={octave_scaling}"),
        CostRecipe::Custom => "custom".to_string(),
    };
    let meta = match cost.noise_cost() {
        Some(a) => format!("recipe={recipe} noise={a}"),
        None => format!("recipe={recipe}"),
    };
    let mut cols: Vec<String> = cost.col_freqs().iter().map(|f| f.to_string()).collect();
    if cost.noise_cost().is_some() {
        cols.push("noise".into());
    }
    let rows: Vec<(String, Vec<String>)> = cost
        .row_freqs()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.to_string(), cost.values().row(i).iter().map(|x| x.to_string()).collect()))
        .collect();
    matrix_tsv(&meta, "row_freq_hz", &cols, &rows)
}

fn note_rows<T: std::fmt::Display>(labels: &[i32], values: &Array2<T>) -> Vec<(String, Vec<String>)> {
    labels
        .iter()
        .enumerate()
        .map(|(k, m)| (m.to_string(), values.row(k).iter().map(|x| x.to_string()).collect()))
        .collect()
}

fn times(hop: f64, offset: f64, n: usize) -> Vec<String> {
    (0..n).map(|i| (offset + i as f64 * hop).to_string()).collect()
}

pub fn activations_to_tsv(acts: &Activations) -> String {
    let meta = format!("hop={} offset={}", acts.frame_hop_seconds, acts.frame_offset_seconds);
    let labels: Vec<i32> = acts.fundamentals.iter().map(|&f| freq_to_midi(f)).collect();
    let mut rows = note_rows(&labels, &acts.values);
    if let Some(noise) = &acts.noise {
        rows.push(("noise".into(), noise.iter().map(|x| x.to_string()).collect()));
    }
    matrix_tsv(
        &meta,
        "midi",
        &times(acts.frame_hop_seconds, acts.frame_offset_seconds, acts.n_frames()),
        &rows,
    )
}

fn clock_from(parsed: &ParsedMatrix) -> Result<(f64, f64)> {
    let times: Vec<f64> = parsed
        .col_labels
        .iter()
        .map(|t| parse_f64(t, 1))
        .collect::<Result<_>>()?;
    let hop = match meta_f64(&parsed.meta, "hop")? {
        Some(h) => h,
        None if times.len() >= 2 => times[1] - times[0],
        None => {
            return Err(Error::Parse {
                line: 1,
                reason: "cannot infer frame hop".into(),
            })
        }
    };
    let offset = match meta_f64(&parsed.meta, "offset")? {
        Some(o) => o,
        None => times.first().copied().unwrap_or(0.0),
    };
    Ok((hop, offset))
}

pub fn activations_from_tsv(text: &str) -> Result<Activations> {
    let parsed = parse_matrix(text)?;
    let (hop, offset) = clock_from(&parsed)?;
    let n = parsed.col_labels.len();
    let mut fundamentals = Vec::new();
    let mut rows = Vec::new();
    let mut noise = None;
    for (i, (label, cells)) in parsed.rows.iter().enumerate() {
        let vals = cells.iter().map(|c| parse_f64(c, i + 3)).collect::<Result<Vec<_>>>()?;
        if label == "noise" {
            noise = Some(vals);
            continue;
        }
        let midi: i32 = label.parse().map_err(|_| Error::Parse {
            line: i + 3,
            reason: format!("bad MIDI label `{label}`"),
        })?;
        fundamentals.push(midi_to_freq(midi)?);
        rows.push(vals);
    }
    let values = Array2::from_shape_fn((rows.len(), n), |(k, j)| rows[k][j]);
    Ok(Activations {
        values,
        noise,
        fundamentals,
        frame_hop_seconds: hop,
        frame_offset_seconds: offset,
    })
}

pub fn piano_roll_to_tsv(roll: &PianoRoll) -> String {
    let meta = format!("hop={} offset={}", roll.frame_hop_seconds, roll.frame_offset_seconds);
    let labels: Vec<i32> = roll.midi_range.pitches().collect();
    let ints = roll.active.mapv(u8::from);
    matrix_tsv(
        &meta,
        "midi",
        &times(roll.frame_hop_seconds, roll.frame_offset_seconds, roll.n_frames()),
        &note_rows(&labels, &ints),
    )
}

pub fn piano_roll_from_tsv(text: &str) -> Result<PianoRoll> {
    let parsed = parse_matrix(text)?;
    let (hop, offset) = clock_from(&parsed)?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, (label, cells)) in parsed.rows.iter().enumerate() {
        let midi: i32 = label.parse().map_err(|_| Error::Parse {
            line: i + 3,
            reason: format!("bad MIDI label `{label}`"),
        })?;
        let vals = cells
            .iter()
            .map(|c| match c.as_str() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse {
                    line: i + 3,
                    reason: format!("expected 0 or 1, found `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        labels.push(midi);
        rows.push(vals);
    }
    let (Some(&low), Some(&high)) = (labels.first(), labels.last()) else {
        return Err(Error::Parse {
            line: 2,
            reason: "piano roll has no rows".into(),
        });
    };
    if labels.iter().enumerate().any(|(k, &m)| m != low + k as i32) {
        return Err(Error::Parse {
            line: 2,
            reason: "piano-roll rows must be consecutive MIDI pitches".into(),
        });
    }
    let n = parsed.col_labels.len();
    Ok(PianoRoll {
        active: Array2::from_shape_fn((rows.len(), n), |(k, j)| rows[k][j]),
        midi_range: MidiRange::new(low, high)?,
        frame_hop_seconds: hop,
        frame_offset_seconds: offset,
    })
}

pub fn plan_to_tsv(plan: &TransportPlan) -> String {
    let cols: Vec<String> = plan
        .col_fundamentals
        .iter()
        .map(|&f| if f.is_nan() { "noise".to_string() } else { freq_to_midi(f).to_string() })
        .collect();
    let rows: Vec<(String, Vec<String>)> = plan
        .row_freqs
        .iter()
        .enumerate()
        .map(|(i, f)| (f.to_string(), plan.plan.row(i).iter().map(|x| x.to_string()).collect()))
        .collect();
    matrix_tsv("", "freq_hz", &cols, &rows)
}

pub fn plca_trace_to_tsv(traces: &[Vec<f64>]) -> String {
    let mut out = String::from("frame\titeration\tkl\n");
    for (n, trace) in traces.iter().enumerate() {
        for (it, kl) in trace.iter().enumerate() {
            let _ = writeln!(out, "{n}\t{it}\t{kl}");
        }
    }
    out
}

pub fn report_to_tsv(report: &EvalReport) -> String {
    let mut out = String::from("metric\tvalue\n");
    let _ = writeln!(out, "precision\t{}", report.precision);
    let _ = writeln!(out, "recall\t{}", report.recall);
    let _ = writeln!(out, "f_measure\t{}", report.f_measure);
    let _ = writeln!(out, "true_positives\t{}", report.true_positives);
    let _ = writeln!(out, "false_positives\t{}", report.false_positives);
    let _ = writeln!(out, "false_negatives\t{}", report.false_negatives);
    for (method, secs) in &report.wall_time_seconds {
        let _ = writeln!(out, "time_{method}\t{secs}");
    }
    out
}

pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12}{:>10}", "precision", format!("{:.3}", report.precision));
    let _ = writeln!(out, "{:<12}{:>10}", "recall", format!("{:.3}", report.recall));
    let _ = writeln!(out, "{:<12}{:>10}", "F-measure", format!("{:.3}", report.f_measure));
    let _ = writeln!(
        out,
        "{:<12}{:>10}",
        "TP/FP/FN",
        format!(
            "{}/{}/{}",
            report.true_positives, report.false_positives, report.false_negatives
        )
    );
    for (method, secs) in &report.wall_time_seconds {
        let _ = writeln!(out, "{:<12}{:>10}", format!("time {method}"), format!("{secs:.4}s"));
    }
    out
}
