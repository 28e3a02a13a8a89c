//! Note events, frame clocks and piano rolls.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteEvent {
    pub onset_seconds: f64,
    pub offset_seconds: f64,
    pub midi_pitch: i32,
}

impl NoteEvent {
    pub fn new(onset_seconds: f64, offset_seconds: f64, midi_pitch: i32) -> Result<Self> {
        if !(onset_seconds >= 0.0) || !(offset_seconds > onset_seconds) || !offset_seconds.is_finite() {
            return Err(Error::param(format!(
                "note needs 0 <= onset < offset, got [{onset_seconds}, {offset_seconds})"
            )));
        }
        if !(0..=127).contains(&midi_pitch) {
            return Err(Error::param(format!("MIDI pitch {midi_pitch} outside 0..=127")));
        }
        Ok(Self {
            onset_seconds,
            offset_seconds,
            midi_pitch,
        })
    }
}

/// Inclusive MIDI pitch range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidiRange {
    pub low: i32,
    pub high: i32,
}

impl MidiRange {
    pub fn new(low: i32, high: i32) -> Result<Self> {
        if !(0..=127).contains(&low) || !(0..=127).contains(&high) || low > high {
            return Err(Error::param(format!("invalid MIDI range {low}..={high}")));
        }
        Ok(Self { low, high })
    }

    pub fn len(&self) -> usize {
        (self.high - self.low + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, midi: i32) -> bool {
        (self.low..=self.high).contains(&midi)
    }

    pub fn pitches(&self) -> impl Iterator<Item = i32> {
        self.low..=self.high
    }
}

/// Frame center times `offset + n * hop` for `n < n_frames`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameClock {
    pub hop_seconds: f64,
    pub offset_seconds: f64,
    pub n_frames: usize,
}

impl FrameClock {
    pub fn time(&self, n: usize) -> f64 {
        self.offset_seconds + n as f64 * self.hop_seconds
    }
}

/// Binary pitch × frame activity.
#[derive(Debug, Clone, PartialEq)]
pub struct PianoRoll {
    pub active: Array2<bool>,
    pub midi_range: MidiRange,
    pub frame_hop_seconds: f64,
    pub frame_offset_seconds: f64,
}

impl PianoRoll {
    pub fn empty(midi_range: MidiRange, clock: FrameClock) -> Self {
        Self {
            active: Array2::from_elem((midi_range.len(), clock.n_frames), false),
            midi_range,
            frame_hop_seconds: clock.hop_seconds,
            frame_offset_seconds: clock.offset_seconds,
        }
    }

    pub fn clock(&self) -> FrameClock {
        FrameClock {
            hop_seconds: self.frame_hop_seconds,
            offset_seconds: self.frame_offset_seconds,
            n_frames: self.n_frames(),
        }
    }

    pub fn n_notes(&self) -> usize {
        self.active.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.active.ncols()
    }

    /// Ground-truth polyphony per frame.
    pub fn polyphony(&self) -> Vec<usize> {
        self.active
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&a| a).count())
            .collect()
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn slice_frames(&self, range: std::ops::Range<usize>) -> PianoRoll {
        let start = range.start;
        PianoRoll {
            active: self.active.slice(ndarray::s![.., range]).to_owned(),
            midi_range: self.midi_range,
            frame_hop_seconds: self.frame_hop_seconds,
            frame_offset_seconds: self.frame_offset_seconds + start as f64 * self.frame_hop_seconds,
        }
    }

    /// One event per maximal run of active frames, spanning half a hop on
    /// either side of the run's frame centers.
    pub fn to_events(&self) -> Vec<NoteEvent> {
        let clock = self.clock();
        let half = 0.5 * self.frame_hop_seconds;
        let mut events = Vec::new();
        for (k, row) in self.active.rows().into_iter().enumerate() {
            let midi = self.midi_range.low + k as i32;
            let mut n = 0;
            while n < row.len() {
                if !row[n] {
                    n += 1;
                    continue;
                }
                let start = n;
                while n < row.len() && row[n] {
                    n += 1;
                }
                events.push(NoteEvent {
                    onset_seconds: (clock.time(start) - half).max(0.0),
                    offset_seconds: clock.time(n - 1) + half,
                    midi_pitch: midi,
                });
            }
        }
        events.sort_by(|a, b| a.onset_seconds.total_cmp(&b.onset_seconds).then(a.midi_pitch.cmp(&b.midi_pitch)));
        events
    }
}

/// Piano roll plus the number of events dropped for falling outside the range.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub roll: PianoRoll,
    pub dropped_out_of_range: usize,
}

/// A note is active in frame n when the frame center lies in `[onset, offset)`.
pub fn events_to_roll(events: &[NoteEvent], midi_range: MidiRange, clock: FrameClock) -> GroundTruth {
    let mut roll = PianoRoll::empty(midi_range, clock);
    let mut dropped = 0;
    for e in events {
        if !midi_range.contains(e.midi_pitch) {
            dropped += 1;
            continue;
        }
        let k = (e.midi_pitch - midi_range.low) as usize;
        for n in 0..clock.n_frames {
            let t = clock.time(n);
            if t >= e.onset_seconds && t < e.offset_seconds {
                roll.active[[k, n]] = true;
            }
        }
    }
    GroundTruth {
        roll,
        dropped_out_of_range: dropped,
    }
}

/// Parse MAPS-style annotations: a header line, then
/// `OnsetTime  OffsetTime  MidiPitch` separated by tabs or spaces.
pub fn parse_note_events(text: &str) -> Result<Vec<NoteEvent>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse {
            line: 1,
            reason: "empty ground-truth file".into(),
        });
    };
    let header_fields: Vec<&str> = header.split_whitespace().collect();
    if header_fields.len() < 3 || header_fields[0].parse::<f64>().is_ok() {
        return Err(Error::Parse {
            line: 1,
            reason: "expected header `OnsetTime OffsetTime MidiPitch`".into(),
        });
    }
    let mut events = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |reason: String| Error::Parse { line: idx + 1, reason };
        if fields.len() < 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let onset: f64 = fields[0].parse().map_err(|_| parse_err(format!("bad onset `{}`", fields[0])))?;
        let offset: f64 = fields[1].parse().map_err(|_| parse_err(format!("bad offset `{}`", fields[1])))?;
        let midi: i32 = fields[2].parse().map_err(|_| parse_err(format!("bad pitch `{}`", fields[2])))?;
        events.push(NoteEvent::new(onset, offset, midi).map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(events)
}

pub fn format_note_events(events: &[NoteEvent]) -> String {
    let mut out = String::from("OnsetTime\tOffsetTime\tMidiPitch\n");
    for e in events {
        out.push_str(&format!("{}\t{}\t{}\n", e.onset_seconds, e.offset_seconds, e.midi_pitch));
    }
    out
}

pub fn load_ground_truth(path: impl AsRef<Path>, midi_range: MidiRange, clock: FrameClock) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let events = parse_note_events(&text)?;
    Ok(events_to_roll(&events, midi_range, clock))
}
