//! Additive synthesis of polyphonic test pieces with known note events.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::truth::NoteEvent;
use crate::dictionary::midi_to_freq;
use crate::error::{Error, Result};
use crate::frontend::AudioBuffer;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub duration_seconds: f64,
    pub midi_low: i32,
    pub midi_high: i32,
    pub max_polyphony: usize,
    /// Chord lengths are drawn uniformly from this range.
    pub chord_seconds: (f64, f64),
    /// Silence between consecutive chords.
    pub gap_seconds: f64,
    pub n_partials: usize,
    /// Amplitude of partial p is `exp(-damping * (p - 1))`.
    pub damping: f64,
    /// Relative sharpening of the highest partial; lower partials follow a
    /// stiff-string law `f_p = p ν sqrt(1 + B p²)`.
    pub inharmonicity: f64,
    pub decay_seconds: f64,
    /// Standard deviation of additive white noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44100,
            duration_seconds: 30.0,
            midi_low: 48,
            midi_high: 84,
            max_polyphony: 3,
            chord_seconds: (0.6, 1.4),
            gap_seconds: 0.15,
            n_partials: 8,
            damping: 0.5,
            inharmonicity: 0.01,
            decay_seconds: 1.5,
            noise_std: 1e-3,
            seed: 7,
        }
    }
}

/// Partial frequencies of one note; partials at or above Nyquist are dropped.
pub fn partial_frequencies(nu: f64, n_partials: usize, inharmonicity: f64, nyquist: f64) -> Vec<f64> {
    let top = n_partials as f64;
    let b = ((1.0 + inharmonicity).powi(2) - 1.0) / (top * top);
    (1..=n_partials)
        .map(|p| {
            let p = p as f64;
            p * nu * (1.0 + b * p * p).sqrt()
        })
        .take_while(|&f| f < nyquist)
        .collect()
}

/// Random chord sequence separated by short silences.
pub fn random_events(config: &SynthConfig) -> Result<Vec<NoteEvent>> {
    if config.midi_low > config.midi_high || config.max_polyphony == 0 {
        return Err(Error::param("empty pitch range or zero polyphony"));
    }
    let span = (config.midi_high - config.midi_low + 1) as usize;
    if config.max_polyphony > span {
        return Err(Error::param("polyphony exceeds the pitch range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut events = Vec::new();
    let mut t = config.gap_seconds;
    loop {
        let len = rng.gen_range(config.chord_seconds.0..=config.chord_seconds.1);
        if t + len > config.duration_seconds {
            break;
        }
        let poly = rng.gen_range(1..=config.max_polyphony);
        let mut pitches: Vec<i32> = Vec::with_capacity(poly);
        while pitches.len() < poly {
            let p = rng.gen_range(config.midi_low..=config.midi_high);
            if !pitches.contains(&p) {
                pitches.push(p);
            }
        }
        pitches.sort_unstable();
        for p in pitches {
            events.push(NoteEvent::new(t, t + len, p)?);
        }
        t += len + config.gap_seconds;
    }
    Ok(events)
}

/// Render note events with decaying additive tones plus white noise.
pub fn render(events: &[NoteEvent], config: &SynthConfig) -> Result<AudioBuffer> {
    let sr = config.sample_rate as f64;
    let n = (config.duration_seconds * sr).round() as usize;
    let mut out = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let attack = 0.01;
    let release = 0.03;
    for e in events {
        let nu = midi_to_freq(e.midi_pitch)?;
        let partials = partial_frequencies(nu, config.n_partials, config.inharmonicity, 0.5 * sr);
        let gain = rng.gen_range(0.5..1.0);
        let phases: Vec<f64> = partials.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let start = (e.onset_seconds * sr).round() as usize;
        let stop = ((e.offset_seconds * sr).round() as usize).min(n);
        for i in start..stop {
            let t = (i - start) as f64 / sr;
            let left = (stop - i) as f64 / sr;
            let env = gain * (t / attack).min(1.0) * (left / release).min(1.0) * (-t / config.decay_seconds).exp();
            let mut s = 0.0;
            for (p, (&f, &ph)) in partials.iter().zip(&phases).enumerate() {
                s += (-config.damping * p as f64).exp() * (2.0 * PI * f * t + ph).sin();
            }
            out[i] += env * s;
        }
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|x| *x *= 0.8 / peak);
    }
    if config.noise_std > 0.0 {
        let normal = Normal::new(0.0, config.noise_std).map_err(|e| Error::param(e.to_string()))?;
        out.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
    }
    AudioBuffer::new(out, config.sample_rate)
}

/// Random piece and its annotation.
pub fn generate_piece(config: &SynthConfig) -> Result<(AudioBuffer, Vec<NoteEvent>)> {
    let events = random_events(config)?;
    let audio = render(&events, config)?;
    Ok((audio, events))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_partial_is_one_percent_sharp() {
        let f = partial_frequencies(100.0, 8, 0.01, 1e9);
        assert_eq!(f.len(), 8);
        assert!((f[7] / 800.0 - 1.01).abs() < 1e-12);
        assert!(f[0] > 100.0 && f[0] < 100.02);
        let capped = partial_frequencies(1000.0, 8, 0.0, 3500.0);
        assert_eq!(capped, vec![1000.0, 2000.0, 3000.0]);
    }

    #[test]
    fn events_are_disjoint_chords() {
        let cfg = SynthConfig {
            duration_seconds: 10.0,
            ..SynthConfig::default()
        };
        let ev = random_events(&cfg).unwrap();
        assert!(!ev.is_empty());
        assert!(ev.iter().all(|e| e.offset_seconds <= 10.0 && (48..=84).contains(&e.midi_pitch)));
        assert_eq!(ev, random_events(&cfg).unwrap());
    }

    #[test]
    fn render_is_deterministic() {
        let cfg = SynthConfig {
            duration_seconds: 1.0,
            sample_rate: 8000,
            ..SynthConfig::default()
        };
        let (a, ev) = generate_piece(&cfg).unwrap();
        let (b, _) = generate_piece(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 8000);
        let silent = render(&[], &SynthConfig { noise_std: 0.0, ..cfg.clone() }).unwrap();
        assert!(silent.samples.iter().all(|&x| x == 0.0));
        assert!(ev.len() <= 3);
    }
}
