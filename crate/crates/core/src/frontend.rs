//! Audio decoding, short-time magnitude spectra and per-frame normalization.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Default analysis window: 4096 samples (92.9 ms at 44.1 kHz).
pub const DEFAULT_WINDOW_LEN: usize = 4096;
/// Default hop: 50% overlap.
pub const DEFAULT_HOP: usize = 2048;
/// Columns whose l1 norm does not exceed this are treated as silence.
pub const DEFAULT_SILENCE_THRESHOLD: f64 = 1e-12;

/// Mono audio signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("audio contains non-finite samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Scale applied to STFT bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumScale {
    #[default]
    Magnitude,
    Power,
}

/// Non-negative M×N time-frequency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    /// Bin center frequencies in Hz, strictly increasing.
    pub freqs: Vec<f64>,
    pub frame_hop_seconds: f64,
    /// Time of the center of frame 0.
    pub frame_offset_seconds: f64,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn frame_time(&self, frame: usize) -> f64 {
        self.frame_offset_seconds + frame as f64 * self.frame_hop_seconds
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|n| self.frame_time(n)).collect()
    }

    /// Keep frames in `range`, shifting the clock accordingly.
    pub fn slice_frames(&self, range: std::ops::Range<usize>) -> Spectrogram {
        let start = range.start;
        Spectrogram {
            values: self.values.slice(ndarray::s![.., range]).to_owned(),
            freqs: self.freqs.clone(),
            frame_hop_seconds: self.frame_hop_seconds,
            frame_offset_seconds: self.frame_time(start),
        }
    }
}

/// Spectrogram columns mapped onto the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrames {
    pub columns: Array2<f64>,
    pub active_mask: Vec<bool>,
    pub freqs: Vec<f64>,
    pub frame_hop_seconds: f64,
    pub frame_offset_seconds: f64,
}

impl NormalizedFrames {
    pub fn n_bins(&self) -> usize {
        self.columns.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.columns.ncols()
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames())
            .map(|n| self.frame_offset_seconds + n as f64 * self.frame_hop_seconds)
            .collect()
    }

    pub fn slice_frames(&self, range: std::ops::Range<usize>) -> NormalizedFrames {
        let start = range.start;
        NormalizedFrames {
            columns: self.columns.slice(ndarray::s![.., range.clone()]).to_owned(),
            active_mask: self.active_mask[range].to_vec(),
            freqs: self.freqs.clone(),
            frame_hop_seconds: self.frame_hop_seconds,
            frame_offset_seconds: self.frame_offset_seconds + start as f64 * self.frame_hop_seconds,
        }
    }

    /// Wrap externally produced simplex columns. Each column must be either
    /// all-zero (inactive) or sum to one.
    pub fn from_columns(columns: Array2<f64>, freqs: Vec<f64>, frame_hop_seconds: f64) -> Result<Self> {
        if freqs.len() != columns.nrows() {
            return Err(Error::dims(format!(
                "{} frequencies for {} rows",
                freqs.len(),
                columns.nrows()
            )));
        }
        let mut active_mask = Vec::with_capacity(columns.ncols());
        for (n, col) in columns.axis_iter(Axis(1)).enumerate() {
            if col.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::param(format!("frame {n} has a negative or non-finite entry")));
            }
            let s: f64 = col.sum();
            if s == 0.0 {
                active_mask.push(false);
            } else if (s - 1.0).abs() <= 1e-9 {
                active_mask.push(true);
            } else {
                return Err(Error::param(format!("frame {n} sums to {s}, expected 1 or 0")));
            }
        }
        Ok(Self {
            columns,
            active_mask,
            freqs,
            frame_hop_seconds,
            frame_offset_seconds: 0.0,
        })
    }
}

/// Decode a 16-bit PCM or 32-bit float WAV file, downmixing stereo by averaging.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::UnreadableWav {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedEncoding(format!("{channels} channels")));
    }
    let unreadable = |e: hound::Error| Error::UnreadableWav {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(unreadable)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(unreadable)?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!("{bits}-bit {format:?}")));
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Write a mono buffer as 16-bit PCM.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::UnreadableWav {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_err)?;
    for &s in &audio.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Hann-windowed short-time spectrum. Bin 0 (DC) is dropped and the Nyquist
/// bin kept, giving `window_len / 2` rows.
pub fn stft_magnitude(
    audio: &AudioBuffer,
    window_len: usize,
    hop: usize,
    scale: SpectrumScale,
) -> Result<Spectrogram> {
    let len = audio.samples.len();
    if len == 0 {
        return Err(Error::EmptyAudio);
    }
    if hop == 0 || window_len < 2 || hop > window_len {
        return Err(Error::InvalidStft(format!(
            "need 0 < hop <= window_len and window_len >= 2, got hop={hop}, window_len={window_len}"
        )));
    }
    if window_len > len {
        return Err(Error::InvalidStft(format!(
            "window of {window_len} samples is longer than the {len}-sample signal"
        )));
    }
    let n_bins = window_len / 2;
    let n_frames = (len - window_len) / hop + 1;
    let sr = audio.sample_rate as f64;
    let window = hann_window(window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);

    let mut values = Array2::<f64>::zeros((n_bins, n_frames));
    let mut buf = vec![Complex::new(0.0, 0.0); window_len];
    for n in 0..n_frames {
        let frame = &audio.samples[n * hop..n * hop + window_len];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for i in 0..n_bins {
            let mag = buf[i + 1].norm();
            values[[i, n]] = match scale {
                SpectrumScale::Magnitude => mag,
                SpectrumScale::Power => mag * mag,
            };
        }
    }
    let freqs = (0..n_bins)
        .map(|i| (i + 1) as f64 * sr / window_len as f64)
        .collect();
    Ok(Spectrogram {
        values,
        freqs,
        frame_hop_seconds: hop as f64 / sr,
        frame_offset_seconds: window_len as f64 / (2.0 * sr),
    })
}

/// Divide every column by its l1 norm; columns at or below
/// `silence_threshold` are zeroed and masked out.
pub fn normalize_frames(spec: &Spectrogram, silence_threshold: f64) -> NormalizedFrames {
    let mut columns = spec.values.clone();
    let mut active_mask = Vec::with_capacity(spec.n_frames());
    for mut col in columns.axis_iter_mut(Axis(1)) {
        let total: f64 = col.sum();
        if total > silence_threshold {
            col.mapv_inplace(|x| x / total);
            active_mask.push(true);
        } else {
            col.fill(0.0);
            active_mask.push(false);
        }
    }
    NormalizedFrames {
        columns,
        active_mask,
        freqs: spec.freqs.clone(),
        frame_hop_seconds: spec.frame_hop_seconds,
        frame_offset_seconds: spec.frame_offset_seconds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn spec_of(values: Array2<f64>) -> Spectrogram {
        let m = values.nrows();
        Spectrogram {
            values,
            freqs: (1..=m).map(|i| i as f64 * 100.0).collect(),
            frame_hop_seconds: 0.1,
            frame_offset_seconds: 0.0,
        }
    }

    /// Direct O(n²) DFT magnitude of one Hann-windowed frame, bins 1..=n/2.
    fn direct_dft_frame(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let w = hann_window(n);
        (1..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, (&x, &wt)) in frame.iter().zip(&w).enumerate() {
                    let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += x * wt * ang.cos();
                    im += x * wt * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn sine(freq: f64, sr: u32, len: usize) -> AudioBuffer {
        let samples = (0..len)
            .map(|t| 0.5 * (2.0 * PI * freq * t as f64 / sr as f64).sin())
            .collect();
        AudioBuffer::new(samples, sr).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let spec = spec_of(array![[2.0, 0.0, 1e-20], [2.0, 0.0, 1e-20], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let nf = normalize_frames(&spec, 1e-12);
        assert_eq!(nf.active_mask, vec![true, false, false]);
        assert_eq!(nf.columns.column(0).to_vec(), vec![0.5, 0.5, 0.0, 0.0]);
        assert!(nf.columns.column(1).iter().all(|&x| x == 0.0));
        assert!(nf.columns.column(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_audio_gives_zero_spectrogram() {
        let audio = AudioBuffer::new(vec![0.0; 44100], 44100).unwrap();
        let spec = stft_magnitude(&audio, 4096, 2048, SpectrumScale::Magnitude).unwrap();
        assert!(spec.values.iter().all(|&x| x == 0.0));
        assert_eq!(spec.n_bins(), 2048);
        assert_eq!(spec.n_frames(), (44100 - 4096) / 2048 + 1);
        assert!((spec.frame_hop_seconds - 0.04644).abs() < 1e-5);
        assert!((spec.freqs[0] - 44100.0 / 4096.0).abs() < 1e-12);
        assert!((spec.freqs[2047] - 22050.0).abs() < 1e-9);
    }

    #[test]
    fn bin_centered_sinusoid_matches_direct_dft() {
        let sr = 8000;
        let win = 256;
        let bin = 20; // 1-based DFT index
        let f = bin as f64 * sr as f64 / win as f64;
        let audio = sine(f, sr, 1024);
        let spec = stft_magnitude(&audio, win, 128, SpectrumScale::Magnitude).unwrap();
        for n in 0..spec.n_frames() {
            let oracle = direct_dft_frame(&audio.samples[n * 128..n * 128 + win]);
            let col = spec.values.column(n);
            for (a, b) in col.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9);
            }
            let energy: f64 = col.iter().map(|x| x * x).sum();
            let oracle_energy: f64 = oracle.iter().map(|x| x * x).sum();
            assert!((energy - oracle_energy).abs() <= 0.01 * oracle_energy);
            let peak = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(peak, bin - 1);
            let lobe: f64 = col.iter().skip(peak - 1).take(3).map(|x| x * x).sum();
            assert!(lobe >= 0.9 * energy);
        }
    }

    #[test]
    fn frames_are_deterministic_prefix() {
        let audio = sine(440.0, 8000, 3000);
        let mut doubled = audio.samples.clone();
        doubled.extend_from_slice(&audio.samples);
        let doubled = AudioBuffer::new(doubled, 8000).unwrap();
        let a = stft_magnitude(&audio, 512, 200, SpectrumScale::Power).unwrap();
        let b = stft_magnitude(&doubled, 512, 200, SpectrumScale::Power).unwrap();
        for n in 0..a.n_frames() {
            assert_eq!(a.values.column(n), b.values.column(n));
        }
    }

    #[test]
    fn stft_rejects_bad_shapes() {
        let audio = AudioBuffer::new(vec![0.1; 100], 1000).unwrap();
        assert!(matches!(stft_magnitude(&audio, 200, 100, SpectrumScale::Magnitude), Err(Error::InvalidStft(_))));
        assert!(matches!(stft_magnitude(&audio, 64, 0, SpectrumScale::Magnitude), Err(Error::InvalidStft(_))));
        let empty = AudioBuffer::new(vec![], 1000).unwrap();
        assert!(matches!(stft_magnitude(&empty, 64, 32, SpectrumScale::Magnitude), Err(Error::EmptyAudio)));
    }

    #[test]
    fn audio_buffer_invariants() {
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
        assert!(AudioBuffer::new(vec![f64::NAN], 10).is_err());
    }

    #[test]
    fn wav_decode_cases() {
        let dir = tempfile::tempdir().unwrap();

        let mono = dir.path().join("mono.wav");
        write_wav(&mono, &AudioBuffer::new(vec![0.0; 44100], 44100).unwrap()).unwrap();
        let buf = decode_wav(&mono).unwrap();
        assert_eq!(buf.samples.len(), 44100);
        assert!(buf.samples.iter().all(|&x| x == 0.0));

        let stereo = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 22050,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(16384i16).unwrap();
            w.write_sample(-16384i16).unwrap();
        }
        w.finalize().unwrap();
        let buf = decode_wav(&stereo).unwrap();
        assert_eq!(buf.samples.len(), 100);
        assert!(buf.samples.iter().all(|&x| x == 0.0));

        let float = dir.path().join("float.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&float, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.finalize().unwrap();
        assert_eq!(decode_wav(&float).unwrap().samples, vec![0.25]);

        let eight = dir.path().join("eight.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&eight, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(decode_wav(&eight), Err(Error::UnsupportedEncoding(_))));

        assert!(matches!(decode_wav(dir.path().join("missing.wav")), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"not a wav file at all").unwrap();
        assert!(matches!(decode_wav(&junk), Err(Error::UnreadableWav { .. })));
    }
}
