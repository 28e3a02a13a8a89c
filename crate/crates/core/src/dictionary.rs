//! Note templates: harmonic Gaussian combs and Dirac dictionaries.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Lowest MIDI pitch of the default 60-note range (C2).
pub const DEFAULT_MIDI_LOW: u8 = 36;
/// Highest MIDI pitch of the default 60-note range (B6).
pub const DEFAULT_MIDI_HIGH: u8 = 95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    Harmonic,
    Dirac,
}

impl DictionaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DictionaryKind::Harmonic => "harmonic",
            DictionaryKind::Dirac => "dirac",
        }
    }
}

/// Column-stochastic note templates and their fundamentals.
///
/// Dirac dictionaries carry no template matrix: the reduced cost matrix
/// built against the fundamentals stands in for the spikes. Their
/// fundamentals are strictly increasing; harmonic dictionaries only need
/// distinct fundamentals, in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    templates: Option<Array2<f64>>,
    fundamentals: Vec<f64>,
    kind: DictionaryKind,
}

impl Dictionary {
    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn fundamentals(&self) -> &[f64] {
        &self.fundamentals
    }

    pub fn n_notes(&self) -> usize {
        self.fundamentals.len()
    }

    /// Explicit M×K template matrix; `None` for Dirac dictionaries.
    pub fn templates(&self) -> Option<&Array2<f64>> {
        self.templates.as_ref()
    }

    /// Nearest MIDI pitch of every fundamental.
    pub fn midi_labels(&self) -> Vec<i32> {
        self.fundamentals.iter().map(|&f| freq_to_midi(f)).collect()
    }

    /// Materialize Dirac templates on a frequency grid that contains every
    /// fundamental exactly (within `tol` Hz).
    pub fn dirac_templates_on(&self, freqs: &[f64], tol: f64) -> Result<Array2<f64>> {
        let mut w = Array2::zeros((freqs.len(), self.n_notes()));
        for (k, &nu) in self.fundamentals.iter().enumerate() {
            let i = freqs
                .iter()
                .position(|&f| (f - nu).abs() <= tol)
                .ok_or_else(|| Error::param(format!("fundamental {nu} Hz is not on the frequency grid")))?;
            w[[i, k]] = 1.0;
        }
        Ok(w)
    }

    /// Rebuild a dictionary from stored parts (used by the TSV loader).
    pub fn from_parts(kind: DictionaryKind, fundamentals: Vec<f64>, templates: Option<Array2<f64>>) -> Result<Self> {
        check_fundamentals(&fundamentals, kind == DictionaryKind::Dirac)?;
        match (kind, &templates) {
            (DictionaryKind::Dirac, None) => {}
            (DictionaryKind::Harmonic, Some(w)) => {
                if w.ncols() != fundamentals.len() {
                    return Err(Error::dims(format!(
                        "{} template columns for {} fundamentals",
                        w.ncols(),
                        fundamentals.len()
                    )));
                }
                for (k, col) in w.columns().into_iter().enumerate() {
                    let s: f64 = col.sum();
                    if col.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                        return Err(Error::param(format!("template {k} is not a probability vector")));
                    }
                }
            }
            (DictionaryKind::Dirac, Some(_)) => return Err(Error::param("dirac dictionaries carry no templates")),
            (DictionaryKind::Harmonic, None) => return Err(Error::param("harmonic dictionary without templates")),
        }
        Ok(Self {
            templates,
            fundamentals,
            kind,
        })
    }
}

/// Shape of synthetic harmonic templates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicTemplateParams {
    /// Gaussian standard deviation in Hz.
    pub kernel_width: f64,
    /// Amplitude of partial p is `exp(-p * damping)`.
    pub damping: f64,
    pub n_partials: usize,
}

impl HarmonicTemplateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_width > 0.0) || !self.kernel_width.is_finite() {
            return Err(Error::param("kernel_width must be positive"));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return Err(Error::param("damping must be non-negative"));
        }
        if self.n_partials == 0 {
            return Err(Error::param("n_partials must be at least 1"));
        }
        Ok(())
    }
}

pub fn midi_to_freq(midi: i32) -> Result<f64> {
    if !(0..=127).contains(&midi) {
        return Err(Error::param(format!("MIDI pitch {midi} outside 0..=127")));
    }
    Ok(440.0 * 2f64.powf((midi as f64 - 69.0) / 12.0))
}

pub fn freq_to_midi(freq: f64) -> i32 {
    (69.0 + 12.0 * (freq / 440.0).log2()).round() as i32
}

/// Fundamentals of every semitone in `low..=high`.
pub fn chromatic_fundamentals(low: i32, high: i32) -> Result<Vec<f64>> {
    if low > high {
        return Err(Error::param(format!("empty MIDI range {low}..={high}")));
    }
    (low..=high).map(midi_to_freq).collect()
}

fn check_fundamentals(fundamentals: &[f64], ordered: bool) -> Result<()> {
    if fundamentals.is_empty() {
        return Err(Error::param("no fundamentals"));
    }
    if fundamentals.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::param("fundamentals must be positive and finite"));
    }
    if ordered {
        if fundamentals.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("fundamentals must be strictly increasing"));
        }
    } else {
        let mut sorted = fundamentals.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] == w[0]) {
            return Err(Error::param("duplicate fundamentals"));
        }
    }
    Ok(())
}

/// Gaussian combs at each fundamental and its multiples, sampled on `freqs`
/// and normalized to unit mass. Partials above the top bin are dropped.
pub fn make_harmonic_dictionary(
    freqs: &[f64],
    fundamentals: &[f64],
    params: &HarmonicTemplateParams,
) -> Result<Dictionary> {
    check_fundamentals(fundamentals, false)?;
    params.validate()?;
    let top = freqs
        .last()
        .copied()
        .ok_or_else(|| Error::param("empty frequency axis"))?;
    if let Some(&nu) = fundamentals.iter().find(|&&nu| nu > top) {
        return Err(Error::param(format!("fundamental {nu} Hz above the top bin {top} Hz")));
    }

    let var2 = 2.0 * params.kernel_width * params.kernel_width;
    let mut w = Array2::zeros((freqs.len(), fundamentals.len()));
    let mut log_col = vec![0.0; freqs.len()];
    for (k, &nu) in fundamentals.iter().enumerate() {
        let partials: Vec<usize> = (1..=params.n_partials)
            .take_while(|&p| p as f64 * nu <= top)
            .collect();
        // log-domain accumulation so narrow kernels still land on the nearest bin
        for (i, &f) in freqs.iter().enumerate() {
            let terms = partials.iter().map(|&p| {
                let d = f - p as f64 * nu;
                -(p as f64) * params.damping - d * d / var2
            });
            log_col[i] = log_sum_exp(terms);
        }
        let peak = log_col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (i, &l) in log_col.iter().enumerate() {
            let x = (l - peak).exp();
            w[[i, k]] = x;
            total += x;
        }
        w.column_mut(k).mapv_inplace(|x| x / total);
    }
    Ok(Dictionary {
        templates: Some(w),
        fundamentals: fundamentals.to_vec(),
        kind: DictionaryKind::Harmonic,
    })
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub fn make_dirac_dictionary(fundamentals: &[f64]) -> Result<Dictionary> {
    check_fundamentals(fundamentals, true)?;
    Ok(Dictionary {
        templates: None,
        fundamentals: fundamentals.to_vec(),
        kind: DictionaryKind::Dirac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, step: f64) -> Vec<f64> {
        (1..=n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn midi_reference_points() {
        assert_eq!(midi_to_freq(69).unwrap(), 440.0);
        assert!((midi_to_freq(50).unwrap() - 146.83).abs() < 0.01);
        assert!((midi_to_freq(62).unwrap() - 293.66).abs() < 0.01);
        assert!((midi_to_freq(62).unwrap() - 2.0 * midi_to_freq(50).unwrap()).abs() < 1e-12);
        assert!(midi_to_freq(128).is_err());
        assert!(midi_to_freq(-1).is_err());
        assert_eq!(freq_to_midi(146.83), 50);
    }

    #[test]
    fn narrow_single_partial_is_dirac_at_nearest_bin() {
        let freqs = grid(100, 10.0);
        let p = HarmonicTemplateParams {
            kernel_width: 1e-3,
            damping: 0.3,
            n_partials: 1,
        };
        let d = make_harmonic_dictionary(&freqs, &[233.0], &p).unwrap();
        let w = d.templates().unwrap();
        assert!((w[[22, 0]] - 1.0).abs() < 1e-12); // bin at 230 Hz
        assert!((w.column(0).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn undamped_pair_has_equal_bumps() {
        let freqs = grid(200, 5.0);
        let p = HarmonicTemplateParams {
            kernel_width: 10.0,
            damping: 0.0,
            n_partials: 2,
        };
        let d = make_harmonic_dictionary(&freqs, &[200.0], &p).unwrap();
        let w = d.templates().unwrap();
        let low: f64 = (0..60).map(|i| w[[i, 0]]).sum();
        let high: f64 = (60..200).map(|i| w[[i, 0]]).sum();
        assert!((low - 0.5).abs() < 1e-6 && (high - 0.5).abs() < 1e-6);
        assert!((w[[39, 0]] - w[[79, 0]]).abs() < 1e-12);
    }

    #[test]
    fn octave_templates_share_harmonics() {
        let freqs = grid(400, 10.0);
        let p = HarmonicTemplateParams {
            kernel_width: 20.0,
            damping: 0.3,
            n_partials: 8,
        };
        let fund = [130.0, 260.0];
        let d = make_harmonic_dictionary(&freqs, &fund, &p).unwrap();
        let w = d.templates().unwrap();
        // the upper octave's fundamental sits on the lower note's 2nd partial
        let bin = 25; // 260 Hz
        assert!(w[[bin, 0]] > 1e-3 && w[[bin, 1]] > 1e-3);
        for col in w.columns() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
            assert!(col.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let freqs = grid(10, 10.0);
        let p = HarmonicTemplateParams {
            kernel_width: 1.0,
            damping: 0.1,
            n_partials: 3,
        };
        assert!(make_harmonic_dictionary(&freqs, &[], &p).is_err());
        assert!(make_harmonic_dictionary(&freqs, &[500.0], &p).is_err());
        assert!(make_dirac_dictionary(&[100.0, 100.0]).is_err());
        assert!(make_dirac_dictionary(&[]).is_err());
        let bad = HarmonicTemplateParams { kernel_width: 0.0, ..p };
        assert!(make_harmonic_dictionary(&freqs, &[50.0], &bad).is_err());
    }

    #[test]
    fn sixty_note_dirac_range() {
        let f = chromatic_fundamentals(DEFAULT_MIDI_LOW as i32, DEFAULT_MIDI_HIGH as i32).unwrap();
        let d = make_dirac_dictionary(&f).unwrap();
        assert_eq!(d.n_notes(), 60);
        assert!((d.fundamentals()[0] - 65.406).abs() < 1e-3);
        assert!((d.fundamentals()[59] - 1975.533).abs() < 1e-3);
        assert_eq!(d.midi_labels(), (36..=95).collect::<Vec<_>>());
        assert!(d.templates().is_none());
        let one = make_dirac_dictionary(&[100.0]).unwrap();
        assert_eq!(one.n_notes(), 1);
    }
}
