//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use ost_core::dictionary::{chromatic_fundamentals, make_harmonic_dictionary, HarmonicTemplateParams};
use ost_core::{harmonic_cost, CostMatrix, Dictionary, NormalizedFrames};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN_HZ: f64 = 44100.0 / 4096.0;

pub struct Fixture {
    pub frames: NormalizedFrames,
    pub dictionary: Dictionary,
    pub cost: CostMatrix,
}

/// `n` frames of `m` bins, each a noisy mix of up to four of `k` harmonic
/// templates starting at MIDI 36.
pub fn fixture(m: usize, k: usize, n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<f64> = (1..=m).map(|i| i as f64 * BIN_HZ).collect();
    let fundamentals = chromatic_fundamentals(36, 36 + k as i32 - 1).unwrap();
    let params = HarmonicTemplateParams {
        kernel_width: BIN_HZ,
        damping: 0.3,
        n_partials: 8,
    };
    let dictionary = make_harmonic_dictionary(&freqs, &fundamentals, &params).unwrap();
    let w = dictionary.templates().unwrap();
    let mut cols = Array2::zeros((m, n));
    for mut c in cols.columns_mut() {
        for _ in 0..rng.gen_range(1..=4) {
            c.scaled_add(rng.gen_range(0.1..1.0), &w.column(rng.gen_range(0..k)));
        }
        c.mapv_inplace(|x| x * rng.gen_range(0.5..1.5) + 1e-6);
        let s = c.sum();
        c /= s;
    }
    let frames = NormalizedFrames::from_columns(cols, freqs.clone(), 2048.0 / 44100.0).unwrap();
    let cost = harmonic_cost(&freqs, &fundamentals, 10.0, true).unwrap();
    Fixture {
        frames,
        dictionary,
        cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let f = fixture(256, 12, 5, 0);
        assert_eq!(f.frames.columns.dim(), (256, 5));
        assert_eq!(f.dictionary.n_notes(), 12);
        assert_eq!(f.cost.values().dim(), (256, 12));
        assert!(f.frames.active_mask.iter().all(|&a| a));
    }
}
