use ndarray::Array2;

use super::truth::PianoRoll;
use crate::error::{Error, Result};
use crate::solver::Activations;

/// Frame-level counts and scores pooled over a whole roll.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `(tp, fp, fn)` for every frame.
    pub per_frame: Vec<(usize, usize, usize)>,
    /// Wall-clock seconds per method, in insertion order.
    pub wall_time_seconds: Vec<(String, f64)>,
}

/// Keep, in each frame, the `P_n` largest activations where `P_n` is the
/// ground-truth polyphony (ties go to the lower pitch).
pub fn threshold_activations(acts: &Activations, truth: &PianoRoll) -> Result<PianoRoll> {
    if acts.values.dim() != truth.active.dim() {
        return Err(Error::dims(format!(
            "activations {:?} vs truth {:?}",
            acts.values.dim(),
            truth.active.dim()
        )));
    }
    let (k, n_frames) = acts.values.dim();
    let mut active = Array2::from_elem((k, n_frames), false);
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for (n, p) in truth.polyphony().into_iter().enumerate() {
        if p == 0 {
            continue;
        }
        let col = acts.values.column(n);
        order.clear();
        order.extend(0..k);
        order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
        for &idx in order.iter().take(p) {
            active[[idx, n]] = true;
        }
    }
    Ok(PianoRoll {
        active,
        midi_range: truth.midi_range,
        frame_hop_seconds: truth.frame_hop_seconds,
        frame_offset_seconds: truth.frame_offset_seconds,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_measure(estimate: &PianoRoll, truth: &PianoRoll) -> Result<EvalReport> {
    if estimate.active.dim() != truth.active.dim() {
        return Err(Error::dims(format!(
            "estimate {:?} vs truth {:?}",
            estimate.active.dim(),
            truth.active.dim()
        )));
    }
    let per_frame: Vec<(usize, usize, usize)> = estimate
        .active
        .columns()
        .into_iter()
        .zip(truth.active.columns())
        .map(|(e, t)| {
            e.iter().zip(t.iter()).fold((0, 0, 0), |(tp, fp, fn_), (&e, &t)| match (e, t) {
                (true, true) => (tp + 1, fp, fn_),
                (true, false) => (tp, fp + 1, fn_),
                (false, true) => (tp, fp, fn_ + 1),
                (false, false) => (tp, fp, fn_),
            })
        })
        .collect();
    let (tp, fp, fn_) = per_frame
        .iter()
        .fold((0, 0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1, acc.2 + x.2));
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        precision,
        recall,
        f_measure: f,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        per_frame,
        wall_time_seconds: Vec::new(),
    })
}

pub fn l1_activation_error(h_est: &[f64], h_true: &[f64]) -> Result<f64> {
    if h_est.len() != h_true.len() {
        return Err(Error::dims(format!("lengths {} and {}", h_est.len(), h_true.len())));
    }
    Ok(h_est.iter().zip(h_true).map(|(a, b)| (a - b).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::truth::{FrameClock, MidiRange};
    use ndarray::array;
    use proptest::prelude::*;

    fn roll(active: Array2<bool>) -> PianoRoll {
        let k = active.nrows() as i32;
        PianoRoll {
            active,
            midi_range: MidiRange::new(60, 60 + k - 1).unwrap(),
            frame_hop_seconds: 0.1,
            frame_offset_seconds: 0.0,
        }
    }

    fn acts(values: Array2<f64>) -> Activations {
        Activations {
            fundamentals: vec![1.0; values.nrows()],
            values,
            noise: None,
            frame_hop_seconds: 0.1,
            frame_offset_seconds: 0.0,
        }
    }

    #[test]
    fn threshold_examples() {
        let truth = roll(array![[true, false, true], [false, false, false], [true, false, false]]);
        let a = acts(array![[0.1, 0.9, 1.0 / 3.0], [0.5, 0.05, 1.0 / 3.0], [0.4, 0.05, 1.0 / 3.0]]);
        let est = threshold_activations(&a, &truth).unwrap();
        assert_eq!(est.active.column(0).to_vec(), vec![false, true, true]);
        assert_eq!(est.active.column(1).to_vec(), vec![false, false, false]);
        assert_eq!(est.active.column(2).to_vec(), vec![true, false, false]);
    }

    #[test]
    fn f_measure_examples() {
        let truth = roll(array![[true, true], [true, false], [false, true]]);
        let r = f_measure(&truth, &truth).unwrap();
        assert_eq!(r.f_measure, 1.0);

        // TP=2, FP=1, FN=1
        let est = roll(array![[true, true], [false, true], [false, false]]);
        let r = f_measure(&est, &truth).unwrap();
        assert_eq!((r.true_positives, r.false_positives, r.false_negatives), (2, 1, 2));
        let est = roll(array![[true, true], [false, false], [true, false]]);
        let truth2 = roll(array![[true, true], [true, false], [false, false]]);
        let r = f_measure(&est, &truth2).unwrap();
        assert_eq!((r.true_positives, r.false_positives, r.false_negatives), (2, 1, 1));
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f_measure - 2.0 / 3.0).abs() < 1e-15);

        let none = roll(Array2::from_elem((3, 2), false));
        assert_eq!(f_measure(&none, &truth).unwrap().f_measure, 0.0);
        assert!(f_measure(&roll(Array2::from_elem((2, 2), false)), &truth).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_activation_error(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(l1_activation_error(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((l1_activation_error(&[0.6, 0.4], &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert!(l1_activation_error(&[1.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn scores_are_bounded(seed in proptest::collection::vec((any::<bool>(), any::<bool>(), 0.0..1.0f64), 12)) {
            let t = Array2::from_shape_fn((3, 4), |(i, j)| seed[i * 4 + j].0);
            let e = Array2::from_shape_fn((3, 4), |(i, j)| seed[i * 4 + j].1);
            let r = f_measure(&roll(e), &roll(t.clone())).unwrap();
            for x in [r.precision, r.recall, r.f_measure] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            if r.true_positives == 0 {
                prop_assert_eq!(r.f_measure, 0.0);
            }
            let a = acts(Array2::from_shape_fn((3, 4), |(i, j)| seed[i * 4 + j].2));
            let truth = roll(t);
            let est = threshold_activations(&a, &truth).unwrap();
            prop_assert_eq!(est.count_active(), truth.count_active());
        }
    }

    #[test]
    fn clock_roundtrip_helper() {
        let c = FrameClock { hop_seconds: 0.5, offset_seconds: 0.25, n_frames: 3 };
        assert_eq!(c.time(2), 1.25);
    }
}
