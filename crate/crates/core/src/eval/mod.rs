//! Scoring: ground truth, piano rolls, F-measure, toy scenarios and
//! synthetic test pieces.

pub mod metrics;
pub mod synth;
pub mod toy;
pub mod truth;

pub use metrics::{f_measure, l1_activation_error, threshold_activations, EvalReport};
pub use synth::{generate_piece, render, SynthConfig};
pub use toy::{
    make_toy_scenario, make_toy_scenario_with, run_toy, run_toy_method, toy_reduced_cost, ToyConfig, ToyHyper, ToyInstance,
    ToyMethod, ToyResult, ToyScenario,
};
pub use truth::{
    events_to_roll, format_note_events, load_ground_truth, parse_note_events, FrameClock, GroundTruth, MidiRange, NoteEvent, PianoRoll,
};
