//! Room-acoustics simulation: image-source impulse responses, calibrated
//! reverberation, isotropic noise fields, speech-like sources, and full
//! scenario rendering with separated stems.

mod ism;
mod noise;
mod scenario;
mod speech;

pub use ism::{
    calibrate_reflection, estimate_t60, ism_rir, rir_drr_db, split_rir, Calibration, Rir,
    RoomSpec,
};
pub use noise::{fibonacci_sphere, isotropic_noise};
pub use scenario::{cma_positions, convolve_truncated, render_scenario, SceneConfig, ScenarioRender};
pub use speech::{synth_speech, SourceKind, SourceSignal};
