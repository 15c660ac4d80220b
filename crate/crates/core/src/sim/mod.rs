//! Sampled-data closed-loop simulation, line-of-sight error evaluation,
//! swept-sine sensitivity identification and CD-EKF parameter estimation.

mod closed_loop;
mod disturbance;
mod ekf;
mod identify;

pub use closed_loop::{
    rms_los_error, rms_los_oracle, sampled_loop_spectral_radius, sampled_sensitivity, simulate_closed_loop,
    SimulationOptions, SimulationTrace,
};
pub use disturbance::{DisturbanceKind, DisturbanceProfile, Tone};
pub use ekf::{
    ekf_predict, ekf_update, estimate_parameters, EkfEstimate, EkfModel, EkfRun, EkfSample, EstimationOptions,
    INERTIA_FLOOR,
};
pub use identify::{compare_delay_models, swept_sine_identify, DelayModelDeviation, IdentifiedResponse};
