//! Continuous and discrete LTI models, rational transfer functions,
//! interconnections, frequency responses and system norms.

mod discrete;
mod freq;
mod interconnect;
mod state_space;
mod transfer;

pub use discrete::DiscreteStateSpaceModel;
pub use freq::{
    default_grid, frequency_response, grid_peak, hinf_norm, hinf_norm_with, log_grid_hz, sigma_envelope,
    FrequencyResponse, HinfOptions, Peak,
};
pub use interconnect::{diagonal, feedback, parallel, series, subtract, FeedbackSign};
pub use state_space::StateSpaceModel;
pub use transfer::{poly_roots, RationalTransferFunction};
