pub mod design;
pub mod error;
pub mod gimbal;
pub mod numerics;
pub mod reduction;
pub mod robustness;
pub mod scalar;
pub mod sim;
pub mod systems;
pub mod textio;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases.
pub type StateSpace = systems::StateSpaceModel<f64>;
pub type TransferFunction = systems::RationalTransferFunction<f64>;
pub type DiscreteStateSpace = systems::DiscreteStateSpaceModel<f64>;
pub type GimbalParams = gimbal::GimbalAxisParams<f64>;

/// Single-precision aliases.
pub type StateSpaceF32 = systems::StateSpaceModel<f32>;
pub type DiscreteStateSpaceF32 = systems::DiscreteStateSpaceModel<f32>;
