#![allow(dead_code)]

use ltr_core::design::*;
use ltr_core::gimbal::*;
use ltr_core::reduction::*;
use ltr_core::DiscreteStateSpace;
use ltr_core::StateSpace;

pub const SELECTED_RHO: f64 = 1e-4;
pub const SAMPLE_PERIOD: f64 = 5e-4;

/// Nominal gimbal, Design-2 weighted LQG/LTR sweep and the Design-1 performance weight.
pub struct Pipeline {
    pub plant: StateSpace,
    pub design: LqgLtrDesign<f64>,
    pub performance_weight: StateSpace,
    pub uncertainty_weight: StateSpace,
}

impl Pipeline {
    pub fn new(rhos: &[f64]) -> Self {
        let plant = build_mimo_model(&GimbalAxisParams::azimuth(), &GimbalAxisParams::elevation()).unwrap();
        let w2 = make_sensitivity_weight(&SensitivityWeightParams::design2()).unwrap();
        let w1 = make_sensitivity_weight(&SensitivityWeightParams::design1()).unwrap();
        let aug = augment_plant(&plant, &diagonal_weight(&w2, 2).unwrap()).unwrap();
        let kalman = design_kalman(&aug, &NoiseIntensities::identity(2)).unwrap();
        let design = ltr_sweep(&aug, &kalman, rhos, &RecoveryBand::default()).unwrap();
        let (_, _, uncertainty_weight) = uncertainty_weights();
        Self { plant, design, performance_weight: diagonal_weight(&w1, 2).unwrap(), uncertainty_weight }
    }

    pub fn compensator(&self, rho: f64) -> &StateSpace {
        &self.design.point(rho).expect("rho in sweep").compensator
    }

    /// Reduced order-12 compensator discretized at the default sample period.
    pub fn discrete_controller(&self, rho: f64) -> DiscreteStateSpace {
        let reduced = balance_and_truncate(self.compensator(rho), 12).unwrap().reduced;
        bilinear_discretize(&reduced, SAMPLE_PERIOD).unwrap()
    }
}

pub fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
