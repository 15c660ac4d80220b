mod common;

use common::{Pipeline, SAMPLE_PERIOD, SELECTED_RHO};
use ltr_core::reduction::bilinear_discretize;
use ltr_core::sim::*;
use ltr_core::systems::*;
use ltr_core::{DiscreteStateSpace, Error, StateSpace, TransferFunction};
use nalgebra::{Complex, DMatrix};

fn steady_phasor(trace: &SimulationTrace<f64>, channel: usize, f: f64, from: f64) -> Complex<f64> {
    let w = std::f64::consts::TAU * f;
    let (mut c, mut s, mut n) = (0.0, 0.0, 0.0);
    for (t, y) in trace.time.iter().zip(&trace.rate) {
        if *t >= from {
            c += y[channel] * (w * t).cos();
            s += y[channel] * (w * t).sin();
            n += 1.0;
        }
    }
    Complex::new(2.0 * s / n, 2.0 * c / n)
}

#[test]
fn steady_sinusoidal_response_matches_sampled_loop() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    for &f in &[1.0, 2.0, 5.0, 20.0, 50.0] {
        let dist = DisturbanceProfile::sinusoid(2, 0, f, 0.01).unwrap();
        let cycles = 20.0;
        let trace = simulate_closed_loop(&pipe.plant, &kd, &dist, cycles / f, &SimulationOptions::default()).unwrap();
        let got = steady_phasor(&trace, 0, f, 10.0 / f) / 0.01;
        let s = sampled_sensitivity(&pipe.plant, &kd, std::f64::consts::TAU * f).unwrap()[(0, 0)];
        assert!((got.norm() / s.norm() - 1.0).abs() <= 0.02, "magnitude at {f} Hz");
        assert!((got.arg() - s.arg()).to_degrees().abs() <= 2.0, "phase at {f} Hz");
    }
}

#[test]
fn azimuth_disturbance_leaves_elevation_quiet() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let dist = DisturbanceProfile::sinusoid(2, 0, 1.0, 0.01).unwrap();
    let trace = simulate_closed_loop(&pipe.plant, &kd, &dist, 5.0, &SimulationOptions::default()).unwrap();
    let el = trace.rate.iter().map(|w| w[1].abs()).fold(0.0, f64::max);
    assert!(el <= 1e-12);
}

#[test]
fn first_order_loop_identified_within_two_percent() {
    let plant: StateSpace = TransferFunction::new(vec![20.0], vec![1.0, 1.0]).unwrap().to_ss();
    let controller = DiscreteStateSpace::new(
        DMatrix::zeros(0, 0),
        DMatrix::zeros(0, 1),
        DMatrix::zeros(1, 0),
        DMatrix::from_element(1, 1, 1.0),
        SAMPLE_PERIOD,
    )
    .unwrap();
    let grid = [0.5, 2.0, 8.0];
    let id = swept_sine_identify(&plant, &controller, &grid, 1.0, 20, &SimulationOptions::default()).unwrap();
    for (i, f) in grid.iter().enumerate() {
        let s = Complex::new(0.0, std::f64::consts::TAU * f);
        let analytic = (s + 1.0) / (s + 21.0);
        let got = id.values[i][(0, 0)];
        assert!((got.norm() / analytic.norm() - 1.0).abs() <= 0.02);
        assert!((got.arg() - analytic.arg()).to_degrees().abs() <= 2.0);
    }
}

#[test]
fn open_loop_identifies_identity() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let zero = DiscreteStateSpace::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 2), DMatrix::zeros(2, 0), DMatrix::zeros(2, 2), SAMPLE_PERIOD).unwrap();
    let id = swept_sine_identify(&pipe.plant, &zero, &[1.0, 10.0], 0.01, 20, &SimulationOptions::default()).unwrap();
    for m in &id.values {
        assert!((m - DMatrix::<Complex<f64>>::identity(2, 2)).iter().all(|z| z.norm() <= 0.02));
    }
}

#[test]
fn unstable_sampled_loop_is_refused() {
    let plant: StateSpace = TransferFunction::new(vec![1.0], vec![1.0, -1.0]).unwrap().to_ss();
    let kd = bilinear_discretize(&StateSpace::static_gain(DMatrix::from_element(1, 1, 0.5)), SAMPLE_PERIOD).unwrap();
    let err = swept_sine_identify(&plant, &kd, &[1.0], 1.0, 20, &SimulationOptions::default()).unwrap_err();
    assert!(matches!(err, Error::UnstableLoop));
    let dist = DisturbanceProfile::sinusoid(1, 0, 1.0, 1.0).unwrap();
    let err = simulate_closed_loop(&plant, &kd, &dist, 60.0, &SimulationOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NumericalBlowup { .. }));
}

#[test]
fn band_limited_noise_rms_matches_frequency_integral() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let dist = DisturbanceProfile::band_limited_noise(2, 0.5, 20.0, 0.1, 0.01, 11).unwrap();
    let trace = simulate_closed_loop(&pipe.plant, &kd, &dist, 22.0, &SimulationOptions::default()).unwrap();
    let rms = rms_los_error(&trace, 2.0).unwrap();
    let oracle = rms_los_oracle(&pipe.plant, &kd, &dist).unwrap();
    for (a, b) in rms.iter().zip(&oracle) {
        assert!((a - b).abs() <= 0.1 * b, "{a} vs {b}");
    }
}

#[test]
fn simulation_is_deterministic() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let dist = DisturbanceProfile::default_profile(2, 5).unwrap();
    let a = simulate_closed_loop(&pipe.plant, &kd, &dist, 1.0, &SimulationOptions::default()).unwrap();
    let b = simulate_closed_loop(&pipe.plant, &kd, &dist, 1.0, &SimulationOptions::default()).unwrap();
    assert_eq!(a, b);
    let _ = hinf_norm(&pipe.plant.strictly_proper_part()).unwrap();
}

#[test]
fn ekf_innovations_stay_positive_with_delay_free_truth() {
    let truth = ltr_core::gimbal::GimbalAxisParams::<f64>::azimuth();
    let run = estimate_parameters(&truth, &EstimationOptions { duration: 3.0, seed: 9, ..Default::default() }).unwrap();
    assert!(run.min_innovation_variance > 0.0);
    assert!(run.covariance_psd);
    assert_eq!(run.history.len(), 3000);
}
