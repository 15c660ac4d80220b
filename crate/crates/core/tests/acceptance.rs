//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//! Run with `cargo test -p ltr-core --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use common::{report, Pipeline, SELECTED_RHO};
use ltr_core::design::*;
use ltr_core::gimbal::*;
use ltr_core::numerics::*;
use ltr_core::reduction::*;
use ltr_core::robustness::*;
use ltr_core::sim::*;
use ltr_core::systems::*;
use ltr_core::{StateSpace, TransferFunction};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RECOVERY_RHOS: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

fn siso(num: &[f64], den: &[f64]) -> StateSpace {
    TransferFunction::new(num.to_vec(), den.to_vec()).unwrap().to_ss()
}

fn recovery_sweep(plant: &StateSpace, weight: &StateSpace) -> Vec<f64> {
    let aug = augment_plant(plant, weight).unwrap();
    let kal = design_kalman(&aug, &NoiseIntensities::identity(plant.outputs())).unwrap();
    let sweep = ltr_sweep(&aug, &kal, &RECOVERY_RHOS, &RecoveryBand::default()).unwrap();
    sweep.points.iter().map(|p| p.recovery_error).collect()
}

#[test]
fn criterion_01_order_bookkeeping() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let k = pipe.compensator(SELECTED_RHO);
    let reduced = balance_and_truncate(k, 12).unwrap().reduced;
    let orders = (pipe.plant.order(), pipe.design.augmented.order(), k.order(), reduced.order());
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = orders == (10, 14, 14, 12) && elapsed < 1.0;
    report(1, "order bookkeeping", pass, format!("plant/augmented/compensator/reduced = {orders:?}, {elapsed:.2} s"));
    assert!(pass);
}

#[test]
fn criterion_02_recovery_contrast() {
    let t0 = Instant::now();
    let mp = recovery_sweep(&siso(&[1.0], &[1.0, 1.0]), &siso(&[10.0], &[1.0, 1.0]));
    let monotone = mp.windows(2).all(|w| w[1] < w[0]);
    let mp_final = *mp.last().unwrap();

    let plant = build_mimo_model(&GimbalAxisParams::azimuth(), &GimbalAxisParams::elevation()).unwrap();
    let w2 = make_sensitivity_weight(&SensitivityWeightParams::design2()).unwrap();
    let gimbal = recovery_sweep(&plant, &diagonal_weight(&w2, 2).unwrap());
    let gimbal_final = *gimbal.last().unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = monotone && mp_final <= 1e-2 && gimbal_final >= 5.0 * mp_final && elapsed < 30.0;
    report(
        2,
        "recovery contrast",
        pass,
        format!(
            "minimum-phase monotone={monotone} final={mp_final:.2e}, gimbal at 1e-7 = {gimbal_final:.3} ({:.0}x), {elapsed:.1} s",
            gimbal_final / mp_final
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_robustness_verdicts() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[1e-3, 1e-4]);
    let grid = default_grid();
    let r3 = analyze(&pipe.plant, pipe.compensator(1e-3), &pipe.performance_weight, &pipe.uncertainty_weight, &grid).unwrap();
    let r4 = analyze(&pipe.plant, pipe.compensator(1e-4), &pipe.performance_weight, &pipe.uncertainty_weight, &grid).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = r4.np_peak() < 1.0
        && r4.rs_peak() < 1.0
        && (0.9..=1.15).contains(&r4.rp_peak())
        && r3.np_peak() < 1.0
        && r3.rs_peak() < 1.0
        && r3.rp_peak() > 1.0
        && elapsed < 60.0;
    report(
        3,
        "robustness verdicts",
        pass,
        format!(
            "rho=1e-4 np={:.3} rs={:.3} rp={:.3}; rho=1e-3 np={:.3} rs={:.3} rp={:.3}; {elapsed:.1} s",
            r4.np_peak(),
            r4.rs_peak(),
            r4.rp_peak(),
            r3.np_peak(),
            r3.rs_peak(),
            r3.rp_peak()
        ),
    );
    assert!(pass);
}

fn min_return_difference(loop_tf: &StateSpace, grid: &[f64]) -> f64 {
    let p = loop_tf.outputs();
    let tol = Tolerances::default();
    grid.iter()
        .map(|&w| {
            let rd = DMatrix::<Complex<f64>>::identity(p, p) + loop_tf.at(w).unwrap();
            *svd_values(&rd, &tol).unwrap().last().unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_04_guaranteed_margins() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let aug = &pipe.design.augmented.model;
    let kc = &pipe.design.point(SELECTED_RHO).unwrap().kc;
    let lqr_loop = StateSpace::new(aug.a().clone(), aug.b().clone(), kc.clone(), DMatrix::zeros(2, 2)).unwrap();
    let grid = default_grid();
    let kalman = min_return_difference(&pipe.design.kalman.target_loop, &grid);
    let lqr = min_return_difference(&lqr_loop, &grid);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = kalman >= 1.0 - 1e-6 && lqr >= 1.0 - 1e-6 && elapsed < 10.0;
    report(
        4,
        "guaranteed-margin inequalities",
        pass,
        format!("min sigma(I+C Phi Kf)={kalman:.9}, min sigma(I+Kc Phi B)={lqr:.9}, {elapsed:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_truncation_bound() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let k = pipe.compensator(SELECTED_RHO);
    let tr = balance_and_truncate(k, 12).unwrap();
    let err = hinf_norm(&subtract(k, &tr.reduced).unwrap()).unwrap().value;
    let grid = default_grid();
    let full = analyze(&pipe.plant, k, &pipe.performance_weight, &pipe.uncertainty_weight, &grid).unwrap().rp_peak();
    let red = analyze(&pipe.plant, &tr.reduced, &pipe.performance_weight, &pipe.uncertainty_weight, &grid).unwrap().rp_peak();
    let change = (red - full).abs() / full;
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = err <= tr.error_bound && change < 0.05 && elapsed < 30.0;
    report(
        5,
        "truncation bound",
        pass,
        format!(
            "||K-K12|| = {err:.4} <= {:.4}, rp {full:.4} -> {red:.4} ({:.2}%), {elapsed:.1} s",
            tr.error_bound,
            100.0 * change
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_ekf_convergence() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, truth) in [("azimuth", GimbalAxisParams::<f64>::azimuth()), ("elevation", GimbalAxisParams::elevation())] {
        let t0 = Instant::now();
        let run = estimate_parameters(&truth, &EstimationOptions::default()).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();
        let ej = (run.estimate.x[4] - truth.j).abs() / truth.j;
        let eb = (run.estimate.x[5] - truth.bv).abs() / truth.bv;
        pass &= ej < 0.05 && eb < 0.05 && run.covariance_psd && run.min_innovation_variance > 0.0 && elapsed < 60.0;
        lines.push(format!(
            "{name} J={:.4} ({:.2}%) Bv={:.4} ({:.2}%) psd={} min eig {:.1e} min innovation var {:.1e}, {elapsed:.1} s",
            run.estimate.x[4],
            100.0 * ej,
            run.estimate.x[5],
            100.0 * eb,
            run.covariance_psd,
            run.min_covariance_eigenvalue,
            run.min_innovation_variance
        ));
    }
    report(6, "CD-EKF convergence", pass, lines.join("; "));
    assert!(pass);
}

/// Entrywise relative magnitude error with a floor tied to σ̄.
fn entrywise_error(identified: &DMatrix<Complex<f64>>, analytic: &DMatrix<Complex<f64>>, sigma_max: f64) -> f64 {
    identified
        .iter()
        .zip(analytic.iter())
        .map(|(a, b)| (a.norm() - b.norm()).abs() / b.norm().max(1e-3 * sigma_max))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_07_swept_sine_identification() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let grid: Vec<f64> = log_grid_hz::<f64>(1.0, 100.0, 10).unwrap().iter().map(|w: &f64| rad_hz(*w)).collect();
    let id = swept_sine_identify(&pipe.plant, &kd, &grid, 0.01, 20, &SimulationOptions::default()).unwrap();
    let we = make_sensitivity_weight(&SensitivityWeightParams::<f64>::design1()).unwrap();
    let mut worst = 0.0f64;
    let mut margin = f64::INFINITY;
    for (i, f) in grid.iter().enumerate() {
        let w = std::f64::consts::TAU * f;
        let s = sampled_sensitivity(&pipe.plant, &kd, w).unwrap();
        worst = worst.max(entrywise_error(&id.values[i], &s, id.sigma[i][0]));
        margin = margin.min(1.0 / we.at(w).norm() - id.sigma[i][0]);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst <= 0.05 && margin > 0.0 && elapsed < 300.0;
    report(
        7,
        "swept-sine identification",
        pass,
        format!("{} frequencies, worst entry error {:.2e}, min(1/|we| - sigma) = {margin:.4}, {elapsed:.1} s", grid.len(), worst),
    );
    assert!(pass);
}

fn rad_hz(w: f64) -> f64 {
    w / std::f64::consts::TAU
}

#[test]
fn criterion_08_perturbation_validation() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let k = pipe.compensator(SELECTED_RHO);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let nominal = analyze(&pipe.plant, k, &pipe.performance_weight, &pipe.uncertainty_weight, &default_grid()).unwrap();
    let set = sample_perturbed_models(&pipe.plant, &pipe.uncertainty_weight, 20, 2024).unwrap();
    let grid: Vec<f64> = log_grid_hz::<f64>(0.5, 100.0, 10).unwrap().iter().map(|w: &f64| rad_hz(*w)).collect();
    let we = make_sensitivity_weight(&SensitivityWeightParams::<f64>::design1()).unwrap();
    let opts = SimulationOptions::default();
    let mut all_stable = true;
    let mut worst = 0.0f64;
    for member in &set.members {
        let cont_stable = closed_loop(&member.plant, k).unwrap().is_stable().unwrap();
        let sampled_stable = sampled_loop_spectral_radius(&member.plant, &kd, &opts).unwrap() < 1.0;
        all_stable &= cont_stable && sampled_stable;
        if !sampled_stable {
            continue;
        }
        let id = swept_sine_identify(&member.plant, &kd, &grid, 0.01, 20, &opts).unwrap();
        let peak = grid
            .iter()
            .zip(&id.sigma)
            .map(|(f, s)| we.at(std::f64::consts::TAU * f).norm() * s[0])
            .fold(0.0, f64::max);
        worst = worst.max(peak);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let rs_ok = nominal.rs_peak() < 1.0;
    let pass = rs_ok && all_stable && worst <= nominal.rp_peak() + 0.05 && elapsed < 600.0;
    report(
        8,
        "perturbation validation",
        pass,
        format!(
            "rs={:.3}, 20 members stable={all_stable}, max identified ||We So|| = {worst:.4} vs rp+0.05 = {:.4}, {elapsed:.1} s",
            nominal.rs_peak(),
            nominal.rp_peak() + 0.05
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_rms_error_bound() {
    let t0 = Instant::now();
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let kd = pipe.discrete_controller(SELECTED_RHO);
    let dist = DisturbanceProfile::default_profile(2, 7).unwrap();
    let trace = simulate_closed_loop(&pipe.plant, &kd, &dist, 30.0, &SimulationOptions::default()).unwrap();
    let rms = rms_los_error(&trace, 2.0).unwrap();
    let oracle = rms_los_oracle(&pipe.plant, &kd, &dist).unwrap();
    let agree = rms.iter().zip(&oracle).all(|(a, b)| (a - b).abs() <= 0.1 * a);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = rms.iter().all(|&r| r < 100.0) && agree;
    report(
        9,
        "RMS LOS error bound",
        pass,
        format!(
            "az {:.1} urad (oracle {:.1}), el {:.1} urad (oracle {:.1}), {elapsed:.1} s",
            rms[0], oracle[0], rms[1], oracle[1]
        ),
    );
    assert!(pass);
}

fn random_stable(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let shift = spectral_abscissa(&m, &Tolerances::default()).unwrap();
    m - DMatrix::identity(n, n) * (shift + rng.random_range(0.1..1.0))
}

#[test]
fn criterion_10_numeric_kernels() {
    let t0 = Instant::now();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut lyap_worst, mut care_worst, mut svd_worst) = (0.0f64, 0.0f64, 0.0f64);
    let mut care_stabilizing = true;
    for i in 0..100 {
        let n = 1 + i % 20;
        let a = random_stable(n, &mut rng);
        let c = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        let q = c.transpose() * &c;
        let (_, rep) = solve_lyapunov(&a, &q).unwrap();
        lyap_worst = lyap_worst.max(rep.residual_norm);

        let m = 1 + i % 3;
        let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let r = DMatrix::identity(m, m) * rng.random_range(0.01..1.0);
        let q = DMatrix::identity(n, n);
        let (x, rep) = solve_care(&a, &b, &q, &r).unwrap();
        care_worst = care_worst.max(rep.residual_norm);
        let acl = &a - &b * r.clone().try_inverse().unwrap() * b.transpose() * &x;
        care_stabilizing &= spectral_abscissa(&acl, &tol).unwrap() < 0.0;

        let k = 2 + i % 5;
        let mc = DMatrix::from_fn(k, k, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let sv = svd_values(&mc, &tol).unwrap();
        let gram = mc.adjoint() * &mc;
        let herm = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
            let z = gram[(r % k, c % k)];
            match (r < k, c < k) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (j, s) in sv.iter().enumerate() {
            // The real embedding of a Hermitian matrix doubles every eigenvalue.
            svd_worst = svd_worst.max((s * s - ev[2 * j].max(0.0)).abs());
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = lyap_worst <= tol.lyapunov_residual
        && care_worst <= tol.care_residual
        && care_stabilizing
        && svd_worst <= 1e-10
        && elapsed < 30.0;
    report(
        10,
        "numeric kernels",
        pass,
        format!("100 instances: lyapunov {lyap_worst:.1e}, care {care_worst:.1e} (stabilizing={care_stabilizing}), svd vs gram {svd_worst:.1e}, {elapsed:.1} s"),
    );
    assert!(pass);
}
