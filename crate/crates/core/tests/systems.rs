mod common;

use common::{Pipeline, SELECTED_RHO};
use ltr_core::gimbal::*;
use ltr_core::numerics::*;
use ltr_core::robustness::closed_loop_maps;
use ltr_core::systems::*;
use ltr_core::{StateSpace, TransferFunction};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn rel_err(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn realization_round_trip(
        num in prop::collection::vec(-2.0f64..2.0, 1..4),
        roots in prop::collection::vec(0.1f64..20.0, 3..5),
    ) {
        let mut den = vec![1.0];
        for r in &roots {
            let mut next = vec![0.0; den.len() + 1];
            for (i, c) in den.iter().enumerate() {
                next[i] += c;
                next[i + 1] += c * r;
            }
            den = next;
        }
        let tf = TransferFunction::new(num, den).unwrap();
        let ss = tf.to_ss();
        for k in 0..20 {
            let w = 10f64.powf(-1.0 + 0.2 * k as f64);
            let direct = tf.at(w);
            let via = ss.at(w).unwrap()[(0, 0)];
            prop_assert!((direct - via).norm() <= 1e-8 * direct.norm().max(1e-12));
        }
    }

    #[test]
    fn hinf_norm_is_similarity_invariant(t in prop::collection::vec(-1.0f64..1.0, 9)) {
        let sys = TransferFunction::new(vec![1.0, 2.0], vec![1.0, 0.6, 9.0]).unwrap().to_ss();
        let sys = diagonal(&sys, &TransferFunction::new(vec![3.0], vec![1.0, 2.0]).unwrap().to_ss()).unwrap();
        let mut t = DMatrix::from_vec(3, 3, t);
        t += DMatrix::identity(3, 3) * 3.0;
        let a = hinf_norm(&sys).unwrap().value;
        let b = hinf_norm(&sys.similarity(&t).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-6 * a);
    }
}

#[test]
fn sensitivity_plus_complementary_is_identity() {
    let pipe = Pipeline::new(&[SELECTED_RHO]);
    let maps = closed_loop_maps(&pipe.plant, pipe.compensator(SELECTED_RHO)).unwrap();
    let eye = DMatrix::<Complex<f64>>::identity(2, 2);
    for &w in &default_grid::<f64>() {
        let sum = maps.s.at(w).unwrap() + maps.t.at(w).unwrap();
        assert!(rel_err(&sum, &eye) <= 1e-8, "S + T != I at {w}");
    }
}

#[test]
fn pade_factor_has_unit_sigma_envelope() {
    let pade = GimbalAxisParams::<f64>::azimuth().pade().to_ss();
    let fr = frequency_response(&pade, &default_grid::<f64>()).unwrap();
    for s in sigma_envelope(&fr).unwrap() {
        assert!((s[0] - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn axis_magnitude_matches_factored_form() {
    let p = GimbalAxisParams::<f64>::elevation();
    let g = build_axis_model(&p).unwrap();
    for k in 0..20 {
        let w = 10f64.powf(-1.0 + 0.25 * k as f64);
        let s = Complex::new(0.0, w);
        let motor = p.ka * p.kt / (s * p.j + p.bv);
        let gyro = p.wg * p.wg / (s * s + s * 2.0 * p.xi * p.wg + p.wg * p.wg);
        let expected = (motor * gyro).norm();
        let got = g.at(w).unwrap()[(0, 0)].norm();
        assert!((got - expected).abs() <= 1e-8 * expected);
    }
}

#[test]
fn feedback_matches_algebraic_composition() {
    let g = TransferFunction::new(vec![2.0], vec![1.0, 3.0, 2.0]).unwrap().to_ss();
    let k = TransferFunction::new(vec![1.0, 1.0], vec![1.0, 10.0]).unwrap().to_ss();
    let cl = feedback(&g, &k, FeedbackSign::Negative).unwrap();
    for &w in &[0.1, 1.0, 10.0, 100.0] {
        let gv = g.at(w).unwrap()[(0, 0)];
        let kv = k.at(w).unwrap()[(0, 0)];
        let expected = gv / (Complex::new(1.0, 0.0) + gv * kv);
        assert!((cl.at(w).unwrap()[(0, 0)] - expected).norm() <= 1e-8 * expected.norm());
    }
}

#[test]
fn perturbed_models_are_bounded_and_repeatable() {
    let g = build_mimo_model(&GimbalAxisParams::azimuth(), &GimbalAxisParams::elevation()).unwrap();
    let (_, _, w1) = uncertainty_weights::<f64>();
    let a = sample_perturbed_models(&g, &w1, 5, 3).unwrap();
    let b = sample_perturbed_models(&g, &w1, 5, 3).unwrap();
    assert_eq!(a, b);
    for m in &a.members {
        assert!(m.delta_norm <= 1.0 + 1e-6);
        assert!(m.delta.is_stable().unwrap());
    }
}

#[test]
fn single_precision_response_tracks_double() {
    let g: StateSpace = build_mimo_model(&GimbalAxisParams::azimuth(), &GimbalAxisParams::elevation()).unwrap();
    let g32 = g.cast::<f32>();
    for &w in &[1.0, 10.0, 100.0] {
        let a = g.at(w).unwrap()[(0, 0)].norm();
        let b = g32.at(w as f32).unwrap()[(0, 0)].norm() as f64;
        assert!((a - b).abs() <= 1e-4 * a);
    }
    let _ = svd_values_real(&DMatrix::<f32>::identity(2, 2), &Tolerances::default()).unwrap();
}
