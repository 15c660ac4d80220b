//! Two-axis gimbal rate-loop plant, multiplicative uncertainty bounds and
//! seeded perturbation sampling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{svd_values_real, Tolerances};
use crate::systems::{diagonal, hinf_norm, parallel, series, RationalTransferFunction, StateSpaceModel};
use crate::scalar::Real;

/// Physical constants of one gimbal axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalAxisParams<T: Real> {
    /// Current amplifier gain (A/A).
    pub ka: T,
    /// Motor torque constant (N·m/A).
    pub kt: T,
    /// Rate gyro natural frequency (rad/s).
    pub wg: T,
    /// Rate gyro damping ratio.
    pub xi: T,
    /// Rate gyro delay (s).
    pub d: T,
    /// Inertia (kg·m²).
    pub j: T,
    /// Viscous friction (N·m·s/rad).
    pub bv: T,
}

/// How the gyro delay enters the axis model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayModel {
    /// Second-order all-pass Padé factor.
    Pade,
    /// First-order lag `1/(d s + 1)`.
    Lag,
    /// Delay omitted (minimum-phase variant).
    None,
}

impl<T: Real> GimbalAxisParams<T> {
    fn common(j: f64, bv: f64) -> Self {
        Self {
            ka: T::lit(2.0),
            kt: T::lit(2.18),
            wg: T::lit(1646.0),
            xi: T::lit(0.8),
            d: T::lit(0.0045),
            j: T::lit(j),
            bv: T::lit(bv),
        }
    }

    pub fn azimuth() -> Self {
        Self::common(0.1736, 1.15)
    }

    pub fn elevation() -> Self {
        Self::common(0.063, 0.61)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ka", self.ka),
            ("kt", self.kt),
            ("wg", self.wg),
            ("xi", self.xi),
            ("d", self.d),
            ("j", self.j),
            ("bv", self.bv),
        ];
        for (name, v) in fields {
            if !(v.finite() && v > T::zero()) {
                return Err(Error::InvalidParameters(format!("gimbal parameter {name} must be positive, got {v}")));
            }
        }
        if self.xi > T::one() {
            return Err(Error::InvalidParameters(format!("gyro damping must lie in (0, 1], got {}", self.xi)));
        }
        Ok(())
    }

    /// `Ka Kt / (J s + Bv)`.
    pub fn motor(&self) -> RationalTransferFunction<T> {
        RationalTransferFunction::new(vec![self.ka * self.kt], vec![self.j, self.bv]).expect("proper")
    }

    /// `wg² / (s² + 2ξ wg s + wg²)`.
    pub fn gyro(&self) -> RationalTransferFunction<T> {
        let w2 = self.wg * self.wg;
        RationalTransferFunction::new(vec![w2], vec![T::one(), T::lit(2.0) * self.xi * self.wg, w2]).expect("proper")
    }

    /// Second-order Padé approximation of `e^{−d s}`.
    pub fn pade(&self) -> RationalTransferFunction<T> {
        let a = self.d * self.d / T::lit(12.0);
        let b = self.d / T::lit(2.0);
        RationalTransferFunction::new(vec![a, -b, T::one()], vec![a, b, T::one()]).expect("proper")
    }

    /// First-order lag `1 / (d s + 1)`.
    pub fn lag(&self) -> RationalTransferFunction<T> {
        RationalTransferFunction::new(vec![T::one()], vec![self.d, T::one()]).expect("proper")
    }
}

/// Order-5 axis model: motor, gyro and Padé delay in series.
pub fn build_axis_model<T: Real>(p: &GimbalAxisParams<T>) -> Result<StateSpaceModel<T>> {
    build_axis_model_with(p, DelayModel::Pade)
}

/// Axis model with a chosen delay representation. Each factor is realized
/// separately and chained, which keeps the realization well scaled.
pub fn build_axis_model_with<T: Real>(p: &GimbalAxisParams<T>, delay: DelayModel) -> Result<StateSpaceModel<T>> {
    p.validate()?;
    let g = series(&p.motor().to_ss(), &p.gyro().to_ss())?;
    match delay {
        DelayModel::Pade => series(&g, &p.pade().to_ss()),
        DelayModel::Lag => series(&g, &p.lag().to_ss()),
        DelayModel::None => Ok(g),
    }
}

/// Decoupled 2×2 plant `diag(G_az, G_el)`, order 10.
pub fn build_mimo_model<T: Real>(az: &GimbalAxisParams<T>, el: &GimbalAxisParams<T>) -> Result<StateSpaceModel<T>> {
    build_mimo_model_with(az, el, DelayModel::Pade)
}

pub fn build_mimo_model_with<T: Real>(
    az: &GimbalAxisParams<T>,
    el: &GimbalAxisParams<T>,
    delay: DelayModel,
) -> Result<StateSpaceModel<T>> {
    diagonal(&build_axis_model_with(az, delay)?, &build_axis_model_with(el, delay)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Azimuth,
    Elevation,
}

/// Multiplicative model-error bound for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyWeight<T: Real> {
    pub axis: Axis,
    pub weight: RationalTransferFunction<T>,
}

fn tf<T: Real>(num: &[f64], den: &[f64]) -> RationalTransferFunction<T> {
    RationalTransferFunction::new(num.iter().map(|&x| T::lit(x)).collect(), den.iter().map(|&x| T::lit(x)).collect())
        .expect("valid weight")
}

/// Azimuth and elevation uncertainty bounds and their diagonal stack `W1`.
pub fn uncertainty_weights<T: Real>() -> (UncertaintyWeight<T>, UncertaintyWeight<T>, StateSpaceModel<T>) {
    let w1a = tf(&[1.87, 792.65, 90750.0], &[1.0, 650.35, 572624.0]);
    let w1e = tf(&[1.12, 2564.28, 289957.0], &[1.0, 2059.65, 2375266.0]);
    let w1 = diagonal(&w1a.to_ss(), &w1e.to_ss()).expect("scalar blocks");
    (
        UncertaintyWeight { axis: Axis::Azimuth, weight: w1a },
        UncertaintyWeight { axis: Axis::Elevation, weight: w1e },
        w1,
    )
}

/// `(I + Δ W1) G`.
pub fn perturb<T: Real>(
    nominal: &StateSpaceModel<T>,
    w1: &StateSpaceModel<T>,
    delta: &StateSpaceModel<T>,
) -> Result<StateSpaceModel<T>> {
    let p = nominal.outputs();
    let factor = parallel(&StateSpaceModel::identity(p), &series(w1, delta)?)?;
    series(nominal, &factor)
}

/// One sampled plant together with the perturbation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedModel<T: Real> {
    pub delta: StateSpaceModel<T>,
    pub delta_norm: T,
    pub plant: StateSpaceModel<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedModelSet<T: Real> {
    pub seed: u64,
    pub members: Vec<PerturbedModel<T>>,
}

/// Random stable `Δ` with `‖Δ‖∞ ≤ 1`: `diag(gᵢ (aᵢ − s)/(aᵢ + s)) · M`,
/// gains `gᵢ ∈ [0, 1]`, corner frequencies log-uniform over 1 Hz–1 kHz and
/// `M` a Gaussian matrix scaled to unit spectral norm.
pub fn random_delta<T: Real, R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<StateSpaceModel<T>> {
    let mut m = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    let top = svd_values_real(&m, &Tolerances::default())?[0];
    if top > 0.0 {
        m /= top;
    }
    let mut blocks: Option<StateSpaceModel<T>> = None;
    for _ in 0..p {
        let g: f64 = rng.random_range(0.0..=1.0);
        let a = std::f64::consts::TAU * 10f64.powf(rng.random_range(0.0..3.0));
        let ap = tf::<T>(&[-g, g * a], &[1.0, a]).to_ss();
        blocks = Some(match blocks {
            None => ap,
            Some(b) => diagonal(&b, &ap)?,
        });
    }
    let m = StateSpaceModel::static_gain(m.map(T::lit));
    series(&m, &blocks.expect("p >= 1"))
}

/// Deterministic set of `count` perturbed plants drawn from `seed`.
pub fn sample_perturbed_models<T: Real>(
    nominal: &StateSpaceModel<T>,
    w1: &StateSpaceModel<T>,
    count: usize,
    seed: u64,
) -> Result<PerturbedModelSet<T>> {
    if count == 0 {
        return Err(Error::InvalidParameters("perturbation count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let delta = random_delta::<T, _>(nominal.outputs(), &mut rng)?;
        let delta_norm = hinf_norm(&delta)?.value;
        if delta_norm > T::one() + T::lit(1e-6) {
            return Err(Error::InvalidParameters(format!("sampled perturbation has norm {delta_norm} > 1")));
        }
        let plant = perturb(nominal, w1, &delta)?;
        members.push(PerturbedModel { delta, delta_norm, plant });
    }
    Ok(PerturbedModelSet { seed, members })
}
