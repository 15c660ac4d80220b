use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gimbal::GimbalAxisParams;
use crate::numerics::{eigenvalues, symmetrize, Tolerances};
use crate::scalar::{hz_to_rad, Real};

/// Known constants of the low-frequency axis model used by the filter.
///
/// States: gyro output `x₁` and its derivative `x₂`, motor rate `x₃`,
/// lagged drive `x₄`, inertia `x₅ = J`, friction `x₆ = B_v`.
/// The input is the amplifier output `u = K_a i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfModel<T: Real> {
    pub kt: T,
    pub wg: T,
    pub xi: T,
    pub d: T,
}

pub const INERTIA_FLOOR: f64 = 1e-6;

impl<T: Real> EkfModel<T> {
    pub fn from_params(p: &GimbalAxisParams<T>) -> Self {
        Self { kt: p.kt, wg: p.wg, xi: p.xi, d: p.d }
    }

    pub fn dynamics(&self, x: &DVector<T>, u: T) -> DVector<T> {
        let w2 = self.wg * self.wg;
        let two = T::lit(2.0);
        DVector::from_vec(vec![
            x[1],
            -w2 * x[0] - two * self.xi * self.wg * x[1] + w2 * x[2],
            (-x[5] * x[2] + self.kt * x[3]) / x[4],
            (-x[3] + u) / self.d,
            T::zero(),
            T::zero(),
        ])
    }

    pub fn jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        let w2 = self.wg * self.wg;
        let mut f = DMatrix::zeros(6, 6);
        f[(0, 1)] = T::one();
        f[(1, 0)] = -w2;
        f[(1, 1)] = -T::lit(2.0) * self.xi * self.wg;
        f[(1, 2)] = w2;
        f[(2, 2)] = -x[5] / x[4];
        f[(2, 3)] = self.kt / x[4];
        f[(2, 4)] = (x[5] * x[2] - self.kt * x[3]) / (x[4] * x[4]);
        f[(2, 5)] = -x[2] / x[4];
        f[(3, 3)] = -T::one() / self.d;
        f
    }
}

/// Filter state: mean, covariance and whether the inertia floor was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfEstimate<T: Real> {
    pub x: DVector<T>,
    pub p: DMatrix<T>,
    pub inertia_clamped: bool,
}

impl<T: Real> EkfEstimate<T> {
    pub fn trace(&self) -> T {
        self.p.trace()
    }
}

/// Time update over `dt`: one RK4 step of `ẋ = f(x, u)` jointly with
/// `Ṗ = F P + P Fᵀ + Q_c`. An inertia estimate below the floor is clamped and flagged.
pub fn ekf_predict<T: Real>(
    model: &EkfModel<T>,
    est: &EkfEstimate<T>,
    u: T,
    dt: T,
    qc: &DMatrix<T>,
) -> Result<EkfEstimate<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameters("EKF step must be positive".into()));
    }
    if !(est.x[4] > T::zero()) {
        return Err(Error::InvalidParameters("inertia estimate must be positive".into()));
    }
    let deriv = |x: &DVector<T>, p: &DMatrix<T>| {
        let f = model.jacobian(x);
        (model.dynamics(x, u), &f * p + p * f.transpose() + qc)
    };
    let half = dt / T::lit(2.0);
    let (k1x, k1p) = deriv(&est.x, &est.p);
    let (k2x, k2p) = deriv(&(&est.x + &k1x * half), &(&est.p + &k1p * half));
    let (k3x, k3p) = deriv(&(&est.x + &k2x * half), &(&est.p + &k2p * half));
    let (k4x, k4p) = deriv(&(&est.x + &k3x * dt), &(&est.p + &k3p * dt));
    let sixth = dt / T::lit(6.0);
    let mut x = &est.x + (k1x + k2x * T::lit(2.0) + k3x * T::lit(2.0) + k4x) * sixth;
    let p = symmetrize(&(&est.p + (k1p + k2p * T::lit(2.0) + k3p * T::lit(2.0) + k4p) * sixth));
    let floor = T::lit(INERTIA_FLOOR);
    let mut clamped = est.inertia_clamped;
    if !(x[4] > floor) {
        x[4] = floor;
        clamped = true;
    }
    Ok(EkfEstimate { x, p, inertia_clamped: clamped })
}

/// Measurement update for `y = x₁ + v`, `E v² = r`, Joseph form, with the inertia floor.
/// Returns the posterior and the innovation variance.
pub fn ekf_update<T: Real>(est: &EkfEstimate<T>, y: T, r: T) -> Result<(EkfEstimate<T>, T)> {
    if !(r > T::zero()) {
        return Err(Error::InvalidParameters("measurement noise variance must be positive".into()));
    }
    let s = est.p[(0, 0)] + r;
    let k: DVector<T> = est.p.column(0) / s;
    let innov = y - est.x[0];
    let mut x = &est.x + &k * innov;
    let mut clamped = est.inertia_clamped;
    if !(x[4] > T::lit(INERTIA_FLOOR)) {
        x[4] = T::lit(INERTIA_FLOOR);
        clamped = true;
    }
    let mut ikh = DMatrix::<T>::identity(6, 6);
    for i in 0..6 {
        ikh[(i, 0)] -= k[i];
    }
    let p = symmetrize(&(&ikh * &est.p * ikh.transpose() + &k * k.transpose() * r));
    Ok((EkfEstimate { x, p, inertia_clamped: clamped }, s))
}

/// Settings of a synthetic identification run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationOptions<T: Real> {
    /// Filter step and measurement period (s).
    pub dt: T,
    pub duration: T,
    pub excitation_hz: T,
    /// Amplitude of the drive current (A).
    pub amplitude: T,
    /// Standard deviation of the gyro measurement noise (rad/s).
    pub meas_noise_std: T,
    /// Initial parameter guesses as multiples of the truth.
    pub init_factor: T,
    /// Process noise intensity on the four dynamic states.
    pub state_process_noise: T,
    /// Process noise intensity on the two parameter states.
    pub param_process_noise: T,
    /// RK4 steps of the truth model per filter step.
    pub truth_substeps: usize,
    /// RK4 steps of the filter prediction per measurement.
    pub predict_substeps: usize,
    pub seed: u64,
}

impl<T: Real> Default for EstimationOptions<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            duration: T::lit(10.0),
            excitation_hz: T::lit(4.0),
            amplitude: T::lit(1.0),
            meas_noise_std: T::lit(1e-3),
            init_factor: T::lit(1.5),
            state_process_noise: T::lit(1e-6),
            param_process_noise: T::lit(1e-8),
            truth_substeps: 10,
            predict_substeps: 10,
            seed: 0,
        }
    }
}

/// One logged filter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfSample<T: Real> {
    pub time: T,
    pub inertia: T,
    pub friction: T,
    pub trace: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfRun<T: Real> {
    pub estimate: EkfEstimate<T>,
    pub history: Vec<EkfSample<T>>,
    pub min_innovation_variance: T,
    /// Smallest covariance eigenvalue seen in the periodic checks.
    pub min_covariance_eigenvalue: T,
    pub covariance_psd: bool,
}

impl<T: Real> EkfRun<T> {
    /// Columns `time_s inertia friction trace`.
    pub fn write_columnar(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "time_s inertia friction trace")?;
        for s in &self.history {
            writeln!(
                out,
                "{:.6e} {:.9e} {:.9e} {:.9e}",
                s.time.to_f64_lossy(),
                s.inertia.to_f64_lossy(),
                s.friction.to_f64_lossy(),
                s.trace.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

fn rk4_truth<T: Real>(model: &EkfModel<T>, x: &DVector<T>, u: T, h: T) -> DVector<T> {
    let half = h / T::lit(2.0);
    let k1 = model.dynamics(x, u);
    let k2 = model.dynamics(&(x + &k1 * half), u);
    let k3 = model.dynamics(&(x + &k2 * half), u);
    let k4 = model.dynamics(&(x + &k3 * h), u);
    x + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (h / T::lit(6.0))
}

/// Generates gyro measurements from the lag model with the true `J`, `B_v`
/// under a sinusoidal drive and runs the filter from scaled initial guesses.
pub fn estimate_parameters<T: Real>(truth: &GimbalAxisParams<T>, opts: &EstimationOptions<T>) -> Result<EkfRun<T>> {
    truth.validate()?;
    if !(opts.dt > T::zero() && opts.duration > opts.dt && opts.meas_noise_std >= T::zero() && opts.truth_substeps > 0 && opts.predict_substeps > 0) {
        return Err(Error::InvalidParameters("estimation needs dt > 0, duration > dt, noise >= 0".into()));
    }
    let model = EkfModel::from_params(truth);
    let steps = (opts.duration / opts.dt).round().to_f64_lossy() as usize;
    let omega = hz_to_rad(opts.excitation_hz);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.meas_noise_std.to_f64_lossy())
        .map_err(|e| Error::InvalidParameters(format!("measurement noise: {e}")))?;
    // The filter needs r > 0 even for noise-free data.
    let r = (opts.meas_noise_std * opts.meas_noise_std).max(T::lit(1e-12));

    let mut xt = DVector::zeros(6);
    xt[4] = truth.j;
    xt[5] = truth.bv;
    let j0 = truth.j * opts.init_factor;
    let b0 = truth.bv * opts.init_factor;
    let mut x0 = DVector::zeros(6);
    x0[4] = j0;
    x0[5] = b0;
    let half = T::lit(0.5);
    let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![
        T::one(),
        T::one(),
        T::one(),
        T::one(),
        (half * j0) * (half * j0),
        (half * b0) * (half * b0),
    ]));
    let mut qc = DMatrix::zeros(6, 6);
    for i in 0..4 {
        qc[(i, i)] = opts.state_process_noise;
    }
    qc[(4, 4)] = opts.param_process_noise;
    qc[(5, 5)] = opts.param_process_noise;

    let mut est = EkfEstimate { x: x0, p: p0, inertia_clamped: false };
    let mut history = Vec::with_capacity(steps);
    let mut min_s = T::lit(f64::INFINITY);
    let mut min_eig = T::lit(f64::INFINITY);
    let mut psd = true;
    let mut prev_trace = est.trace();
    let (mut streak, mut longest) = (0usize, 0usize);
    let h = opts.dt / T::from_count(opts.truth_substeps);
    let hp = opts.dt / T::from_count(opts.predict_substeps);
    for k in 0..steps {
        let t = opts.dt * T::from_count(k);
        let u = truth.ka * opts.amplitude * (omega * t).sin();
        for _ in 0..opts.truth_substeps {
            xt = rk4_truth(&model, &xt, u, h);
        }
        let y = xt[0] + T::lit(noise.sample(&mut rng));
        for _ in 0..opts.predict_substeps {
            est = ekf_predict(&model, &est, u, hp, &qc)?;
        }
        let (post, s) = ekf_update(&est, y, r)?;
        est = post;
        min_s = min_s.min(s);
        let tr = est.trace();
        if tr > prev_trace {
            streak += 1;
            longest = longest.max(streak);
        } else {
            streak = 0;
        }
        prev_trace = tr;
        if k % 100 == 0 || k + 1 == steps {
            let lam = eigenvalues(&est.p, &Tolerances::default())?
                .iter()
                .map(|z| z.re)
                .fold(T::lit(f64::INFINITY), |a, b| a.min(b));
            min_eig = min_eig.min(lam);
            if lam < -T::lit(1e-9) * T::one().max(tr) {
                psd = false;
            }
        }
        history.push(EkfSample { time: t + opts.dt, inertia: est.x[4], friction: est.x[5], trace: tr });
    }
    let fraction = longest as f64 / steps.max(1) as f64;
    if fraction > 0.25 {
        return Err(Error::DivergedFilter { fraction: 100.0 * fraction });
    }
    Ok(EkfRun {
        estimate: est,
        history,
        min_innovation_variance: min_s,
        min_covariance_eigenvalue: min_eig,
        covariance_psd: psd,
    })
}
