//! Shaped-disturbance LQG synthesis and loop transfer recovery at the plant output.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{dim_err, Error, Result};
use crate::numerics::{self, solve_care, svd_values, SolverReport, Tolerances};
use crate::scalar::Real;
use crate::systems::{diagonal, feedback, log_grid_hz, FeedbackSign, RationalTransferFunction, StateSpaceModel};
use crate::textio::write_matrix;

/// Parameters of the second-order sensitivity weight
/// `scale · (s²/Ms + 2ξωb s/√Ms + ωb²) / (s² + 2ξωb√ε s + ωb² ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityWeightParams<T: Real> {
    pub ms: T,
    pub eps: T,
    pub xi: T,
    /// Rad/s.
    pub wb: T,
    /// Overall output scaling (1 for the plain weight).
    pub scale: T,
}

impl<T: Real> SensitivityWeightParams<T> {
    /// 10 Hz bandwidth, DC gain 100, high-frequency gain 1/3.162.
    pub fn design1() -> Self {
        Self {
            ms: T::lit(3.162),
            eps: T::lit(0.01),
            xi: T::lit(0.5),
            wb: T::lit(2.0 * std::f64::consts::PI * 10.0),
            scale: T::one(),
        }
    }

    /// 15 Hz bandwidth with 2.5 times the DC gain of [`design1`](Self::design1).
    pub fn design2() -> Self {
        Self { wb: T::lit(2.0 * std::f64::consts::PI * 15.0), eps: T::lit(0.004), ..Self::design1() }
    }

    /// Unit high-frequency asymptote variant of [`design1`](Self::design1).
    pub fn unit_peak() -> Self {
        Self { ms: T::one(), ..Self::design1() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.ms >= T::one()
            && self.eps > T::zero()
            && self.eps < T::one()
            && self.xi > T::zero()
            && self.xi <= T::one()
            && self.wb > T::zero()
            && self.scale > T::zero()
            && [self.ms, self.eps, self.xi, self.wb, self.scale].iter().all(|v| v.finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!(
                "sensitivity weight needs Ms >= 1, 0 < eps < 1, 0 < xi <= 1, wb > 0, scale > 0; got {self:?}"
            )))
        }
    }
}

pub fn make_sensitivity_weight<T: Real>(p: &SensitivityWeightParams<T>) -> Result<RationalTransferFunction<T>> {
    p.validate()?;
    let two = T::lit(2.0);
    let w2 = p.wb * p.wb;
    let num = vec![p.scale / p.ms, p.scale * two * p.xi * p.wb / p.ms.sqrt(), p.scale * w2];
    let den = vec![T::one(), two * p.xi * p.wb * p.eps.sqrt(), w2 * p.eps];
    RationalTransferFunction::new(num, den)
}

/// `diag(w, …, w)` with `channels` copies of a scalar weight.
pub fn diagonal_weight<T: Real>(w: &RationalTransferFunction<T>, channels: usize) -> Result<StateSpaceModel<T>> {
    let one = w.to_ss();
    let mut acc = one.clone();
    for _ in 1..channels {
        acc = diagonal(&acc, &one)?;
    }
    Ok(acc)
}

/// Plant with output-disturbance shaping states appended.
///
/// States are `[x; ξ]` with `ẋ = A x + B u`, `ξ̇ = A_d ξ + B_d d̃` and
/// `y = C x + C_d ξ + Θ`. `model` carries `(A, B, C, D)` of this system, so
/// its input/output map equals the original plant.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPlant<T: Real> {
    pub plant: StateSpaceModel<T>,
    pub model: StateSpaceModel<T>,
    /// Process-noise input matrix `[0; B_d]`.
    pub gamma: DMatrix<T>,
    pub n_plant: usize,
    pub n_weight: usize,
}

/// Appends the states of the disturbance weight `we` to `g`. The weight's
/// feedthrough term is not part of the disturbance channel.
pub fn augment_plant<T: Real>(g: &StateSpaceModel<T>, we: &StateSpaceModel<T>) -> Result<AugmentedPlant<T>> {
    let p = g.outputs();
    if we.outputs() != p || we.inputs() != p {
        return Err(dim_err("disturbance weight", format!("{p}x{p}"), format!("{}x{}", we.outputs(), we.inputs())));
    }
    let (ng, nw, m) = (g.order(), we.order(), g.inputs());
    let n = ng + nw;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (ng, ng)).copy_from(g.a());
    a.view_mut((ng, ng), (nw, nw)).copy_from(we.a());
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (ng, m)).copy_from(g.b());
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, ng)).copy_from(g.c());
    c.view_mut((0, ng), (p, nw)).copy_from(we.c());
    let mut gamma = DMatrix::zeros(n, p);
    gamma.view_mut((ng, 0), (nw, p)).copy_from(we.b());
    let model = StateSpaceModel::new(a, b, c, g.d().clone())?;
    Ok(AugmentedPlant { plant: g.clone(), model, gamma, n_plant: ng, n_weight: nw })
}

impl<T: Real> AugmentedPlant<T> {
    pub fn order(&self) -> usize {
        self.model.order()
    }

    pub fn outputs(&self) -> usize {
        self.model.outputs()
    }
}

/// Noise intensities of the augmented plant.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIntensities<T: Real> {
    /// Intensity of the white process noise `d̃`.
    pub w: DMatrix<T>,
    /// Level of the (unshaped) measurement-noise channel.
    pub v: DMatrix<T>,
    /// Covariance of the direct measurement noise `Θ`.
    pub theta_cov: DMatrix<T>,
}

impl<T: Real> NoiseIntensities<T> {
    pub fn identity(p: usize) -> Self {
        Self { w: DMatrix::identity(p, p), v: DMatrix::identity(p, p), theta_cov: DMatrix::identity(p, p) }
    }

    /// Intensity of the noise reaching `y`: `V^{1/2} Θ V^{1/2}`.
    pub fn measurement_intensity(&self) -> Result<DMatrix<T>> {
        let l = self.v.clone().cholesky().ok_or(Error::Singular("measurement noise level V"))?.l();
        Ok(&l * &self.theta_cov * l.transpose())
    }

    fn validate(&self, p: usize) -> Result<()> {
        for (name, m) in [("W", &self.w), ("V", &self.v), ("theta_cov", &self.theta_cov)] {
            if m.shape() != (p, p) {
                return Err(dim_err("noise intensity", format!("{name} {p}x{p}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        if self.theta_cov.clone().cholesky().is_none() {
            return Err(Error::Singular("theta_cov must be positive definite"));
        }
        let wmin = numerics::eigenvalues(&numerics::symmetrize(&self.w), &Tolerances::default())?
            .iter()
            .map(|z| z.re)
            .fold(T::lit(f64::INFINITY), |a, b| a.min(b));
        if wmin < -T::lit(1e-12) * T::one().max(numerics::frobenius(&self.w)) {
            return Err(Error::InvalidParameters("process noise intensity W must be positive semidefinite".into()));
        }
        Ok(())
    }
}

/// Steady-state Kalman filter for the augmented plant.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanDesign<T: Real> {
    pub kf: DMatrix<T>,
    pub p: DMatrix<T>,
    pub report: SolverReport<T>,
    /// Target loop `C Φ K_f`.
    pub target_loop: StateSpaceModel<T>,
}

pub fn design_kalman<T: Real>(aug: &AugmentedPlant<T>, noise: &NoiseIntensities<T>) -> Result<KalmanDesign<T>> {
    let p_out = aug.outputs();
    noise.validate(p_out)?;
    let (a, c) = (aug.model.a(), aug.model.c());
    let rf = noise.measurement_intensity()?;
    let qf = &aug.gamma * &noise.w * aug.gamma.transpose();
    let (p, report) = solve_care(&a.transpose(), &c.transpose(), &qf, &rf)?;
    let kf = &p * c.transpose() * numerics::inverse(&rf, "measurement intensity")?;
    let target_loop = StateSpaceModel::new(a.clone(), kf.clone(), c.clone(), DMatrix::zeros(p_out, p_out))?;
    Ok(KalmanDesign { kf, p, report, target_loop })
}

/// State-feedback gain for the output-weighted regulator.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign<T: Real> {
    pub rho: T,
    pub kc: DMatrix<T>,
    pub x: DMatrix<T>,
    pub report: SolverReport<T>,
}

/// Regulator with cost `∫ yᵀy + ρ uᵀu`, i.e. `Q = CᵀC`, `R = ρI`.
pub fn design_lqr<T: Real>(aug: &AugmentedPlant<T>, rho: T) -> Result<LqrDesign<T>> {
    if !(rho > T::zero() && rho.finite()) {
        return Err(Error::InvalidParameters(format!("rho must be positive, got {rho}")));
    }
    let (a, b, c) = (aug.model.a(), aug.model.b(), aug.model.c());
    let m = b.ncols();
    let q = c.transpose() * c;
    let r = DMatrix::identity(m, m) * rho;
    let (x, report) = solve_care(a, b, &q, &r)?;
    let kc = b.transpose() * &x / rho;
    Ok(LqrDesign { rho, kc, x, report })
}

/// Observer-based compensator `K(s)` for the loop `u = −K y`:
/// `Â = A − B Kc − Kf C + Kf D Kc`, input `Kf`, output `Kc`.
pub fn assemble_lqg<T: Real>(aug: &AugmentedPlant<T>, kf: &DMatrix<T>, kc: &DMatrix<T>) -> Result<StateSpaceModel<T>> {
    let (a, b, c, d) = (aug.model.a(), aug.model.b(), aug.model.c(), aug.model.d());
    let n = aug.order();
    if kf.shape() != (n, c.nrows()) {
        return Err(dim_err("Kalman gain", format!("{}x{}", n, c.nrows()), format!("{}x{}", kf.nrows(), kf.ncols())));
    }
    if kc.shape() != (b.ncols(), n) {
        return Err(dim_err("regulator gain", format!("{}x{}", b.ncols(), n), format!("{}x{}", kc.nrows(), kc.ncols())));
    }
    let ak = a - b * kc - kf * c + kf * d * kc;
    StateSpaceModel::new(ak, kf.clone(), kc.clone(), DMatrix::zeros(b.ncols(), c.nrows()))
}

/// Band over which loop recovery is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryBand {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub per_decade: usize,
}

impl Default for RecoveryBand {
    fn default() -> Self {
        Self { f_min_hz: 0.1, f_max_hz: 100.0, per_decade: 400 }
    }
}

/// One point of the recovery sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryPoint<T: Real> {
    pub rho: T,
    pub kc: DMatrix<T>,
    pub compensator: StateSpaceModel<T>,
    /// `max σ̄(GK − CΦKf) / max σ̄(CΦKf)` over the band.
    pub recovery_error: T,
    pub stable: bool,
    pub closed_loop_abscissa: T,
    pub slowest_closed_loop_pole: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqgLtrDesign<T: Real> {
    pub augmented: AugmentedPlant<T>,
    pub kalman: KalmanDesign<T>,
    pub points: Vec<RecoveryPoint<T>>,
}

pub const DEFAULT_RHOS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

/// Closed loop `u = −K y` around `g`.
pub fn closed_loop<T: Real>(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    feedback(g, k, FeedbackSign::Negative)
}

/// Recovery error of `compensator` against the target loop over `band`.
pub fn recovery_error<T: Real>(
    plant: &StateSpaceModel<T>,
    compensator: &StateSpaceModel<T>,
    target: &StateSpaceModel<T>,
    band: &RecoveryBand,
) -> Result<T> {
    let grid = log_grid_hz::<T>(band.f_min_hz, band.f_max_hz, band.per_decade)?;
    let tol = Tolerances::default();
    let pairs = grid
        .par_iter()
        .map(|&w| {
            let l = plant.at(w)? * compensator.at(w)?;
            let t = target.at(w)?;
            let diff = svd_values(&(l - &t), &tol)?[0];
            let tgt = svd_values(&t, &tol)?[0];
            Ok((diff, tgt))
        })
        .collect::<Result<Vec<(T, T)>>>()?;
    let num = pairs.iter().fold(T::zero(), |a, p| a.max(p.0));
    let den = pairs.iter().fold(T::zero(), |a, p| a.max(p.1)).max(T::lit(1e-12));
    Ok(num / den)
}

/// Designs one compensator per `ρ` and records its recovery diagnostics.
/// Points are computed in parallel and returned in the order of `rhos`.
pub fn ltr_sweep<T: Real>(
    aug: &AugmentedPlant<T>,
    kalman: &KalmanDesign<T>,
    rhos: &[T],
    band: &RecoveryBand,
) -> Result<LqgLtrDesign<T>> {
    if rhos.is_empty() || rhos.iter().any(|r| !(*r > T::zero())) {
        return Err(Error::InvalidParameters("rho list must be nonempty and positive".into()));
    }
    if rhos.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameters("rho list must be strictly descending".into()));
    }
    let points = rhos
        .par_iter()
        .map(|&rho| {
            let lqr = design_lqr(aug, rho)?;
            let compensator = assemble_lqg(aug, &kalman.kf, &lqr.kc)?;
            let cl = closed_loop(&aug.plant, &compensator)?;
            let poles = cl.poles()?;
            let abscissa = poles.iter().map(|z| z.re).fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
            let slowest = poles.iter().map(|z| z.re).fold(T::lit(f64::INFINITY), |a, b| a.min(b));
            let recovery_error = recovery_error(&aug.model, &compensator, &kalman.target_loop, band)?;
            Ok(RecoveryPoint {
                rho,
                kc: lqr.kc,
                compensator,
                recovery_error,
                stable: abscissa < T::zero(),
                closed_loop_abscissa: abscissa,
                slowest_closed_loop_pole: slowest,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LqgLtrDesign { augmented: aug.clone(), kalman: kalman.clone(), points })
}

impl<T: Real> LqgLtrDesign<T> {
    pub fn point(&self, rho: T) -> Option<&RecoveryPoint<T>> {
        let tol = T::lit(1e-9);
        self.points.iter().find(|p| ((p.rho - rho) / rho).abs() < tol)
    }

    /// Recovery table followed by the matrices of every compensator.
    ///
    /// Table columns: `rho recovery_error stable max_re_cl min_re_cl`.
    pub fn write_report(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "# augmented_order {} plant_order {}", self.augmented.order(), self.augmented.n_plant)?;
        writeln!(out, "rho recovery_error stable max_re_cl min_re_cl")?;
        for p in &self.points {
            writeln!(
                out,
                "{:.6e} {:.6e} {} {:.6e} {:.6e}",
                p.rho.to_f64_lossy(),
                p.recovery_error.to_f64_lossy(),
                u8::from(p.stable),
                p.closed_loop_abscissa.to_f64_lossy(),
                p.slowest_closed_loop_pole.to_f64_lossy()
            )?;
        }
        write_matrix(out, "Kf", &self.kalman.kf)?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(out, "# compensator {i} rho {:.6e}", p.rho.to_f64_lossy())?;
            write_matrix(out, &format!("Ak_{i}"), p.compensator.a())?;
            write_matrix(out, &format!("Bk_{i}"), p.compensator.b())?;
            write_matrix(out, &format!("Ck_{i}"), p.compensator.c())?;
            write_matrix(out, &format!("Dk_{i}"), p.compensator.d())?;
        }
        Ok(())
    }
}
