//! Output sensitivity maps and the singular-value tests for nominal
//! performance, robust stability and robust performance.

use std::io::{self, Write};

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::design::closed_loop;
use crate::error::{Error, Result};
use crate::gimbal::perturb;
use crate::numerics::{svd_values, to_complex, ComplexMatrix, Tolerances};
use crate::scalar::{rad_to_hz, Real};
use crate::systems::{feedback, grid_peak, hinf_norm, series, FeedbackSign, Peak, RationalTransferFunction, StateSpaceModel};

/// `S_o = (I + GK)⁻¹` and `T_o = GK (I + GK)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopMaps<T: Real> {
    pub s: StateSpaceModel<T>,
    pub t: StateSpaceModel<T>,
}

/// Closed-loop poles with nonnegative real part, if any.
fn unstable_poles<T: Real>(sys: &StateSpaceModel<T>) -> Result<Vec<(f64, f64)>> {
    Ok(sys
        .poles()?
        .into_iter()
        .filter(|z| z.re >= T::zero())
        .map(|z| (z.re.to_f64_lossy(), z.im.to_f64_lossy()))
        .collect())
}

/// Output maps of the loop `u = −K y`; fails unless the loop is internally stable.
pub fn closed_loop_maps<T: Real>(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>) -> Result<ClosedLoopMaps<T>> {
    let cl = closed_loop(g, k)?;
    let bad = unstable_poles(&cl)?;
    if !bad.is_empty() {
        return Err(Error::UnstableClosedLoop { eigenvalues: bad });
    }
    let p = g.outputs();
    let l = series(k, g)?;
    let eye = StateSpaceModel::identity(p);
    let s = feedback(&eye, &l, FeedbackSign::Negative)?;
    let t = feedback(&l, &eye, FeedbackSign::Negative)?;
    Ok(ClosedLoopMaps { s, t })
}

/// Value of an H∞ test and whether it passes (`value < 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult<T: Real> {
    pub value: T,
    /// Rad/s; infinite when attained as ω → ∞.
    pub omega: T,
    pub pass: bool,
}

impl<T: Real> From<Peak<T>> for TestResult<T> {
    fn from(p: Peak<T>) -> Self {
        Self { value: p.value, omega: p.omega, pass: p.value < T::one() }
    }
}

/// `‖W_e S_o‖∞ < 1`.
pub fn nominal_performance<T: Real>(we: &StateSpaceModel<T>, s: &StateSpaceModel<T>) -> Result<TestResult<T>> {
    Ok(hinf_norm(&series(s, we)?)?.into())
}

/// `‖W_1 T_o‖∞ < 1`.
pub fn robust_stability<T: Real>(w1: &StateSpaceModel<T>, t: &StateSpaceModel<T>) -> Result<TestResult<T>> {
    Ok(hinf_norm(&series(t, w1)?)?.into())
}

/// Response at ω, with ω = ∞ mapped to the feedthrough.
fn response_at<T: Real>(sys: &StateSpaceModel<T>, omega: T) -> Result<ComplexMatrix<T>> {
    if omega.to_f64_lossy().is_infinite() {
        Ok(to_complex(sys.d()))
    } else {
        sys.at(omega)
    }
}

fn sigma_max<T: Real>(m: &DMatrix<Complex<T>>) -> Result<T> {
    Ok(svd_values(m, &Tolerances::default())?.first().copied().unwrap_or(T::zero()))
}

/// Pointwise robust-performance sum `σ̄(W_e S_o) + σ̄(W_1 T_o)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustPerformance<T: Real> {
    pub omega: Vec<T>,
    pub np_trace: Vec<T>,
    pub rs_trace: Vec<T>,
    pub rp_trace: Vec<T>,
    pub peak: TestResult<T>,
}

/// Evaluates the robust-performance sum on `grid`, refines around the grid
/// maximum, and also checks the frequencies in `extra` (for instance the
/// peak locations of the two component tests).
pub fn robust_performance<T: Real>(
    we: &StateSpaceModel<T>,
    s: &StateSpaceModel<T>,
    w1: &StateSpaceModel<T>,
    t: &StateSpaceModel<T>,
    grid: &[T],
    extra: &[T],
) -> Result<RobustPerformance<T>> {
    let wes = series(s, we)?;
    let w1t = series(t, w1)?;
    let parts = |w: T| -> Result<(T, T)> { Ok((sigma_max(&response_at(&wes, w)?)?, sigma_max(&response_at(&w1t, w)?)?)) };
    let traces = grid.par_iter().map(|&w| parts(w)).collect::<Result<Vec<_>>>()?;
    let np_trace: Vec<T> = traces.iter().map(|p| p.0).collect();
    let rs_trace: Vec<T> = traces.iter().map(|p| p.1).collect();
    let rp_trace: Vec<T> = traces.iter().map(|p| p.0 + p.1).collect();
    let mut peak = grid_peak(grid, |w| parts(w).map(|(a, b)| a + b), 60)?;
    for &w in extra {
        let v = parts(w).map(|(a, b)| a + b)?;
        if v > peak.value {
            peak = Peak { value: v, omega: w };
        }
    }
    Ok(RobustPerformance { omega: grid.to_vec(), np_trace, rs_trace, rp_trace, peak: peak.into() })
}

/// All three tests for one loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport<T: Real> {
    pub np: TestResult<T>,
    pub rs: TestResult<T>,
    pub rp: RobustPerformance<T>,
}

impl<T: Real> RobustnessReport<T> {
    pub fn np_peak(&self) -> T {
        self.np.value
    }

    pub fn rs_peak(&self) -> T {
        self.rs.value
    }

    pub fn rp_peak(&self) -> T {
        self.rp.peak.value
    }

    /// Summary lines, then columns `frequency_hz np rs rp`.
    pub fn write_columnar(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        for (name, r) in [("np_peak", &self.np), ("rs_peak", &self.rs), ("rp_peak", &self.rp.peak)] {
            writeln!(
                out,
                "# {name} {:.9e} at_hz {:.6e} pass {}",
                r.value.to_f64_lossy(),
                rad_to_hz(r.omega).to_f64_lossy(),
                u8::from(r.pass)
            )?;
        }
        writeln!(out, "frequency_hz np rs rp")?;
        for i in 0..self.rp.omega.len() {
            writeln!(
                out,
                "{:.12e} {:.12e} {:.12e} {:.12e}",
                rad_to_hz(self.rp.omega[i]).to_f64_lossy(),
                self.rp.np_trace[i].to_f64_lossy(),
                self.rp.rs_trace[i].to_f64_lossy(),
                self.rp.rp_trace[i].to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Runs the nominal-performance, robust-stability and robust-performance tests on the loop `(g, k)`.
pub fn analyze<T: Real>(
    g: &StateSpaceModel<T>,
    k: &StateSpaceModel<T>,
    we: &StateSpaceModel<T>,
    w1: &StateSpaceModel<T>,
    grid: &[T],
) -> Result<RobustnessReport<T>> {
    let maps = closed_loop_maps(g, k)?;
    let np = nominal_performance(we, &maps.s)?;
    let rs = robust_stability(w1, &maps.t)?;
    let rp = robust_performance(we, &maps.s, w1, &maps.t, grid, &[np.omega, rs.omega])?;
    Ok(RobustnessReport { np, rs, rp })
}

/// Stable scalar all-pass `±(a − s)/(a + s)` scaled to equal `c` at `s = jω`.
fn interpolating_all_pass<T: Real>(c: Complex<T>, omega: T) -> RationalTransferFunction<T> {
    let mag = c.re.hypot(c.im);
    if mag == T::zero() {
        return RationalTransferFunction::constant(T::zero());
    }
    let pi = T::pi();
    // Phase of (a − jω)/(a + jω) is −2·atan(ω/a) ∈ (−π, 0).
    let mut phi = c.im.atan2(c.re);
    let mut sign = T::one();
    if phi > T::zero() {
        phi -= pi;
        sign = -T::one();
    }
    let half = -phi / T::lit(2.0);
    if half <= T::lit(1e-12) {
        return RationalTransferFunction::constant(sign * mag);
    }
    if half >= pi / T::lit(2.0) - T::lit(1e-12) {
        return RationalTransferFunction::constant(-sign * mag);
    }
    let a = omega / half.tan();
    RationalTransferFunction::new(vec![-sign * mag, sign * mag * a], vec![T::one(), a]).expect("proper")
}

/// Perturbation that drives the loop to instability just above the robust-stability margin.
#[derive(Debug, Clone, PartialEq)]
pub struct DestabilizingWitness<T: Real> {
    /// Rank-one all-pass `Δ` with `‖Δ‖∞ = 1/rs_peak`.
    pub delta: StateSpaceModel<T>,
    pub delta_norm: T,
    pub scale: T,
    pub omega: T,
    pub closed_loop_abscissa: T,
}

/// Builds `Δ = −(1/γ) x(s) y(s)ᵀ` from the top singular pair of `W_1 T_o(jω₀)`
/// at the robust-stability peak `γ`, scales it by `scale` (> 1) and reports
/// the spectral abscissa of the perturbed loop.
pub fn destabilizing_witness<T: Real>(
    g: &StateSpaceModel<T>,
    k: &StateSpaceModel<T>,
    w1: &StateSpaceModel<T>,
    scale: T,
) -> Result<DestabilizingWitness<T>> {
    let maps = closed_loop_maps(g, k)?;
    let w1t = series(&maps.t, w1)?;
    let rs = hinf_norm(&w1t)?;
    let omega = rs.omega;
    if !(omega > T::zero()) || omega.to_f64_lossy().is_infinite() || rs.value <= T::zero() {
        return Err(Error::InvalidParameters("robust-stability peak must lie at a finite nonzero frequency".into()));
    }
    let m = w1t.at(omega)?;
    // Top singular pair from the Hermitian eigenproblem of Mᴴ M.
    let mhm = m.adjoint() * &m;
    let eig = mhm.clone().symmetric_eigen();
    let mut idx = 0;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[idx] {
            idx = i;
        }
    }
    let v = eig.eigenvectors.column(idx).into_owned();
    let mv = &m * &v;
    let gamma = mv.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
    let u = mv.map(|z| z / Complex::new(gamma, T::zero()));
    let p = g.outputs();
    // Δ(jω₀) = −v uᴴ / γ, so I + Δ M is singular at ω₀.
    let mut delta: Option<StateSpaceModel<T>> = None;
    let mut rows = Vec::new();
    for i in 0..p {
        let mut row: Option<StateSpaceModel<T>> = None;
        for j in 0..p {
            let c = -(v[i] * u[j].conj()) * Complex::new(scale / gamma, T::zero());
            let e = interpolating_all_pass(c, omega).to_ss();
            row = Some(match row {
                None => e,
                Some(r) => horizontal(&r, &e)?,
            });
        }
        rows.push(row.expect("p >= 1"));
    }
    for r in rows {
        delta = Some(match delta {
            None => r,
            Some(d) => vertical(&d, &r)?,
        });
    }
    let delta = delta.expect("p >= 1");
    let delta_norm = hinf_norm(&delta)?.value;
    let gp = perturb(g, w1, &delta)?;
    let cl = closed_loop(&gp, k)?;
    let abscissa = cl.spectral_abscissa()?;
    Ok(DestabilizingWitness { delta, delta_norm, scale, omega, closed_loop_abscissa: abscissa })
}

fn horizontal<T: Real>(a: &StateSpaceModel<T>, b: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    // [A B] = diag(A, B) followed by summing outputs.
    let d = crate::systems::diagonal(a, b)?;
    let p = a.outputs();
    let mut sum = DMatrix::zeros(p, 2 * p);
    for i in 0..p {
        sum[(i, i)] = T::one();
        sum[(i, p + i)] = T::one();
    }
    series(&d, &StateSpaceModel::static_gain(sum))
}

fn vertical<T: Real>(a: &StateSpaceModel<T>, b: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    // [A; B] = diag(A, B) fed by a duplicated input.
    let d = crate::systems::diagonal(a, b)?;
    let m = a.inputs();
    let mut dup = DMatrix::zeros(2 * m, m);
    for i in 0..m {
        dup[(i, i)] = T::one();
        dup[(m + i, i)] = T::one();
    }
    series(&StateSpaceModel::static_gain(dup), &d)
}
