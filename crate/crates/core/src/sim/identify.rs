use std::io::{self, Write};

use nalgebra::{Complex, DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use super::closed_loop::{sampled_loop_spectral_radius, simulate_closed_loop, SimulationOptions};
use super::disturbance::DisturbanceProfile;
use crate::error::{Error, Result};
use crate::gimbal::GimbalAxisParams;
use crate::numerics::{svd_values, ComplexMatrix, Tolerances};
use crate::scalar::{hz_to_rad, Real};
use crate::systems::{DiscreteStateSpaceModel, StateSpaceModel};

/// Output sensitivity measured one disturbance channel at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedResponse<T: Real> {
    pub freq_hz: Vec<T>,
    pub values: Vec<ComplexMatrix<T>>,
    /// Descending singular values of each estimate.
    pub sigma: Vec<Vec<T>>,
}

impl<T: Real> IdentifiedResponse<T> {
    /// Columns `frequency_hz`, real/imaginary parts row-major, then `sigma_i`.
    pub fn write_columnar(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let (p, m) = self.values.first().map_or((0, 0), |v| v.shape());
        let mut names = vec!["frequency_hz".to_string()];
        for i in 1..=p {
            for j in 1..=m {
                names.push(format!("re_{i}{j}"));
                names.push(format!("im_{i}{j}"));
            }
        }
        names.extend((1..=p.min(m)).map(|i| format!("sigma_{i}")));
        writeln!(out, "{}", names.join(" "))?;
        for k in 0..self.freq_hz.len() {
            write!(out, "{:.12e}", self.freq_hz[k].to_f64_lossy())?;
            for i in 0..p {
                for j in 0..m {
                    let z = self.values[k][(i, j)];
                    write!(out, " {:.12e} {:.12e}", z.re.to_f64_lossy(), z.im.to_f64_lossy())?;
                }
            }
            for s in &self.sigma[k] {
                write!(out, " {:.12e}", s.to_f64_lossy())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Complex amplitude of the `ω` component of `samples`, by least-squares
/// correlation against `1`, `cos ωt` and `sin ωt` over the given instants.
fn correlate<T: Real>(time: &[T], samples: &[T], omega: T) -> Complex<T> {
    let mut g = Matrix3::<T>::zeros();
    let mut r = Vector3::<T>::zeros();
    for (&t, &y) in time.iter().zip(samples) {
        let phi = Vector3::new(T::one(), (omega * t).cos(), (omega * t).sin());
        g += phi * phi.transpose();
        r += phi * y;
    }
    let coef = g.lu().solve(&r).unwrap_or_else(Vector3::zeros);
    // α cos ωt + β sin ωt = Im((β + jα) e^{jωt}).
    Complex::new(coef[2], coef[1])
}

/// Injects `amplitude·sin(2πft)` on each disturbance channel in turn, drops
/// the first half of `cycles`, and correlates every output with the
/// excitation frequency. Column `j` of each estimate comes from the run on channel `j`.
pub fn swept_sine_identify<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &DiscreteStateSpaceModel<T>,
    grid_hz: &[T],
    amplitude: T,
    cycles: usize,
    opts: &SimulationOptions,
) -> Result<IdentifiedResponse<T>> {
    let steady = cycles - cycles / 2;
    if steady < 10 {
        return Err(Error::InsufficientCycles { steady });
    }
    if grid_hz.is_empty() || grid_hz.iter().any(|f| !(*f > T::zero())) || grid_hz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("identification frequencies must be positive and ascending"));
    }
    if sampled_loop_spectral_radius(plant, controller, opts)? >= T::one() {
        return Err(Error::UnstableLoop);
    }
    let p = plant.outputs();
    let jobs: Vec<(usize, usize)> = (0..grid_hz.len()).flat_map(|k| (0..p).map(move |j| (k, j))).collect();
    let columns = jobs
        .par_iter()
        .map(|&(k, j)| {
            let f = grid_hz[k];
            let omega = hz_to_rad(f);
            let dist = DisturbanceProfile::sinusoid(p, j, f, amplitude)?;
            let duration = T::from_count(cycles) / f;
            let trace = simulate_closed_loop(plant, controller, &dist, duration, opts)?;
            let start = T::from_count(cycles / 2) / f;
            let idx: Vec<usize> = (0..trace.len()).filter(|&i| trace.time[i] >= start).collect();
            let time: Vec<T> = idx.iter().map(|&i| trace.time[i]).collect();
            let col: Vec<Complex<T>> = (0..p)
                .map(|i| {
                    let y: Vec<T> = idx.iter().map(|&s| trace.rate[s][i]).collect();
                    correlate(&time, &y, omega) / Complex::new(amplitude, T::zero())
                })
                .collect();
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = Tolerances::default();
    let mut values = Vec::with_capacity(grid_hz.len());
    let mut sigma = Vec::with_capacity(grid_hz.len());
    for k in 0..grid_hz.len() {
        let m = DMatrix::from_fn(p, p, |i, j| columns[k * p + j][i]);
        sigma.push(svd_values(&m, &tol)?);
        values.push(m);
    }
    Ok(IdentifiedResponse { freq_hz: grid_hz.to_vec(), values, sigma })
}

/// Deviation of the first-order lag from the Padé delay factor at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModelDeviation<T: Real> {
    /// `|lag| / |Padé|`.
    pub magnitude_ratio: T,
    /// `∠lag − ∠Padé` in degrees, wrapped to (−180, 180].
    pub phase_difference_deg: T,
}

pub fn compare_delay_models<T: Real>(d: T, f_hz: T) -> Result<DelayModelDeviation<T>> {
    if !(d > T::zero() && f_hz > T::zero()) {
        return Err(Error::InvalidParameters("delay and frequency must be positive".into()));
    }
    let p = GimbalAxisParams { d, ..GimbalAxisParams::<T>::azimuth() };
    let w = hz_to_rad(f_hz);
    let pade = p.pade().at(w);
    let lag = p.lag().at(w);
    let ratio = lag / pade;
    let deg = ratio.im.atan2(ratio.re) * T::lit(180.0) / T::pi();
    Ok(DelayModelDeviation { magnitude_ratio: ratio.re.hypot(ratio.im), phase_difference_deg: deg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_recovers_phasor_with_offset() {
        let w = 2.0 * std::f64::consts::PI * 7.3;
        let t: Vec<f64> = (0..997).map(|k| k as f64 * 5e-4).collect();
        let y: Vec<f64> = t.iter().map(|&t| 0.3 + 1.7 * (w * t + 0.4).sin()).collect();
        let z = correlate(&t, &y, w);
        assert!((z.norm() - 1.7).abs() < 1e-10);
        assert!((z.arg() - 0.4).abs() < 1e-10);
    }

    #[test]
    fn delay_models_agree_at_four_hz() {
        let dev = compare_delay_models(0.0045_f64, 4.0).unwrap();
        assert!((dev.magnitude_ratio - 1.0).abs() < 0.01);
        assert!(dev.phase_difference_deg.abs() < 1.0);
    }

    #[test]
    fn delay_models_diverge_at_two_hundred_hz() {
        let dev = compare_delay_models(0.0045_f64, 200.0).unwrap();
        assert!((dev.magnitude_ratio - 1.0).abs() > 0.05);
        let low = compare_delay_models(0.0045_f64, 1e-4).unwrap();
        assert!((low.magnitude_ratio - 1.0).abs() < 1e-9 && low.phase_difference_deg.abs() < 1e-6);
    }

    #[test]
    fn too_few_cycles_rejected() {
        let g = crate::systems::RationalTransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap().to_ss();
        let k = crate::reduction::bilinear_discretize(&StateSpaceModel::zero(1, 1), 1e-3).unwrap();
        let err = swept_sine_identify(&g, &k, &[1.0], 0.1, 18, &SimulationOptions::default()).unwrap_err();
        assert_eq!(err, Error::InsufficientCycles { steady: 9 });
    }
}
