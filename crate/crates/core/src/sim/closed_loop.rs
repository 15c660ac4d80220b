use std::io::{self, Write};

use nalgebra::{Complex, DMatrix, DVector};

use super::disturbance::DisturbanceProfile;
use crate::error::{dim_err, Error, Result};
use crate::numerics::{eigenvalues, ComplexMatrix, Tolerances};
use crate::scalar::{cabs, hz_to_rad, Real};
use crate::systems::{DiscreteStateSpaceModel, StateSpaceModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// RK4 steps per controller period.
    pub substeps: usize,
    /// Magnitude beyond which a state counts as diverged.
    pub blowup: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { substeps: 10, blowup: 1e12 }
    }
}

/// Samples of the loop at the controller instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T: Real> {
    pub time: Vec<T>,
    /// Line-of-sight rate `w = G u + d` (rad/s).
    pub rate: Vec<DVector<T>>,
    /// Controller output (A).
    pub control: Vec<DVector<T>>,
    /// Injected output disturbance (rad/s).
    pub disturbance: Vec<DVector<T>>,
    /// Integrated line-of-sight angle (rad).
    pub angle: Vec<DVector<T>>,
}

impl<T: Real> SimulationTrace<T> {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Columns `time_s`, then `w_i`, `u_i`, `d_i`, `angle_i` for each axis.
    pub fn write_columnar(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let p = self.rate.first().map_or(0, |v| v.len());
        let m = self.control.first().map_or(0, |v| v.len());
        let mut names = vec!["time_s".to_string()];
        names.extend((1..=p).map(|i| format!("w_{i}")));
        names.extend((1..=m).map(|i| format!("u_{i}")));
        names.extend((1..=p).map(|i| format!("d_{i}")));
        names.extend((1..=p).map(|i| format!("angle_{i}")));
        writeln!(out, "{}", names.join(" "))?;
        for k in 0..self.len() {
            write!(out, "{:.9e}", self.time[k].to_f64_lossy())?;
            for v in [&self.rate[k], &self.control[k], &self.disturbance[k], &self.angle[k]] {
                for x in v.iter() {
                    write!(out, " {:.9e}", x.to_f64_lossy())?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Plant propagated over one controller period by `substeps` classical RK4
/// steps with the input held. State is `[x; θ]` where `θ̇ = C x` integrates
/// the plant's rate output. Returns `(Φ, Γ)` with `z⁺ = Φ z + Γ u`.
fn period_map<T: Real>(plant: &StateSpaceModel<T>, ts: T, substeps: usize) -> (DMatrix<T>, DMatrix<T>) {
    let (n, m, p) = (plant.order(), plant.inputs(), plant.outputs());
    let nz = n + p;
    let mut a = DMatrix::zeros(nz, nz);
    a.view_mut((0, 0), (n, n)).copy_from(plant.a());
    a.view_mut((n, 0), (p, n)).copy_from(plant.c());
    let mut b = DMatrix::zeros(nz, m);
    b.view_mut((0, 0), (n, m)).copy_from(plant.b());
    let h = ts / T::from_count(substeps);
    let ha = &a * h;
    let eye = DMatrix::<T>::identity(nz, nz);
    let ha2 = &ha * &ha;
    let ha3 = &ha2 * &ha;
    let ha4 = &ha3 * &ha;
    // One RK4 step on ż = A z + B u with constant u.
    let step_phi = &eye + &ha + &ha2 / T::lit(2.0) + &ha3 / T::lit(6.0) + &ha4 / T::lit(24.0);
    let step_gam = (&eye + &ha / T::lit(2.0) + &ha2 / T::lit(6.0) + &ha3 / T::lit(24.0)) * &b * h;
    let mut phi = eye.clone();
    let mut gam = DMatrix::zeros(nz, m);
    for _ in 0..substeps {
        gam = &step_phi * gam + &step_gam;
        phi = &step_phi * phi;
    }
    (phi, gam)
}

fn check_loop<T: Real>(plant: &StateSpaceModel<T>, controller: &DiscreteStateSpaceModel<T>) -> Result<()> {
    if controller.inputs() != plant.outputs() || controller.outputs() != plant.inputs() {
        return Err(dim_err(
            "sampled loop",
            format!("controller {}x{}", plant.inputs(), plant.outputs()),
            format!("{}x{}", controller.outputs(), controller.inputs()),
        ));
    }
    if plant.d().iter().any(|&x| x != T::zero()) {
        return Err(Error::InvalidParameters("plant must be strictly proper for the sampled loop".into()));
    }
    Ok(())
}

/// Spectral radius of the sampled closed loop (plant and controller states, angle excluded).
pub fn sampled_loop_spectral_radius<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &DiscreteStateSpaceModel<T>,
    opts: &SimulationOptions,
) -> Result<T> {
    check_loop(plant, controller)?;
    let (phi, gam) = period_map(plant, controller.ts(), opts.substeps);
    let (n, nc) = (plant.order(), controller.order());
    let phi_x = phi.view((0, 0), (n, n)).into_owned();
    let gam_x = gam.rows(0, n).into_owned();
    let c = plant.c();
    let mut m = DMatrix::zeros(n + nc, n + nc);
    m.view_mut((0, 0), (n, n)).copy_from(&(&phi_x - &gam_x * controller.d() * c));
    m.view_mut((0, n), (n, nc)).copy_from(&(-(&gam_x * controller.c())));
    m.view_mut((n, 0), (nc, n)).copy_from(&(controller.b() * c));
    m.view_mut((n, n), (nc, nc)).copy_from(controller.a());
    let ev = eigenvalues(&m, &Tolerances::default())?;
    Ok(ev.into_iter().map(cabs).fold(T::zero(), |a, b| a.max(b)))
}

/// Simulates the plant in continuous time against a discrete controller
/// `u_k = −K(y_k)` with zero-order hold, the disturbance added to the plant
/// output before measurement.
pub fn simulate_closed_loop<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &DiscreteStateSpaceModel<T>,
    dist: &DisturbanceProfile<T>,
    duration: T,
    opts: &SimulationOptions,
) -> Result<SimulationTrace<T>> {
    check_loop(plant, controller)?;
    if dist.channels != plant.outputs() {
        return Err(dim_err("disturbance channels", plant.outputs(), dist.channels));
    }
    let ts = controller.ts();
    let steps = (duration / ts).round().to_f64_lossy() as usize;
    if steps < 100 {
        return Err(Error::InvalidParameters(format!("duration must cover at least 100 controller periods, got {steps}")));
    }
    let (phi, gam) = period_map(plant, ts, opts.substeps);
    let (n, p) = (plant.order(), plant.outputs());
    let limit = T::lit(opts.blowup);
    let mut z = DVector::zeros(n + p);
    let mut xc = DVector::zeros(controller.order());
    let mut trace = SimulationTrace {
        time: Vec::with_capacity(steps + 1),
        rate: Vec::with_capacity(steps + 1),
        control: Vec::with_capacity(steps + 1),
        disturbance: Vec::with_capacity(steps + 1),
        angle: Vec::with_capacity(steps + 1),
    };
    let c = plant.c();
    for k in 0..=steps {
        let t = ts * T::from_count(k);
        if z.iter().chain(xc.iter()).any(|v: &T| !(v.abs() <= limit)) {
            return Err(Error::NumericalBlowup { time: t.to_f64_lossy() });
        }
        let x = z.rows(0, n);
        let d = dist.value(t);
        let w = c * x + &d;
        let angle: DVector<T> = z.rows(n, p) + dist.integral(t);
        let u = -(controller.c() * &xc + controller.d() * &w);
        xc = controller.a() * &xc + controller.b() * &w;
        z = &phi * &z + &gam * &u;
        trace.time.push(t);
        trace.rate.push(w);
        trace.control.push(u);
        trace.disturbance.push(d);
        trace.angle.push(angle);
    }
    Ok(trace)
}

/// Per-axis RMS of the angle after `settle` seconds, mean removed, in µrad.
pub fn rms_los_error<T: Real>(trace: &SimulationTrace<T>, settle: T) -> Result<Vec<T>> {
    let idx: Vec<usize> = (0..trace.len()).filter(|&k| trace.time[k] >= settle).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidParameters("settling time leaves fewer than two samples".into()));
    }
    let p = trace.angle[0].len();
    let count = T::from_count(idx.len());
    Ok((0..p)
        .map(|ch| {
            let mean = idx.iter().fold(T::zero(), |a, &k| a + trace.angle[k][ch]) / count;
            let ms = idx.iter().fold(T::zero(), |a, &k| {
                let e = trace.angle[k][ch] - mean;
                a + e * e
            }) / count;
            ms.sqrt() * T::lit(1e6)
        })
        .collect())
}

/// Output sensitivity of the sampled loop at ω, fundamental component:
/// `(I + G(jω) H(ω) K_d(e^{jωTs}))⁻¹` with the hold response
/// `H(ω) = e^{−jωTs/2} sin(ωTs/2)/(ωTs/2)`.
pub fn sampled_sensitivity<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &DiscreteStateSpaceModel<T>,
    omega: T,
) -> Result<ComplexMatrix<T>> {
    let half = omega * controller.ts() / T::lit(2.0);
    let sinc = if half == T::zero() { T::one() } else { half.sin() / half };
    let hold = Complex::new(half.cos(), -half.sin()) * sinc;
    let l = plant.at(omega)? * controller.at(omega)? * hold;
    let p = plant.outputs();
    let ipl = DMatrix::<Complex<T>>::identity(p, p) + l;
    ipl.try_inverse().ok_or(Error::SingularAtFrequency { omega: omega.to_f64_lossy() })
}

/// RMS angle predicted from the sampled-loop sensitivity, in µrad:
/// each tone contributes `|S(jω) d̂ / (jω)|² / 2`.
pub fn rms_los_oracle<T: Real>(
    plant: &StateSpaceModel<T>,
    controller: &DiscreteStateSpaceModel<T>,
    dist: &DisturbanceProfile<T>,
) -> Result<Vec<T>> {
    // Tones sharing a frequency add coherently.
    let mut lines: Vec<(T, DVector<Complex<T>>)> = Vec::new();
    for tone in &dist.tones {
        let phasor = DVector::from_iterator(
            dist.channels,
            (0..dist.channels).map(|ch| Complex::new(tone.amplitude[ch] * tone.phase[ch].cos(), tone.amplitude[ch] * tone.phase[ch].sin())),
        );
        match lines.iter_mut().find(|(f, _)| (*f - tone.freq_hz).abs() <= T::lit(1e-12) * tone.freq_hz) {
            Some((_, acc)) => *acc += phasor,
            None => lines.push((tone.freq_hz, phasor)),
        }
    }
    let mut ms = vec![T::zero(); dist.channels];
    for (f, d) in &lines {
        let w = hz_to_rad(*f);
        let s = sampled_sensitivity(plant, controller, w)?;
        let angle = s * d / Complex::new(T::zero(), w);
        for ch in 0..dist.channels {
            ms[ch] += angle[ch].norm_sqr() / T::lit(2.0);
        }
    }
    Ok(ms.into_iter().map(|v| v.sqrt() * T::lit(1e6)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::bilinear_discretize;
    use crate::systems::RationalTransferFunction;

    fn first_order_loop() -> (StateSpaceModel<f64>, DiscreteStateSpaceModel<f64>) {
        let g = RationalTransferFunction::new(vec![50.0], vec![1.0, 5.0]).unwrap().to_ss();
        let k = bilinear_discretize(&StateSpaceModel::static_gain(DMatrix::from_element(1, 1, 2.0)), 1e-3).unwrap();
        (g, k)
    }

    #[test]
    fn zero_disturbance_gives_zero_trace() {
        let (g, k) = first_order_loop();
        let tr = simulate_closed_loop(&g, &k, &DisturbanceProfile::zero(1), 0.5, &SimulationOptions::default()).unwrap();
        assert!(tr.rate.iter().chain(tr.angle.iter()).all(|v| v.amax() == 0.0));
        assert_eq!(rms_los_error(&tr, 0.1).unwrap()[0], 0.0);
    }

    #[test]
    fn rk4_period_map_matches_exact_decay() {
        let g = RationalTransferFunction::new(vec![1.0], vec![1.0, 5.0]).unwrap().to_ss();
        let (phi, _) = period_map(&g, 1e-3, 10);
        assert!((phi[(0, 0)] - (-5e-3f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn unstable_loop_blows_up() {
        // Positive feedback u = +w around an unstable pole.
        let g = RationalTransferFunction::new(vec![1.0], vec![1.0, -5.0]).unwrap().to_ss();
        let k = bilinear_discretize(&StateSpaceModel::static_gain(DMatrix::from_element(1, 1, -1.0)), 1e-3).unwrap();
        let dist = DisturbanceProfile::sinusoid(1, 0, 1.0, 1.0).unwrap();
        let err = simulate_closed_loop(&g, &k, &dist, 20.0, &SimulationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NumericalBlowup { .. }));
    }

    #[test]
    fn steady_sinusoid_matches_sampled_sensitivity() {
        let (g, k) = first_order_loop();
        let f = 3.0;
        let dist = DisturbanceProfile::sinusoid(1, 0, f, 1.0).unwrap();
        let tr = simulate_closed_loop(&g, &k, &dist, 4.0, &SimulationOptions::default()).unwrap();
        let s = sampled_sensitivity(&g, &k, hz_to_rad(f)).unwrap()[(0, 0)];
        let peak = tr.time.iter().zip(&tr.rate).filter(|(t, _)| **t > 2.0).map(|(_, w)| w[0].abs()).fold(0.0, f64::max);
        assert!((peak - s.norm()).abs() < 0.01 * s.norm());
    }
}
