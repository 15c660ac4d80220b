use std::io::{self, Write};

use rayon::prelude::*;

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::numerics::{svd_values, ComplexMatrix, Tolerances};
use crate::scalar::{hz_to_rad, rad_to_hz, Real};

/// Logarithmically spaced angular frequencies between two bounds in hertz, endpoints included.
pub fn log_grid_hz<T: Real>(f_min_hz: f64, f_max_hz: f64, per_decade: usize) -> Result<Vec<T>> {
    if !(f_min_hz > 0.0 && f_max_hz > f_min_hz && f_max_hz.is_finite()) || per_decade == 0 {
        return Err(Error::InvalidGrid("log grid needs 0 < f_min < f_max and a positive density"));
    }
    let decades = (f_max_hz / f_min_hz).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    let (l0, l1) = (f_min_hz.log10(), f_max_hz.log10());
    Ok((0..=steps)
        .map(|i| {
            let f = 10f64.powf(l0 + (l1 - l0) * i as f64 / steps as f64);
            hz_to_rad(T::lit(f))
        })
        .collect())
}

/// 0.1 Hz to 1 kHz at 400 points per decade, in rad/s.
pub fn default_grid<T: Real>() -> Vec<T> {
    log_grid_hz(0.1, 1000.0, 400).expect("static grid is valid")
}

fn validate_grid<T: Real>(omega: &[T]) -> Result<()> {
    if omega.is_empty() {
        return Err(Error::InvalidGrid("empty"));
    }
    if omega.iter().any(|w| !w.finite() || *w < T::zero()) {
        return Err(Error::InvalidGrid("frequencies must be finite and nonnegative"));
    }
    if omega.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidGrid("frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Sampled frequency response on an angular-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse<T: Real> {
    omega: Vec<T>,
    values: Vec<ComplexMatrix<T>>,
}

impl<T: Real> FrequencyResponse<T> {
    pub fn new(omega: Vec<T>, values: Vec<ComplexMatrix<T>>) -> Result<Self> {
        validate_grid(&omega)?;
        if values.len() != omega.len() {
            return Err(crate::error::dim_err("frequency response samples", omega.len(), values.len()));
        }
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::InvalidParameters("frequency response samples differ in shape".into()));
        }
        Ok(Self { omega, values })
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn values(&self) -> &[ComplexMatrix<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn frequency_hz(&self) -> Vec<T> {
        self.omega.iter().map(|&w| rad_to_hz(w)).collect()
    }

    /// Writes `#`-prefixed header lines, a column-name line, then one row per
    /// frequency: `frequency_hz` followed by real and imaginary parts in row-major order.
    pub fn write_columnar(&self, out: &mut dyn Write, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let (p, m) = self.values[0].shape();
        let mut names = vec!["frequency_hz".to_string()];
        for i in 1..=p {
            for j in 1..=m {
                names.push(format!("re_{i}{j}"));
                names.push(format!("im_{i}{j}"));
            }
        }
        writeln!(out, "{}", names.join(" "))?;
        for (w, g) in self.omega.iter().zip(&self.values) {
            write!(out, "{:.12e}", rad_to_hz(*w).to_f64_lossy())?;
            for i in 0..p {
                for j in 0..m {
                    let z = g[(i, j)];
                    write!(out, " {:.12e} {:.12e}", z.re.to_f64_lossy(), z.im.to_f64_lossy())?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Evaluates `sys` at every grid point; samples are computed in parallel and returned in grid order.
pub fn frequency_response<T: Real>(sys: &StateSpaceModel<T>, omega: &[T]) -> Result<FrequencyResponse<T>> {
    validate_grid(omega)?;
    let values = omega.par_iter().map(|&w| sys.at(w)).collect::<Result<Vec<_>>>()?;
    FrequencyResponse::new(omega.to_vec(), values)
}

/// Singular values (descending) of every sample.
pub fn sigma_envelope<T: Real>(fr: &FrequencyResponse<T>) -> Result<Vec<Vec<T>>> {
    let tol = Tolerances::default();
    fr.values().par_iter().map(|g| svd_values(g, &tol)).collect()
}

/// Location and value of a maximum over frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T: Real> {
    pub value: T,
    /// rad/s; infinite when the supremum is attained as ω → ∞.
    pub omega: T,
}

/// Maximizes `f` over a grid, then refines by golden-section search in
/// `log ω` between the neighbours of the best sample.
pub fn grid_peak<T: Real, F>(omega: &[T], f: F, refine_iters: usize) -> Result<Peak<T>>
where
    F: Fn(T) -> Result<T> + Sync,
{
    validate_grid(omega)?;
    let samples = omega.par_iter().map(|&w| f(w)).collect::<Result<Vec<T>>>()?;
    let mut k = 0;
    for (i, v) in samples.iter().enumerate() {
        if *v > samples[k] {
            k = i;
        }
    }
    let mut best = Peak { value: samples[k], omega: omega[k] };
    if k == 0 || k + 1 == omega.len() || omega[k - 1] <= T::zero() || refine_iters == 0 {
        return Ok(best);
    }
    let ratio = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let (mut lo, mut hi) = (omega[k - 1].ln(), omega[k + 1].ln());
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    for _ in 0..refine_iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1.exp())?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2.exp())?;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.value {
            best = Peak { value: v, omega: x.exp() };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfOptions {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub per_decade: usize,
    pub refine_iters: usize,
}

impl Default for HinfOptions {
    fn default() -> Self {
        Self { f_min_hz: 1e-3, f_max_hz: 1e5, per_decade: 400, refine_iters: 60 }
    }
}

pub fn hinf_norm<T: Real>(sys: &StateSpaceModel<T>) -> Result<Peak<T>> {
    hinf_norm_with(sys, &HinfOptions::default())
}

/// `sup_ω σ̄(G(jω))` of a stable system, with DC and ω → ∞ as extra candidates.
pub fn hinf_norm_with<T: Real>(sys: &StateSpaceModel<T>, opts: &HinfOptions) -> Result<Peak<T>> {
    if sys.order() > 0 {
        let abscissa = sys.spectral_abscissa()?;
        if abscissa >= T::zero() {
            return Err(Error::UnstableSystem { max_real: abscissa.to_f64_lossy() });
        }
    }
    let tol = Tolerances::default();
    let sigma_max = |w: T| -> Result<T> { Ok(svd_values(&sys.at(w)?, &tol)?.first().copied().unwrap_or(T::zero())) };
    let grid = log_grid_hz::<T>(opts.f_min_hz, opts.f_max_hz, opts.per_decade)?;
    let mut best = grid_peak(&grid, sigma_max, opts.refine_iters)?;
    let dc = sigma_max(T::zero())?;
    if dc > best.value {
        best = Peak { value: dc, omega: T::zero() };
    }
    let inf = svd_values(&crate::numerics::to_complex(sys.d()), &tol)?.first().copied().unwrap_or(T::zero());
    if inf > best.value {
        best = Peak { value: inf, omega: T::lit(f64::INFINITY) };
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::RationalTransferFunction;

    #[test]
    fn default_grid_density() {
        let g = default_grid::<f64>();
        assert_eq!(g.len(), 1601);
        assert!((rad_to_hz(g[0]) - 0.1).abs() < 1e-12);
        assert!((rad_to_hz(g[1600]) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn resonant_peak() {
        // ωn = 10, ζ = 0.05: peak 1/(2ζ√(1−ζ²)) at ωn√(1−2ζ²).
        let z: f64 = 0.05;
        let tf = RationalTransferFunction::new(vec![100.0], vec![1.0, 2.0 * z * 10.0, 100.0]).unwrap();
        let p = hinf_norm(&tf.to_ss()).unwrap();
        let expect = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        assert!((p.value - expect).abs() < 1e-8 * expect);
        assert!((p.omega - 10.0 * (1.0 - 2.0 * z * z).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn biproper_peak_at_infinity() {
        let tf = RationalTransferFunction::<f64>::new(vec![2.0, 1.0], vec![1.0, 1.0]).unwrap();
        let p = hinf_norm(&tf.to_ss()).unwrap();
        assert!((p.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_rejected() {
        let tf = RationalTransferFunction::new(vec![1.0], vec![1.0, -1.0]).unwrap();
        assert!(matches!(hinf_norm(&tf.to_ss()), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn columnar_layout() {
        let tf = RationalTransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let fr = frequency_response(&tf.to_ss(), &[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        fr.write_columnar(&mut buf, &["config_hash abc".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash abc");
        assert_eq!(lines[1], "frequency_hz re_11 im_11");
        assert_eq!(lines[2].split_whitespace().count(), 3);
    }

    #[test]
    fn rejects_decreasing_grid() {
        let tf = RationalTransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(frequency_response(&tf.to_ss(), &[2.0, 1.0]), Err(Error::InvalidGrid(_))));
    }
}
