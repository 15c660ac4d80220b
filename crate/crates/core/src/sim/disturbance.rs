use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{hz_to_rad, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    Sinusoid,
    Multisine,
    BandLimitedNoise,
    /// Multisine plus band-limited noise.
    Composite,
}

/// One frequency line shared by all channels, with per-channel amplitude (rad/s) and phase (rad).
#[derive(Debug, Clone, PartialEq)]
pub struct Tone<T: Real> {
    pub freq_hz: T,
    pub amplitude: Vec<T>,
    pub phase: Vec<T>,
}

/// Output-rate disturbance `d(t) = Σ aᵢ sin(2π fᵢ t + φᵢ)` per channel.
///
/// Band-limited noise is realized as a random-phase multisine with a flat
/// amplitude spectrum, so every profile is deterministic given its seed and
/// has closed-form values and time integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceProfile<T: Real> {
    pub kind: DisturbanceKind,
    pub channels: usize,
    pub tones: Vec<Tone<T>>,
}

impl<T: Real> DisturbanceProfile<T> {
    pub fn zero(channels: usize) -> Self {
        Self { kind: DisturbanceKind::Multisine, channels, tones: Vec::new() }
    }

    /// Single sinusoid on one channel.
    pub fn sinusoid(channels: usize, channel: usize, freq_hz: T, amplitude: T) -> Result<Self> {
        if channel >= channels {
            return Err(Error::InvalidParameters(format!("channel {channel} out of range for {channels} channels")));
        }
        let mut amp = vec![T::zero(); channels];
        amp[channel] = amplitude;
        let p = Self {
            kind: DisturbanceKind::Sinusoid,
            channels,
            tones: vec![Tone { freq_hz, amplitude: amp, phase: vec![T::zero(); channels] }],
        };
        p.validate()?;
        Ok(p)
    }

    /// Same tones on every channel, zero phase.
    pub fn multisine(channels: usize, freqs_hz: &[T], amplitudes: &[T]) -> Result<Self> {
        if freqs_hz.len() != amplitudes.len() {
            return Err(Error::InvalidParameters("multisine frequencies and amplitudes differ in length".into()));
        }
        let tones = freqs_hz
            .iter()
            .zip(amplitudes)
            .map(|(&f, &a)| Tone { freq_hz: f, amplitude: vec![a; channels], phase: vec![T::zero(); channels] })
            .collect();
        let p = Self { kind: DisturbanceKind::Multisine, channels, tones };
        p.validate()?;
        Ok(p)
    }

    /// Flat-spectrum noise between `f_lo` and `f_hi` with total RMS `rms`
    /// per channel; tones every `spacing_hz`, independent random phases.
    pub fn band_limited_noise(channels: usize, f_lo: T, f_hi: T, spacing_hz: T, rms: T, seed: u64) -> Result<Self> {
        if !(f_lo > T::zero() && f_hi > f_lo && spacing_hz > T::zero() && rms >= T::zero()) {
            return Err(Error::InvalidParameters("noise band needs 0 < f_lo < f_hi and positive spacing".into()));
        }
        let count = ((f_hi - f_lo) / spacing_hz).floor().to_f64_lossy() as usize + 1;
        // RMS of a sum of N sines of amplitude a is a·√(N/2).
        let amp = rms * (T::lit(2.0) / T::from_count(count)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tones = (0..count)
            .map(|i| Tone {
                freq_hz: f_lo + spacing_hz * T::from_count(i),
                amplitude: vec![amp; channels],
                phase: (0..channels).map(|_| T::lit(rng.random_range(0.0..std::f64::consts::TAU))).collect(),
            })
            .collect();
        Ok(Self { kind: DisturbanceKind::BandLimitedNoise, channels, tones })
    }

    /// Tones at 0.5, 1, 2, 5 and 10 Hz with amplitude `0.02·(0.5/f)` rad/s,
    /// plus 0.5–20 Hz noise carrying 10% of the multisine power.
    pub fn default_profile(channels: usize, seed: u64) -> Result<Self> {
        let freqs: Vec<T> = [0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|&f| T::lit(f)).collect();
        let amps: Vec<T> = [0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|&f| T::lit(0.02 * 0.5 / f)).collect();
        let ms = Self::multisine(channels, &freqs, &amps)?;
        let power = amps.iter().fold(T::zero(), |acc, &a| acc + a * a / T::lit(2.0));
        let noise_rms = (power * T::lit(0.1)).sqrt();
        let noise = Self::band_limited_noise(channels, T::lit(0.5), T::lit(20.0), T::lit(0.1), noise_rms, seed)?;
        Ok(ms.combined(&noise))
    }

    pub fn combined(&self, other: &Self) -> Self {
        let mut tones = self.tones.clone();
        tones.extend(other.tones.iter().cloned());
        Self { kind: DisturbanceKind::Composite, channels: self.channels, tones }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.tones {
            if !(t.freq_hz > T::zero()) || t.amplitude.len() != self.channels || t.phase.len() != self.channels {
                return Err(Error::InvalidParameters("tones need positive frequency and one entry per channel".into()));
            }
        }
        Ok(())
    }

    /// `d(t)`.
    pub fn value(&self, t: T) -> DVector<T> {
        let mut d = DVector::zeros(self.channels);
        for tone in &self.tones {
            let wt = hz_to_rad(tone.freq_hz) * t;
            for ch in 0..self.channels {
                d[ch] += tone.amplitude[ch] * (wt + tone.phase[ch]).sin();
            }
        }
        d
    }

    /// `∫₀ᵗ d(τ) dτ`.
    pub fn integral(&self, t: T) -> DVector<T> {
        let mut d = DVector::zeros(self.channels);
        for tone in &self.tones {
            let w = hz_to_rad(tone.freq_hz);
            for ch in 0..self.channels {
                let ph = tone.phase[ch];
                d[ch] += tone.amplitude[ch] / w * (ph.cos() - (w * t + ph).cos());
            }
        }
        d
    }

    /// Mean-square value per channel (tones at distinct frequencies).
    pub fn mean_square(&self) -> Vec<T> {
        (0..self.channels)
            .map(|ch| self.tones.iter().fold(T::zero(), |acc, t| acc + t.amplitude[ch] * t.amplitude[ch] / T::lit(2.0)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_matches_quadrature() {
        let p = DisturbanceProfile::<f64>::default_profile(2, 3).unwrap();
        let (t_end, n) = (0.73, 20000);
        let h = t_end / n as f64;
        let mut acc = DVector::zeros(2);
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            acc += p.value(t) * h;
        }
        assert!((acc - p.integral(t_end)).amax() < 1e-8);
    }

    #[test]
    fn noise_rms_as_requested() {
        let p = DisturbanceProfile::<f64>::band_limited_noise(1, 0.5, 20.0, 0.1, 0.3, 9).unwrap();
        assert!((p.mean_square()[0].sqrt() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn seeded_profiles_repeat() {
        let a = DisturbanceProfile::<f64>::default_profile(2, 11).unwrap();
        let b = DisturbanceProfile::<f64>::default_profile(2, 11).unwrap();
        let c = DisturbanceProfile::<f64>::default_profile(2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
