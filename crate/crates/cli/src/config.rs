use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use ltr_core::design::{NoiseIntensities, SensitivityWeightParams};
use ltr_core::gimbal::{DelayModel, GimbalAxisParams};
use ltr_core::sim::{DisturbanceProfile, EstimationOptions, SimulationOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Complete run configuration. Every field has a default; a file only needs
/// `schema_version` plus whatever it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    /// Base seed; the disturbance, perturbation set and EKF noise use fixed offsets from it.
    pub seed: u64,
    /// Worker threads for parallel sections; 0 uses all cores.
    pub workers: usize,
    pub gimbal: GimbalConfig,
    pub weights: WeightConfig,
    pub design: DesignConfig,
    pub grid: GridConfig,
    pub simulation: SimulationConfig,
    pub disturbance: DisturbanceConfig,
    pub identification: IdentificationConfig,
    pub perturbation: PerturbationConfig,
    pub ekf: EkfConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub ka: f64,
    pub kt: f64,
    pub wg: f64,
    pub xi: f64,
    pub d: f64,
    pub j: f64,
    pub bv: f64,
}

impl From<GimbalAxisParams<f64>> for AxisConfig {
    fn from(p: GimbalAxisParams<f64>) -> Self {
        Self { ka: p.ka, kt: p.kt, wg: p.wg, xi: p.xi, d: p.d, j: p.j, bv: p.bv }
    }
}

impl AxisConfig {
    pub fn params(&self) -> GimbalAxisParams<f64> {
        GimbalAxisParams { ka: self.ka, kt: self.kt, wg: self.wg, xi: self.xi, d: self.d, j: self.j, bv: self.bv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayChoice {
    Pade,
    Lag,
    None,
}

impl From<DelayChoice> for DelayModel {
    fn from(d: DelayChoice) -> Self {
        match d {
            DelayChoice::Pade => DelayModel::Pade,
            DelayChoice::Lag => DelayModel::Lag,
            DelayChoice::None => DelayModel::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GimbalConfig {
    pub azimuth: AxisConfig,
    pub elevation: AxisConfig,
    /// Delay model used for design and analysis.
    pub delay: DelayChoice,
}

impl Default for GimbalConfig {
    fn default() -> Self {
        Self {
            azimuth: GimbalAxisParams::azimuth().into(),
            elevation: GimbalAxisParams::elevation().into(),
            delay: DelayChoice::Pade,
        }
    }
}

/// Second-order sensitivity weight; `wb_hz` is the bandwidth in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityWeightConfig {
    pub ms: f64,
    pub eps: f64,
    pub xi: f64,
    pub wb_hz: f64,
    pub scale: f64,
}

impl From<SensitivityWeightParams<f64>> for SensitivityWeightConfig {
    fn from(p: SensitivityWeightParams<f64>) -> Self {
        Self { ms: p.ms, eps: p.eps, xi: p.xi, wb_hz: p.wb / TAU, scale: p.scale }
    }
}

impl SensitivityWeightConfig {
    pub fn params(&self) -> SensitivityWeightParams<f64> {
        SensitivityWeightParams { ms: self.ms, eps: self.eps, xi: self.xi, wb: self.wb_hz * TAU, scale: self.scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    /// Weight that shapes the Kalman target loop.
    pub design: SensitivityWeightConfig,
    /// Weight used by the nominal and robust performance tests.
    pub performance: SensitivityWeightConfig,
    /// Multiplier on the measured uncertainty bound `W1`.
    pub uncertainty_scale: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            design: SensitivityWeightParams::design2().into(),
            performance: SensitivityWeightParams::design1().into(),
            uncertainty_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    /// Recovery sweep, strictly descending.
    pub rhos: Vec<f64>,
    /// Design carried into analysis, reduction and simulation.
    pub selected_rho: f64,
    pub reduced_order: usize,
    /// Scalar process noise, measurement level and measurement covariance (times I).
    pub process_noise: f64,
    pub measurement_level: f64,
    pub theta: f64,
    /// Band for the recovery error, Hz.
    pub recovery_band_hz: [f64; 2],
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            rhos: ltr_core::design::DEFAULT_RHOS.to_vec(),
            selected_rho: 1e-4,
            reduced_order: 12,
            process_noise: 1.0,
            measurement_level: 1.0,
            theta: 1.0,
            recovery_band_hz: [0.1, 100.0],
        }
    }
}

impl DesignConfig {
    pub fn noise(&self, p: usize) -> NoiseIntensities<f64> {
        let eye = DMatrix::<f64>::identity(p, p);
        NoiseIntensities { w: &eye * self.process_noise, v: &eye * self.measurement_level, theta_cov: &eye * self.theta }
    }
}

/// Logarithmic frequency grid in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub per_decade: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { f_min_hz: 0.1, f_max_hz: 1000.0, per_decade: 400 }
    }
}

impl GridConfig {
    /// Parses `fmin:fmax:per_decade`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::Config(format!("grid must be fmin:fmax:per_decade, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Self {
            f_min_hz: parts[0].trim().parse().map_err(|_| bad())?,
            f_max_hz: parts[1].trim().parse().map_err(|_| bad())?,
            per_decade: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }

    /// Grid in rad/s.
    pub fn omega(&self) -> Result<Vec<f64>, CliError> {
        Ok(ltr_core::systems::log_grid_hz(self.f_min_hz, self.f_max_hz, self.per_decade)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub sample_period: f64,
    pub duration: f64,
    pub settle: f64,
    pub substeps: usize,
    /// Every n-th sample is written to the trace file.
    pub trace_decimation: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { sample_period: 5e-4, duration: 30.0, settle: 2.0, substeps: 10, trace_decimation: 10 }
    }
}

impl SimulationConfig {
    pub fn options(&self) -> SimulationOptions {
        SimulationOptions { substeps: self.substeps, ..SimulationOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileChoice {
    /// Built-in multisine plus band-limited noise.
    Default,
    /// `tones_hz`/`amplitudes` plus optional noise.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceConfig {
    pub profile: ProfileChoice,
    pub tones_hz: Vec<f64>,
    /// Rate amplitudes (rad/s), one per tone, applied to both axes.
    pub amplitudes: Vec<f64>,
    pub noise_band_hz: [f64; 2],
    pub noise_spacing_hz: f64,
    /// RMS of the noise component per axis (rad/s); 0 disables it.
    pub noise_rms: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            profile: ProfileChoice::Default,
            tones_hz: vec![0.5, 1.0, 2.0, 5.0, 10.0],
            amplitudes: vec![0.02, 0.01, 0.005, 0.002, 0.001],
            noise_band_hz: [0.5, 20.0],
            noise_spacing_hz: 0.1,
            noise_rms: 0.0,
        }
    }
}

impl DisturbanceConfig {
    pub fn profile(&self, channels: usize, seed: u64) -> Result<DisturbanceProfile<f64>, CliError> {
        Ok(match self.profile {
            ProfileChoice::Default => DisturbanceProfile::default_profile(channels, seed)?,
            ProfileChoice::Custom => {
                let tones = DisturbanceProfile::multisine(channels, &self.tones_hz, &self.amplitudes)?;
                if self.noise_rms > 0.0 {
                    let [lo, hi] = self.noise_band_hz;
                    let noise =
                        DisturbanceProfile::band_limited_noise(channels, lo, hi, self.noise_spacing_hz, self.noise_rms, seed)?;
                    tones.combined(&noise)
                } else {
                    tones
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentificationConfig {
    pub grid: GridConfig,
    /// Swept-sine amplitude (rad/s).
    pub amplitude: f64,
    pub cycles: usize,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self { grid: GridConfig { f_min_hz: 1.0, f_max_hz: 100.0, per_decade: 10 }, amplitude: 0.01, cycles: 20 }
    }
}

impl IdentificationConfig {
    pub fn grid_hz(&self) -> Result<Vec<f64>, CliError> {
        Ok(self.grid.omega()?.into_iter().map(|w| w / TAU).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub count: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { count: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EkfConfig {
    pub dt: f64,
    pub duration: f64,
    pub excitation_hz: f64,
    pub amplitude: f64,
    pub meas_noise_std: f64,
    pub init_factor: f64,
    pub state_process_noise: f64,
    pub param_process_noise: f64,
    pub truth_substeps: usize,
    pub predict_substeps: usize,
    /// Every n-th filter step is written to the history file.
    pub history_decimation: usize,
}

impl Default for EkfConfig {
    fn default() -> Self {
        let o = EstimationOptions::<f64>::default();
        Self {
            dt: o.dt,
            duration: o.duration,
            excitation_hz: o.excitation_hz,
            amplitude: o.amplitude,
            meas_noise_std: o.meas_noise_std,
            init_factor: o.init_factor,
            state_process_noise: o.state_process_noise,
            param_process_noise: o.param_process_noise,
            truth_substeps: o.truth_substeps,
            predict_substeps: o.predict_substeps,
            history_decimation: 10,
        }
    }
}

impl EkfConfig {
    pub fn options(&self, seed: u64) -> EstimationOptions<f64> {
        EstimationOptions {
            dt: self.dt,
            duration: self.duration,
            excitation_hz: self.excitation_hz,
            amplitude: self.amplitude,
            meas_noise_std: self.meas_noise_std,
            init_factor: self.init_factor,
            state_process_noise: self.state_process_noise,
            param_process_noise: self.param_process_noise,
            truth_substeps: self.truth_substeps,
            predict_substeps: self.predict_substeps,
            seed,
        }
    }
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: PathBuf::from("ltr-out"),
            seed: 7,
            workers: 0,
            gimbal: GimbalConfig::default(),
            weights: WeightConfig::default(),
            design: DesignConfig::default(),
            grid: GridConfig::default(),
            simulation: SimulationConfig::default(),
            disturbance: DisturbanceConfig::default(),
            identification: IdentificationConfig::default(),
            perturbation: PerturbationConfig::default(),
            ekf: EkfConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub rhos: Option<Vec<f64>>,
    pub grid: Option<GridConfig>,
    pub workers: Option<usize>,
}

impl ProjectConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(rhos) = &o.rhos {
            self.design.rhos = rhos.clone();
            if !rhos.iter().any(|r| same_rho(*r, self.design.selected_rho)) {
                if let Some(last) = rhos.last() {
                    self.design.selected_rho = *last;
                }
            }
        }
        if let Some(grid) = o.grid {
            self.grid = grid;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: &str| Err(CliError::Config(m.to_string()));
        let d = &self.design;
        if d.rhos.is_empty() || d.rhos.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return err("design.rhos must be a nonempty list of positive numbers");
        }
        if d.rhos.windows(2).any(|w| w[1] >= w[0]) {
            return err("design.rhos must be strictly descending");
        }
        if !d.rhos.iter().any(|r| same_rho(*r, d.selected_rho)) {
            return err("design.selected_rho must be one of design.rhos");
        }
        if d.reduced_order == 0 {
            return err("design.reduced_order must be positive");
        }
        if !(d.recovery_band_hz[0] > 0.0 && d.recovery_band_hz[1] > d.recovery_band_hz[0]) {
            return err("design.recovery_band_hz must be an increasing pair of positive frequencies");
        }
        for g in [&self.grid, &self.identification.grid] {
            if !(g.f_min_hz > 0.0 && g.f_max_hz > g.f_min_hz && g.per_decade > 0) {
                return err("grids need 0 < f_min_hz < f_max_hz and per_decade > 0");
            }
        }
        let s = &self.simulation;
        if !(s.sample_period > 0.0 && s.duration > s.settle && s.settle >= 0.0 && s.substeps > 0 && s.trace_decimation > 0) {
            return err("simulation needs sample_period > 0, duration > settle >= 0, substeps > 0, trace_decimation > 0");
        }
        if self.disturbance.profile == ProfileChoice::Custom && self.disturbance.tones_hz.len() != self.disturbance.amplitudes.len() {
            return err("disturbance.tones_hz and disturbance.amplitudes must have equal length");
        }
        if self.perturbation.count == 0 {
            return err("perturbation.count must be positive");
        }
        if self.ekf.history_decimation == 0 {
            return err("ekf.history_decimation must be positive");
        }
        if !(self.weights.uncertainty_scale > 0.0) {
            return err("weights.uncertainty_scale must be positive");
        }
        self.gimbal.azimuth.params().validate()?;
        self.gimbal.elevation.params().validate()?;
        self.weights.design.params().validate()?;
        self.weights.performance.params().validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML form of the effective configuration.
    /// The output directory and worker count do not affect results and are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.workers = 0;
        let canonical = toml::to_string(&c).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn disturbance_seed(&self) -> u64 {
        self.seed
    }

    pub fn perturbation_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn ekf_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }
}

pub fn same_rho(a: f64, b: f64) -> bool {
    ((a - b) / b).abs() < 1e-9
}
