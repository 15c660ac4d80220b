//! Output directory handling: headers, stored intermediate results and run manifests.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use ltr_core::{DiscreteStateSpace, StateSpace};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ProjectConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for StoredMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl StoredMatrix {
    pub fn matrix(&self) -> Result<DMatrix<f64>, CliError> {
        if self.data.len() != self.rows * self.cols {
            return Err(CliError::MissingDependency("stored matrix has inconsistent size".into()));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSystem {
    pub a: StoredMatrix,
    pub b: StoredMatrix,
    pub c: StoredMatrix,
    pub d: StoredMatrix,
    /// Present for discrete-time systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
}

impl From<&StateSpace> for StoredSystem {
    fn from(s: &StateSpace) -> Self {
        Self { a: s.a().into(), b: s.b().into(), c: s.c().into(), d: s.d().into(), sample_period: None }
    }
}

impl From<&DiscreteStateSpace> for StoredSystem {
    fn from(s: &DiscreteStateSpace) -> Self {
        Self { a: s.a().into(), b: s.b().into(), c: s.c().into(), d: s.d().into(), sample_period: Some(s.ts()) }
    }
}

impl StoredSystem {
    pub fn continuous(&self) -> Result<StateSpace, CliError> {
        Ok(StateSpace::new(self.a.matrix()?, self.b.matrix()?, self.c.matrix()?, self.d.matrix()?)?)
    }

    pub fn discrete(&self) -> Result<DiscreteStateSpace, CliError> {
        let ts = self
            .sample_period
            .ok_or_else(|| CliError::MissingDependency("stored controller has no sample period".into()))?;
        Ok(DiscreteStateSpace::new(self.a.matrix()?, self.b.matrix()?, self.c.matrix()?, self.d.matrix()?, ts)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPoint {
    pub rho: f64,
    pub recovery_error: f64,
    pub stable: bool,
    pub closed_loop_abscissa: f64,
    pub compensator: StoredSystem,
}

/// Result of `design`, consumed by `analyze`, `reduce` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDesign {
    pub config_hash: String,
    pub selected_rho: f64,
    pub plant_order: usize,
    pub augmented_order: usize,
    pub kalman_gain: StoredMatrix,
    pub points: Vec<StoredPoint>,
}

/// Result of `reduce`, consumed by `discretize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredReduction {
    pub config_hash: String,
    pub rho: f64,
    pub full_order: usize,
    pub order: usize,
    pub hankel_values: Vec<f64>,
    pub error_bound: f64,
    pub hinf_error: f64,
    pub rp_peak_full: f64,
    pub rp_peak_reduced: f64,
    pub reduced: StoredSystem,
}

/// Result of `discretize`, consumed by `simulate` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredController {
    pub config_hash: String,
    pub rho: f64,
    pub order: usize,
    pub sample_period: f64,
    pub sampled_loop_spectral_radius: f64,
    pub controller: StoredSystem,
}

#[derive(Debug, Serialize, Deserialize)]
struct Hashed {
    config_hash: String,
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    ltr_version: &'a str,
    schema_version: u32,
    files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writer for one command's outputs; records every file for the manifest.
pub struct Output<'a> {
    dir: PathBuf,
    command: &'a str,
    config: &'a ProjectConfig,
    hash: String,
    files: Vec<ManifestFile>,
}

impl<'a> Output<'a> {
    pub fn new(command: &'a str, config: &'a ProjectConfig) -> Result<Self, CliError> {
        let dir = config.output_dir.clone();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, command, config, hash: config.hash(), files: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Comment lines that open every text output.
    pub fn header(&self) -> Vec<String> {
        vec![
            format!("ltr {} {}", self.command, VERSION),
            format!("config_hash {}", self.hash),
            format!("seed {}", self.config.seed),
        ]
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(ManifestFile { name: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Text file produced by `body`, which receives the standard header lines.
    pub fn text<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write, &[String]) -> io::Result<()>,
    {
        let header = self.header();
        let mut buf = BufWriter::new(Vec::new());
        body(&mut buf, &header)?;
        let bytes = buf.into_inner().map_err(|e| e.into_error())?;
        self.record(name, &bytes)
    }

    /// JSON document; `value` must carry a `config_hash` field.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        self.record(name, &bytes)
    }

    /// Writes `manifest_<command>.json` listing every file of this run.
    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        let manifest = Manifest {
            command: self.command,
            config_hash: &self.hash,
            seed: self.config.seed,
            ltr_version: VERSION,
            schema_version: crate::config::SCHEMA_VERSION,
            files: self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        bytes.push(b'\n');
        let path = self.dir.join(format!("manifest_{}.json", self.command));
        fs::write(&path, bytes)?;
        let mut written: Vec<PathBuf> = manifest.files.iter().map(|f| self.dir.join(&f.name)).collect();
        written.push(path);
        Ok(written)
    }
}

/// Loads a stored result, requiring it to come from the same configuration.
pub fn load<T: DeserializeOwned>(config: &ProjectConfig, name: &str, producer: &str) -> Result<T, CliError> {
    let path = config.output_dir.join(name);
    let text = fs::read_to_string(&path).map_err(|_| {
        CliError::MissingDependency(format!("{} not found; run `ltr {producer}` first", path.display()))
    })?;
    let stamp: Hashed = serde_json::from_str(&text)
        .map_err(|e| CliError::MissingDependency(format!("{} is unreadable: {e}", path.display())))?;
    if stamp.config_hash != config.hash() {
        return Err(CliError::MissingDependency(format!(
            "{} was produced by a different configuration; rerun `ltr {producer}`",
            path.display()
        )));
    }
    serde_json::from_str(&text).map_err(|e| CliError::MissingDependency(format!("{} is unreadable: {e}", path.display())))
}
