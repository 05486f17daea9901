//! Per-experiment TOML configs. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        return Err(Error::Config("out_dir must not be empty".into()));
    }
    if dir.exists() && !dir.is_dir() {
        return Err(Error::Config(format!("out_dir {} is not a directory", dir.display())));
    }
    Ok(())
}

/// Evenly spaced values `min, ..., max`; a single step yields `[min]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let d = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + d * i as f64 }).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config(format!("{name}.steps must be >= 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min >= 0.0 && self.max >= self.min) {
            return Err(Error::Config(format!(
                "{name} grid needs finite 0 <= min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub h: GridSpec,
    pub jz: GridSpec,
    pub alpha: f64,
    pub j_perp: f64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let grid = GridSpec { min: 0.0, max: 20.0, steps: 41 };
        ScanConfig {
            h: grid.clone(),
            jz: grid,
            alpha: 4.0 / 15.0,
            j_perp: 1.0,
            out_dir: default_out_dir(),
            workers: None,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.h.validate("h")?;
        self.jz.validate("jz")?;
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if self.j_perp == 0.0 || !self.j_perp.is_finite() {
            return Err(Error::Config("j_perp must be finite and nonzero".into()));
        }
        check_out_dir(&self.out_dir)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    ClosedForm,
    Dynamics,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunProtocolConfig {
    pub engine: EngineChoice,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub protocol: ProtocolConfig,
}

impl Default for RunProtocolConfig {
    fn default() -> Self {
        RunProtocolConfig {
            engine: EngineChoice::ClosedForm,
            out_dir: default_out_dir(),
            workers: None,
            protocol: ProtocolConfig::ghz(2),
        }
    }
}

impl RunProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        check_out_dir(&self.out_dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvesConfig {
    pub transmissions: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub out_dir: PathBuf,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        CurvesConfig { transmissions: vec![1.0, 0.9, 0.8, 0.7], n_min: 2, n_max: 8, out_dir: default_out_dir() }
    }
}

impl CurvesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.transmissions.is_empty() {
            return Err(Error::Config("transmissions must not be empty".into()));
        }
        if let Some(t) = self.transmissions.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("transmission values must lie in (0, 1], got {t}")));
        }
        if self.n_min < 2 || self.n_max < self.n_min {
            return Err(Error::Config(format!("need 2 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max)));
        }
        check_out_dir(&self.out_dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Packet inverse width for the dynamical port checks.
    pub alpha: f64,
    /// `(alpha, beta)` couplings of the Y splitters to check.
    pub y_splitters: Vec<[f64; 2]>,
    pub n_min: usize,
    pub n_max: usize,
    pub dynamical: bool,
    pub dynamical_tolerance: f64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        VerifyConfig {
            alpha: 4.0 / 15.0,
            y_splitters: vec![[h, h], [0.6, 0.8]],
            n_min: 2,
            n_max: 5,
            dynamical: true,
            dynamical_tolerance: 0.02,
            out_dir: default_out_dir(),
            workers: None,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if self.y_splitters.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Config("y_splitters entries must be finite".into()));
        }
        if self.n_min < 2 || self.n_max < self.n_min || self.n_max > 16 {
            return Err(Error::Config(format!("need 2 <= n_min <= n_max <= 16, got {}..{}", self.n_min, self.n_max)));
        }
        if !(self.dynamical_tolerance > 0.0) {
            return Err(Error::Config("dynamical_tolerance must be positive".into()));
        }
        check_out_dir(&self.out_dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolvePacket {
    pub alpha: f64,
    /// Centre as an index into the support.
    pub center: f64,
    pub momentum: f64,
    /// Region whose sites (in listed order) carry the packet; when absent, the
    /// hopping path from site 0 up to the first DD or frozen flip.
    pub region: Option<String>,
}

impl Default for EvolvePacket {
    fn default() -> Self {
        EvolvePacket { alpha: 4.0 / 15.0, center: 20.0, momentum: std::f64::consts::FRAC_PI_2, region: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Network file; a uniform chain of `chain_len` sites when absent.
    pub network: Option<PathBuf>,
    pub chain_len: usize,
    pub j_perp: f64,
    pub packet: EvolvePacket,
    /// Extra flips held in place (DD qubits, spectators).
    pub frozen_flips: Vec<usize>,
    pub time: f64,
    pub steps: usize,
    pub method: Method,
    pub trajectory: bool,
    pub out_dir: PathBuf,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            network: None,
            chain_len: 80,
            j_perp: 1.0,
            packet: EvolvePacket::default(),
            frozen_flips: Vec::new(),
            time: 30.0,
            steps: 30,
            method: Method::Chebyshev,
            trajectory: false,
            out_dir: default_out_dir(),
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.network.is_none() && self.chain_len < 2 {
            return Err(Error::Config("chain_len must be >= 2".into()));
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(Error::Config(format!("time must be finite and >= 0, got {}", self.time)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        check_out_dir(&self.out_dir)
    }
}
