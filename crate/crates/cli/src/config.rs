//! Run configuration file.
//!
//! TOML with a mandatory `schema_version`. Every table rejects unknown keys,
//! and every key except `schema_version` has a default, so the smallest valid
//! file is `schema_version = 1`.
//!
//! ```toml
//! schema_version = 1
//! subcommand = "scan"          # optional, the command line wins
//! jobs = 4                     # optional
//!
//! [model]
//! n_sites = 50
//! delta = 0.5
//! g = 0.7
//! j_ising = 1.0
//! n_fock = 10
//!
//! [dmrg]                       # optional, see DmrgConfig
//! max_bond = 10
//!
//! [scan]
//! method = "dmrg"
//! deltas = [0.3, 0.5]
//! g_lo = 0.4
//! g_hi = 0.8
//! g_step = 0.02
//! bidirectional = true
//!
//! [ion]                        # optional, see IonChainSpec (SI units)
//!
//! [output]
//! path = "scan.csv"
//! format = "csv"
//! checkpoint = "state.mps"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use rabi_lattice::{DmrgConfig, IonChainSpec, Method, ModelParams};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Ed,
    Pt,
    Bo,
    Sh,
    Dmrg,
    Scan,
    FitCritical,
    FitChi,
    IonPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_sites: usize,
    pub delta: f64,
    pub g: f64,
    pub j_ising: f64,
    pub n_fock: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { n_sites: 3, delta: 1.0, g: 0.3, j_ising: 1.0, n_fock: 6 }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.n_sites, self.delta, self.g, self.j_ising, self.n_fock)
            .map_err(|e| ConfigError(format!("[model]: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub method: Method,
    pub deltas: Vec<f64>,
    pub g_lo: f64,
    pub g_hi: f64,
    pub g_step: f64,
    pub bidirectional: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { method: Method::Bo, deltas: vec![1.0], g_lo: 0.5, g_hi: 1.5, g_step: 0.02, bidirectional: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmrg: Option<DmrgConfig>,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ion: Option<IonChainSpec>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            subcommand: None,
            jobs: None,
            model: ModelSection::default(),
            dmrg: None,
            scan: ScanSection::default(),
            ion: None,
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "config: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes to TOML")
    }

    pub fn dmrg_config(&self) -> DmrgConfig {
        self.dmrg.unwrap_or_default()
    }

    /// Checks every section without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.params()?;
        self.dmrg_config().validate().map_err(|e| ConfigError(format!("[dmrg]: {e}")))?;
        if let Some(ion) = &self.ion {
            ion.validate().map_err(|e| ConfigError(format!("[ion]: {e}")))?;
        }
        let s = &self.scan;
        if !(s.g_step > 0.0 && s.g_step.is_finite()) {
            return Err(ConfigError(format!("[scan] g_step: must be positive, got {}", s.g_step)));
        }
        if !(s.g_lo >= 0.0 && s.g_hi >= s.g_lo && s.g_hi.is_finite()) {
            return Err(ConfigError(format!("[scan] g_lo/g_hi: bad range {}..{}", s.g_lo, s.g_hi)));
        }
        if s.deltas.is_empty() {
            return Err(ConfigError("[scan] deltas: empty".into()));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError("jobs: must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `lo:hi:step`.
pub fn parse_range(text: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got {text:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| format!("bad number {part:?} in {text:?}"))?;
    }
    if !(v[2] > 0.0) || v[1] < v[0] {
        return Err(format!("range {text:?} must have hi >= lo and step > 0"));
    }
    Ok((v[0], v[1], v[2]))
}
