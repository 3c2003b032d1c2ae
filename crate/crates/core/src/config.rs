//! The single JSON document driving a run: model parameters, grid sizes,
//! terminal contract and optional calibration targets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::costs::TerminalKind;
use crate::error::Result;
use crate::model::ModelConfig;

fn default_c_eps() -> u32 {
    3
}

/// Grid section of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_t: usize,
    pub n_z: usize,
    pub n_q: usize,
    /// Width of the demand domain in stationary standard deviations (3, 4 or 5).
    #[serde(default = "default_c_eps")]
    pub c_eps: u32,
    /// Explicit symmetric demand bound [kW], overriding the `c_eps` rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaTargets {
    /// Time at which the idle storage should reach `q_tilde` [h].
    pub t_star: f64,
    pub q_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaTargets>,
    /// Depletion time of a full storage under the constant mean demand [h].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    /// Depletion time under the peak demand [h].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub terminal: TerminalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationTargets>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization. Formatting and key order of
    /// the source file do not matter.
    pub fn content_hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).into()
    }
}
