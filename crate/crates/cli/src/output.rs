use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use heatstore::Error;
use serde::Serialize;

/// Terminal error with its exit code: 1 for numerical or check failures,
/// 2 for usage and configuration errors.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "check_failed",
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind, "exit_code": self.code, "message": self.message })
            .to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidConfig(_) => (2, "invalid_config"),
            Error::Calibration(_) => (2, "calibration"),
            Error::Json(_) => (2, "config_parse"),
            Error::Io(_) => (2, "io"),
            Error::Snapshot(_) => (2, "snapshot"),
            Error::State(_) => (1, "state"),
            Error::Positivity { .. } => (1, "positivity"),
            Error::Cfl { .. } => (1, "cfl"),
            Error::EmptyFeasibleSet { .. } => (1, "empty_feasible_set"),
            Error::Numerical(_) => (1, "numerical"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

/// Provenance record written once into every output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_path: PathBuf,
    pub config_hash: String,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub heatstore_version: &'static str,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_manifest(manifest: &RunManifest) -> Result<(), Failure> {
    write_json(&manifest.output_dir.join("manifest.json"), manifest)
}
