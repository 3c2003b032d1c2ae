use std::fmt;

use thiserror::Error;

/// One failed parameter check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("state out of domain: {0}")]
    State(String),

    #[error("positivity condition violated: dz = {dz} exceeds bound {bound}")]
    Positivity { dz: f64, bound: f64 },

    #[error("CFL condition violated: dq = {dq} is below the required minimum {required}")]
    Cfl { dq: f64, required: f64 },

    #[error("empty feasible control set at n = {n}, z = {z}, q = {q}: [{lo}, {hi}]")]
    EmptyFeasibleSet {
        n: usize,
        z: f64,
        q: f64,
        lo: f64,
        hi: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
