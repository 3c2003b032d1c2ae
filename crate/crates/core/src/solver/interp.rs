use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid3, StepFrame};
use crate::model::StorageParams;

/// Rounding slack for the sign of the Courant number at the temperature bounds.
const EDGE_SLACK: f64 = 1e-12;

/// Linear interpolation in `q` at the arrival point `q_j - b Δq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpWeights {
    /// Courant number.
    pub b: f64,
    /// Weight of node `j - 1`.
    pub lower: f64,
    /// Weight of node `j`.
    pub center: f64,
    /// Weight of node `j + 1`.
    pub upper: f64,
}

impl InterpWeights {
    fn from_b(b: f64) -> Self {
        Self {
            b,
            lower: 0.5 * (b + b.abs()),
            center: 1.0 - b.abs(),
            upper: -0.5 * (b - b.abs()),
        }
    }

    /// Interpolated value from the row `v` of the next slice.
    #[inline]
    pub fn apply(&self, v: &[f64], j: usize) -> f64 {
        let mut out = self.center * v[j];
        if self.lower != 0.0 {
            out += self.lower * v[j - 1];
        }
        if self.upper != 0.0 {
            out += self.upper * v[j + 1];
        }
        out
    }
}

/// Courant number `b` at `(z, q_j)` under control `a`.
#[inline]
pub fn courant(frame: &StepFrame, z: f64, q: f64, a: f64, dq: f64, s: &StorageParams) -> f64 {
    frame.dt / (s.heat_capacity() * dq)
        * ((1.0 - a) * frame.residual(z) + s.loss_rate() * (q - frame.q_amb))
}

pub fn interp_weights(
    frame: &StepFrame,
    z: f64,
    j: usize,
    a: f64,
    grid: &Grid3,
    s: &StorageParams,
) -> Result<InterpWeights> {
    let mut b = courant(frame, z, grid.q(j), a, grid.dq, s);
    if b.abs() > 1.0 {
        return Err(Error::Cfl {
            dq: grid.dq,
            required: b.abs() * grid.dq,
        });
    }
    if j == 0 && b > 0.0 {
        if b > EDGE_SLACK {
            return Err(Error::Numerical(format!(
                "arrival point below q_min at z = {z}, a = {a} (b = {b})"
            )));
        }
        b = 0.0;
    }
    if j == grid.n_q && b < 0.0 {
        if b < -EDGE_SLACK {
            return Err(Error::Numerical(format!(
                "arrival point above q_max at z = {z}, a = {a} (b = {b})"
            )));
        }
        b = 0.0;
    }
    Ok(InterpWeights::from_b(b))
}
