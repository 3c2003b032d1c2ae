use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::model::OuParams;

/// Coefficients of the implicit z-step at one demand node: the row reads
/// `(1 + Δt F) V_ℓ - Δt D V_{ℓ-1} - Δt H V_{ℓ+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpwindCoeffs {
    pub d: f64,
    pub f: f64,
    pub h: f64,
}

/// Interior coefficients at `z` with drift `θ = -κ z`.
pub fn upwind_coeffs(z: f64, dz: f64, ou: &OuParams, delta: f64) -> Result<UpwindCoeffs> {
    let theta = -ou.kappa * z;
    let s = ou.sigma * ou.sigma / (2.0 * dz * dz);
    let (d, h) = if theta >= 0.0 {
        (s - theta / dz, s)
    } else {
        (s, s + theta / dz)
    };
    if d < 0.0 || h < 0.0 {
        return Err(Error::Positivity {
            dz,
            bound: crate::grid::positivity_bound(ou),
        });
    }
    Ok(UpwindCoeffs { d, f: d + h + delta, h })
}

/// Lower boundary row: first-order one-sided drift, no diffusion.
pub fn lower_boundary_coeffs(z: f64, dz: f64, ou: &OuParams, delta: f64) -> UpwindCoeffs {
    let theta = -ou.kappa * z;
    UpwindCoeffs {
        d: 0.0,
        f: theta / dz + delta,
        h: theta / dz,
    }
}

/// Upper boundary row, mirror of [`lower_boundary_coeffs`].
pub fn upper_boundary_coeffs(z: f64, dz: f64, ou: &OuParams, delta: f64) -> UpwindCoeffs {
    let theta = -ou.kappa * z;
    UpwindCoeffs {
        d: -theta / dz,
        f: delta - theta / dz,
        h: 0.0,
    }
}

/// Coefficients for every demand node `0..=N_z`.
pub fn all_coeffs(grid: &Grid3, ou: &OuParams, delta: f64) -> Result<Vec<UpwindCoeffs>> {
    let mut out = Vec::with_capacity(grid.n_z + 1);
    out.push(lower_boundary_coeffs(grid.z(0), grid.dz, ou, delta));
    for l in 1..grid.n_z {
        out.push(upwind_coeffs(grid.z(l), grid.dz, ou, delta)?);
    }
    out.push(upper_boundary_coeffs(grid.z(grid.n_z), grid.dz, ou, delta));
    Ok(out)
}
