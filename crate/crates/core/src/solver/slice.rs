use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Grid3;
use crate::model::ModelConfig;

use super::control::optimal_control;
use super::thomas::TridiagFactor;
use super::upwind::{all_coeffs, UpwindCoeffs};

/// Bands of the interior z-system, rows `ℓ = 1..N_z-1`. Row 1 and row
/// `N_z - 1` absorb the linear ghost values `V_0 = 2V_1 - V_2` and
/// `V_{N_z} = 2V_{N_z-1} - V_{N_z-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorSystem {
    pub diag: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InteriorSystem {
    pub fn assemble(coeffs: &[UpwindCoeffs], dt: f64) -> Self {
        let m = coeffs.len() - 2;
        let mut diag = vec![0.0; m];
        let mut lower = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            let c = coeffs[i + 1];
            diag[i] = 1.0 + dt * c.f;
            lower[i] = -dt * c.d;
            upper[i] = -dt * c.h;
        }
        let c1 = coeffs[1];
        diag[0] = 1.0 + dt * c1.f - 2.0 * dt * c1.d;
        upper[0] = dt * (c1.d - c1.h);
        lower[0] = 0.0;
        let cl = coeffs[m];
        diag[m - 1] = 1.0 + dt * cl.f - 2.0 * dt * cl.h;
        if m > 1 {
            lower[m - 1] = -dt * (cl.d - cl.h);
        }
        upper[m - 1] = 0.0;
        Self { diag, lower, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Smallest `|diag| - |lower| - |upper|` over all rows.
    pub fn dominance_margin(&self) -> f64 {
        (0..self.len())
            .map(|i| self.diag[i].abs() - self.lower[i].abs() - self.upper[i].abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Time-invariant data shared by every slice of one run.
#[derive(Debug, Clone)]
pub struct SliceContext {
    pub coeffs: Vec<UpwindCoeffs>,
    pub system: InteriorSystem,
    factor: TridiagFactor,
}

impl SliceContext {
    pub fn new(grid: &Grid3, model: &ModelConfig) -> Result<Self> {
        let coeffs = all_coeffs(grid, &model.ou, model.delta)?;
        let system = InteriorSystem::assemble(&coeffs, grid.dt);
        let factor = TridiagFactor::new(&system.diag, &system.lower, &system.upper)?;
        Ok(Self {
            coeffs,
            system,
            factor,
        })
    }
}

/// Scratch buffers reused across slices.
#[derive(Debug, Clone, Default)]
pub struct SliceWorkspace {
    gamma: Vec<f64>,
    columns: Vec<f64>,
}

/// One backward step: controls, right-hand side, interior solves, z-boundary
/// rows and corners. `v_next`, `v_out` and `a_out` are `[ℓ][j]` planes.
#[allow(clippy::too_many_arguments)]
pub fn solve_time_slice_into(
    n: usize,
    v_next: &[f64],
    v_out: &mut [f64],
    a_out: &mut [f64],
    ctx: &SliceContext,
    ws: &mut SliceWorkspace,
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<()> {
    let nq1 = grid.n_q + 1;
    let nz = grid.n_z;
    let m = nz - 1;
    let plane = grid.plane_len();
    debug_assert_eq!(v_next.len(), plane);
    let frame = grid.frame(n, model);
    let dt = grid.dt;

    ws.gamma.resize(plane, 0.0);
    ws.gamma
        .par_chunks_mut(nq1)
        .zip(a_out.par_chunks_mut(nq1))
        .enumerate()
        .try_for_each(|(l, (g_row, a_row))| -> Result<()> {
            let z = grid.z(l);
            let next_row = &v_next[l * nq1..(l + 1) * nq1];
            for j in 0..nq1 {
                let c = optimal_control(&frame, z, j, next_row, grid, model)?;
                g_row[j] = c.weights.apply(next_row, j) + c.stage;
                a_row[j] = c.a;
            }
            Ok(())
        })?;

    let gamma = &ws.gamma;
    ws.columns.resize(nq1 * m, 0.0);
    ws.columns
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(j, col)| {
            for (i, x) in col.iter_mut().enumerate() {
                *x = gamma[(i + 1) * nq1 + j];
            }
            ctx.factor.solve_in_place(col);
        });
    for j in 0..nq1 {
        for i in 0..m {
            v_out[(i + 1) * nq1 + j] = ws.columns[j * m + i];
        }
    }

    let lo = ctx.coeffs[0];
    let hi = ctx.coeffs[nz];
    for j in 1..grid.n_q {
        v_out[j] = (gamma[j] + dt * lo.h * v_out[nq1 + j]) / (1.0 + dt * lo.f);
        let top = nz * nq1 + j;
        v_out[top] = (gamma[top] + dt * hi.d * v_out[(nz - 1) * nq1 + j]) / (1.0 + dt * hi.f);
    }

    let nq = grid.n_q;
    let at = |l: usize, j: usize| l * nq1 + j;
    v_out[at(0, 0)] = 2.0 * v_out[at(1, 0)] - v_out[at(2, 0)];
    v_out[at(0, nq)] = 2.0 * v_out[at(0, nq - 1)] - v_out[at(0, nq - 2)];
    v_out[at(nz, 0)] = 2.0 * v_out[at(nz, 1)] - v_out[at(nz, 2)];
    v_out[at(nz, nq)] = 2.0 * v_out[at(nz, nq - 1)] - v_out[at(nz, nq - 2)];
    Ok(())
}

/// Allocating wrapper around [`solve_time_slice_into`] returning `(V_n, a*_n)`.
pub fn solve_time_slice(
    n: usize,
    v_next: &[f64],
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ctx = SliceContext::new(grid, model)?;
    let mut v = vec![0.0; grid.plane_len()];
    let mut a = vec![0.0; grid.plane_len()];
    solve_time_slice_into(n, v_next, &mut v, &mut a, &ctx, &mut SliceWorkspace::default(), grid, model)?;
    Ok((v, a))
}
