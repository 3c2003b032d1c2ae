//! Independent dense assemblies shared by the oracle and acceptance tests.
#![allow(dead_code)]

use heatstore::costs::stage_cost;
use heatstore::dynamics::arrival_point;
use heatstore::grid::Grid3;
use heatstore::model::ModelConfig;
use nalgebra::{DMatrix, DVector};

/// Piecewise-linear interpolation of a row on the temperature nodes.
pub fn lerp_row(row: &[f64], g: &Grid3, q: f64) -> f64 {
    let s = ((q - g.q_min) / g.dq).clamp(0.0, g.n_q as f64);
    let j = (s.floor() as usize).min(g.n_q - 1);
    let w = s - j as f64;
    (1.0 - w) * row[j] + w * row[j + 1]
}

/// `D`, `H`, `F` written out from the upwind rule.
fn coeffs(z: f64, g: &Grid3, m: &ModelConfig) -> (f64, f64, f64) {
    let theta = -m.ou.kappa * z;
    let s = m.ou.sigma.powi(2) / (2.0 * g.dz * g.dz);
    let (d, h) = if theta >= 0.0 {
        (s - theta / g.dz, s)
    } else {
        (s, s + theta / g.dz)
    };
    (d, h, d + h + m.delta)
}

/// Dense solve of every equation of one backward step, given the controls.
pub fn dense_slice(n: usize, v_next: &[f64], policy: &[f64], g: &Grid3, m: &ModelConfig) -> Vec<f64> {
    let (nz, nq) = (g.n_z, g.n_q);
    let nq1 = nq + 1;
    let size = g.plane_len();
    let idx = |l: usize, j: usize| l * nq1 + j;
    let frame = g.frame(n, m);
    let dt = g.dt;
    let mut gamma = vec![0.0; size];
    for l in 0..=nz {
        let row = &v_next[l * nq1..(l + 1) * nq1];
        for j in 0..=nq {
            let a = policy[idx(l, j)];
            let q1 = arrival_point(&frame, g.z(l), g.q(j), a, &m.storage);
            gamma[idx(l, j)] = lerp_row(row, g, q1) + stage_cost(&frame, g.z(l), a, m);
        }
    }
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for j in 0..=nq {
        for l in 1..nz {
            let (d, h, f) = coeffs(g.z(l), g, m);
            let r = idx(l, j);
            mat[(r, r)] += 1.0 + dt * f;
            // Neighbours outside the interior are replaced by their linear ghosts.
            if l == 1 {
                mat[(r, idx(1, j))] += -dt * d * 2.0;
                mat[(r, idx(2, j))] += dt * d;
            } else {
                mat[(r, idx(l - 1, j))] += -dt * d;
            }
            if l == nz - 1 {
                mat[(r, idx(nz - 1, j))] += -dt * h * 2.0;
                mat[(r, idx(nz - 2, j))] += dt * h;
            } else {
                mat[(r, idx(l + 1, j))] += -dt * h;
            }
            rhs[r] = gamma[r];
        }
    }
    let theta0 = -m.ou.kappa * g.z(0);
    let theta_n = -m.ou.kappa * g.z(nz);
    for j in 1..nq {
        let r = idx(0, j);
        mat[(r, r)] = 1.0 + dt * (theta0 / g.dz + m.delta);
        mat[(r, idx(1, j))] = -dt * theta0 / g.dz;
        rhs[r] = gamma[r];
        let r = idx(nz, j);
        mat[(r, r)] = 1.0 + dt * (m.delta - theta_n / g.dz);
        mat[(r, idx(nz - 1, j))] = dt * theta_n / g.dz;
        rhs[r] = gamma[r];
    }
    let corners = [
        (idx(0, 0), idx(1, 0), idx(2, 0)),
        (idx(0, nq), idx(0, nq - 1), idx(0, nq - 2)),
        (idx(nz, 0), idx(nz, 1), idx(nz, 2)),
        (idx(nz, nq), idx(nz, nq - 1), idx(nz, nq - 2)),
    ];
    for (c, a, b) in corners {
        mat[(c, c)] = 1.0;
        mat[(c, a)] = -2.0;
        mat[(c, b)] = 1.0;
    }
    let sol = mat.lu().solve(&rhs).expect("nonsingular");
    sol.iter().copied().collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Discrete DPP objective from plain linear interpolation of the next row.
pub fn objective(n: usize, l: usize, j: usize, a: f64, row: &[f64], g: &Grid3, m: &ModelConfig) -> f64 {
    let frame = g.frame(n, m);
    let q1 = arrival_point(&frame, g.z(l), g.q(j), a, &m.storage);
    stage_cost(&frame, g.z(l), a, m) + (-m.delta * g.dt).exp() * lerp_row(row, g, q1)
}
