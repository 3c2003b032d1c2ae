use crate::constraints::{feasible_discrete, ControlInterval};
use crate::costs::stage_cost;
use crate::error::Result;
use crate::grid::{Grid3, StepFrame};
use crate::model::{ModelConfig, StorageParams};

use super::interp::{interp_weights, InterpWeights};

/// Objectives closer than this (relative to `1 + |best|`) count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Up to five sorted, distinct candidate controls.
#[derive(Debug, Clone, Copy)]
pub struct Candidates {
    buf: [f64; 5],
    len: usize,
}

impl Candidates {
    pub fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }

    pub fn contains(&self, a: f64) -> bool {
        self.as_slice().contains(&a)
    }
}

/// Interval endpoints plus the controls at which the arrival point crosses
/// `q_{j-1}`, `q_j` and `q_{j+1}`. Between two consecutive candidates the
/// objective is affine in `a`.
pub fn control_candidates(
    frame: &StepFrame,
    z: f64,
    q: f64,
    interval: ControlInterval,
    dq: f64,
    s: &StorageParams,
) -> Candidates {
    let mut buf = [0.0; 5];
    buf[0] = interval.lo;
    let mut len = 1;
    let r = frame.residual(z);
    if r != 0.0 {
        let k = frame.dt / (s.heat_capacity() * dq);
        let loss = s.loss_rate() * (q - frame.q_amb);
        let mut inner = [-1.0f64, 0.0, 1.0].map(|beta| 1.0 - (beta / k - loss) / r);
        inner.sort_by(f64::total_cmp);
        for a in inner {
            if a > interval.lo && a < interval.hi {
                buf[len] = a;
                len += 1;
            }
        }
    }
    if interval.hi > interval.lo {
        buf[len] = interval.hi;
        len += 1;
    }
    Candidates { buf, len }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlChoice {
    pub a: f64,
    pub objective: f64,
    pub stage: f64,
    pub weights: InterpWeights,
    pub interval: ControlInterval,
}

/// Value of the discrete DPP objective at a single control.
pub fn control_objective(
    frame: &StepFrame,
    z: f64,
    j: usize,
    a: f64,
    v_next: &[f64],
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<(f64, f64, InterpWeights)> {
    let w = interp_weights(frame, z, j, a, grid, &model.storage)?;
    let stage = stage_cost(frame, z, a, model);
    let disc = (-model.delta * frame.dt).exp();
    Ok((stage + disc * w.apply(v_next, j), stage, w))
}

/// Minimizer of `stage_cost + e^{-δΔt} V_next(arrival)` over the one-step
/// feasible set at `(t_n, z, q_j)`. `v_next` is the row of slice `n + 1` at
/// the same demand node. Ties go to the smallest control.
pub fn optimal_control(
    frame: &StepFrame,
    z: f64,
    j: usize,
    v_next: &[f64],
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<ControlChoice> {
    let q = grid.q(j);
    let interval = feasible_discrete(frame, z, q, &model.storage)?;
    let cands = control_candidates(frame, z, q, interval, grid.dq, &model.storage);
    let mut evals = [(0.0, 0.0, 0.0, None::<InterpWeights>); 5];
    let mut best = f64::INFINITY;
    for (slot, &a) in evals.iter_mut().zip(cands.as_slice()) {
        let (obj, stage, w) = control_objective(frame, z, j, a, v_next, grid, model)?;
        *slot = (a, obj, stage, Some(w));
        best = best.min(obj);
    }
    let tol = TIE_TOLERANCE * (1.0 + best.abs());
    let &(a, objective, stage, weights) = evals[..cands.as_slice().len()]
        .iter()
        .find(|e| e.1 <= best + tol)
        .expect("candidate set is never empty");
    Ok(ControlChoice {
        a,
        objective,
        stage,
        weights: weights.expect("evaluated"),
        interval,
    })
}
