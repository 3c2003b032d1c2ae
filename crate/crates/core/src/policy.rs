//! Policy look-up on solved cubes, forward simulation and Monte-Carlo
//! evaluation of the extracted policy.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::constraints::{feasible_continuous, feasible_discrete};
use crate::costs::{stage_cost, terminal_cost, TerminalSpec};
use crate::dynamics::{arrival_point, ou_exact_step};
use crate::error::{Error, Result};
use crate::grid::{Grid3, StepFrame};
use crate::model::ModelConfig;
use crate::solver::{PolicyCube, ValueCube};

/// Cell index and fractional offset of `x` on a uniform axis with `cells` cells.
fn locate(x: f64, lo: f64, step: f64, cells: usize) -> (usize, f64) {
    let s = ((x - lo) / step).clamp(0.0, cells as f64);
    let i = (s.floor() as usize).min(cells - 1);
    (i, s - i as f64)
}

fn bilinear(plane: &[f64], grid: &Grid3, z: f64, q: f64) -> f64 {
    let nq1 = grid.n_q + 1;
    let (l, wz) = locate(z, grid.z_min, grid.dz, grid.n_z);
    let (j, wq) = locate(q, grid.q_min, grid.dq, grid.n_q);
    let at = |l: usize, j: usize| plane[l * nq1 + j];
    let lo = (1.0 - wq) * at(l, j) + wq * at(l, j + 1);
    let hi = (1.0 - wq) * at(l + 1, j) + wq * at(l + 1, j + 1);
    if wz == 0.0 {
        lo
    } else {
        (1.0 - wz) * lo + wz * hi
    }
}

/// Time step whose policy applies at `t` (the left slice).
pub fn step_index(t: f64, grid: &Grid3) -> usize {
    let s = ((t - grid.t0) / grid.dt).floor();
    if s <= 0.0 {
        0
    } else {
        (s as usize).min(grid.n_t - 1)
    }
}

/// Value function at slice `n`, interpolated bilinearly in `(z, q)`.
pub fn value_at(values: &ValueCube, grid: &Grid3, n: usize, z: f64, q: f64) -> f64 {
    bilinear(values.slice(n), grid, z, q)
}

/// Control at `(t, z, q)`: left time slice, bilinear interpolation with
/// clamped coordinates, then projection onto the admissible set.
pub fn lookup_policy(
    t: f64,
    z: f64,
    q: f64,
    policy: &PolicyCube,
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<f64> {
    let n = step_index(t, grid);
    let frame = grid.frame(n, model);
    lookup_in_frame(&frame, z, q, policy, grid, model)
}

fn lookup_in_frame(
    frame: &StepFrame,
    z: f64,
    q: f64,
    policy: &PolicyCube,
    grid: &Grid3,
    model: &ModelConfig,
) -> Result<f64> {
    let raw = bilinear(policy.slice(frame.n), grid, z, q);
    Ok(feasible_continuous(frame, z, q, &model.storage)?.project(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub t: f64,
    pub z: f64,
    pub r: f64,
    pub q: f64,
    pub a: f64,
    pub a_signed: f64,
    /// Stage cost discounted to time 0.
    pub stage_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub z_final: f64,
    pub q_final: f64,
    /// Terminal cost discounted to time 0.
    pub terminal_cost: f64,
    pub total_cost: f64,
}

impl Trajectory {
    /// Columns `t,z,r,q,a,a_signed,stage_cost`, followed by one row for the
    /// horizon with empty control columns.
    pub fn write_csv(&self, w: &mut impl Write, end_time: f64) -> Result<()> {
        writeln!(w, "t,z,r,q,a,a_signed,stage_cost")?;
        for s in &self.steps {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.z, s.r, s.q, s.a, s.a_signed, s.stage_cost
            )?;
        }
        writeln!(
            w,
            "{end_time:.16e},{:.16e},,{:.16e},,,{:.16e}",
            self.z_final, self.q_final, self.terminal_cost
        )?;
        Ok(())
    }

    pub fn max_q_between(&self, t0: f64, t1: f64) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.t >= t0 && s.t <= t1)
            .map(|s| s.q)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Policy, model and per-step inputs needed to run forward simulations.
pub struct Simulator<'a> {
    pub policy: &'a PolicyCube,
    pub model: &'a ModelConfig,
    pub grid: &'a Grid3,
    pub terminal: &'a TerminalSpec,
    frames: Vec<StepFrame>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        policy: &'a PolicyCube,
        model: &'a ModelConfig,
        grid: &'a Grid3,
        terminal: &'a TerminalSpec,
    ) -> Result<Self> {
        if (policy.n_t, policy.n_z, policy.n_q) != (grid.n_t, grid.n_z, grid.n_q) {
            return Err(Error::Snapshot(format!(
                "policy dimensions {:?} do not match the grid {:?}",
                (policy.n_t, policy.n_z, policy.n_q),
                (grid.n_t, grid.n_z, grid.n_q)
            )));
        }
        let frames = (0..grid.n_t).map(|n| grid.frame(n, model)).collect();
        Ok(Self {
            policy,
            model,
            grid,
            terminal,
            frames,
        })
    }

    /// Runs one path. `next_z(n, z)` supplies the demand at step `n + 1`.
    pub fn run(
        &self,
        z0: f64,
        q0: f64,
        record: bool,
        mut next_z: impl FnMut(usize, f64) -> f64,
    ) -> Result<Trajectory> {
        let s = &self.model.storage;
        if !(s.q_min <= q0 && q0 <= s.q_max) {
            return Err(Error::State(format!(
                "initial temperature {q0} outside [{}, {}]",
                s.q_min, s.q_max
            )));
        }
        let delta = self.model.delta;
        let (mut z, mut q) = (z0, q0);
        let mut steps = Vec::with_capacity(if record { self.grid.n_t } else { 0 });
        let mut costs = Vec::with_capacity(self.grid.n_t + 1);
        for frame in &self.frames {
            let a = lookup_in_frame(frame, z, q, self.policy, self.grid, self.model)?;
            // The one-step admissible set keeps the Euler update inside the bounds.
            let a = feasible_discrete(frame, z, q, s)?.project(a);
            let r = frame.residual(z);
            let cost = (-delta * frame.t).exp() * stage_cost(frame, z, a, self.model);
            costs.push(cost);
            if record {
                steps.push(TrajectoryStep {
                    t: frame.t,
                    z,
                    r,
                    q,
                    a,
                    a_signed: a * sign(r),
                    stage_cost: cost,
                });
            }
            q = arrival_point(frame, z, q, a, s).clamp(s.q_min, s.q_max);
            z = next_z(frame.n, z);
        }
        let term = (-delta * self.grid.t_end).exp() * terminal_cost(q, self.terminal);
        costs.push(term);
        Ok(Trajectory {
            steps,
            z_final: z,
            q_final: q,
            terminal_cost: term,
            total_cost: pairwise_sum(&costs),
        })
    }

    /// Path `index` of the Monte-Carlo family seeded by `seed`.
    pub fn run_seeded(&self, seed: u64, index: u64, z0: f64, q0: f64, record: bool) -> Result<Trajectory> {
        let mut rng = path_rng(seed, index);
        let dt = self.grid.dt;
        let ou = &self.model.ou;
        self.run(z0, q0, record, |_, z| {
            ou_exact_step(z, dt, StandardNormal.sample(&mut rng), ou)
        })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Independent stream `index` of the generator family `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates the optimal storage path from `(z0, q0)` at time 0.
#[allow(clippy::too_many_arguments)]
pub fn simulate_optimal_path(
    seed: u64,
    policy: &PolicyCube,
    model: &ModelConfig,
    grid: &Grid3,
    terminal: &TerminalSpec,
    q0: f64,
    z0: f64,
) -> Result<Trajectory> {
    Simulator::new(policy, model, grid, terminal)?.run_seeded(seed, 0, z0, q0, true)
}

/// Sum with pairwise splitting; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

/// Mean and standard error of the total discounted cost over `n_paths`
/// independent paths from `(z0, q0)`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_value(
    n_paths: usize,
    seed: u64,
    policy: &PolicyCube,
    model: &ModelConfig,
    grid: &Grid3,
    terminal: &TerminalSpec,
    q0: f64,
    z0: f64,
) -> Result<McEstimate> {
    if n_paths < 100 {
        return Err(Error::State(format!("need at least 100 paths, got {n_paths}")));
    }
    let sim = Simulator::new(policy, model, grid, terminal)?;
    let totals = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sim.run_seeded(seed, i, z0, q0, false).map(|t| t.total_cost))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&totals))
}

pub fn summarize(xs: &[f64]) -> McEstimate {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_paths: xs.len(),
    }
}
