//! Invariant battery for solved cubes.
//!
//! [`Battery`] is a [`SliceSink`], so the same checks run on a stored cube
//! or alongside a streaming solve.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::constraints::feasible_discrete;
use crate::costs::{terminal_cost, TerminalKind, TerminalSpec};
use crate::error::Result;
use crate::grid::Grid3;
use crate::model::ModelConfig;
use crate::solver::{
    backward_recursion_with, control_candidates, interp_weights, PolicyCube, SliceContext,
    SliceSink, ValueCube,
};

/// Slack for "non-increasing in q", relative to `1 + |V|`.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;
/// Slack for the interpolation weights summing to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-14;
/// Slack for stored controls lying in the one-step admissible set.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    /// Largest violation magnitude.
    pub worst: f64,
    /// First violation in `(n, ℓ, j)` order.
    pub first: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: 0,
            worst: 0.0,
            first: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, magnitude: f64, at: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.worst = self.worst.max(magnitude);
            if self.first.is_none() {
                self.first = Some(at());
            }
        }
    }

    fn merge(&mut self, other: Self) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        if self.first.is_none() {
            self.first = other.first;
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {} checked", self.name, self.checked)?;
        if !self.passed() {
            write!(f, ", {} violations, worst {:.3e}", self.violations, self.worst)?;
            if let Some(at) = &self.first {
                write!(f, ", first at {at}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SliceStats {
    monotone: CheckResult,
    feasible: CheckResult,
    bang_bang: CheckResult,
    weights: CheckResult,
}

impl SliceStats {
    fn new() -> Self {
        Self {
            monotone: CheckResult::new("value non-increasing in q"),
            feasible: CheckResult::new("stored control feasible"),
            bang_bang: CheckResult::new("stored control is a candidate"),
            weights: CheckResult::new("interpolation weights monotone"),
        }
    }

    fn merge(&mut self, o: Self) {
        self.monotone.merge(o.monotone);
        self.feasible.merge(o.feasible);
        self.bang_bang.merge(o.bang_bang);
        self.weights.merge(o.weights);
    }
}

/// Runs the per-node checks on every slice it receives.
pub struct Battery<'a> {
    grid: &'a Grid3,
    model: &'a ModelConfig,
    terminal: &'a TerminalSpec,
    terminal_check: CheckResult,
    dominance: CheckResult,
    coefficients: CheckResult,
    stats: SliceStats,
    check_monotone: bool,
}

impl<'a> Battery<'a> {
    pub fn new(grid: &'a Grid3, model: &'a ModelConfig, terminal: &'a TerminalSpec) -> Result<Self> {
        let ctx = SliceContext::new(grid, model)?;
        let mut dominance = CheckResult::new("system strictly diagonally dominant");
        let sys = &ctx.system;
        for i in 0..sys.len() {
            let margin = sys.diag[i].abs() - sys.lower[i].abs() - sys.upper[i].abs();
            dominance.record(margin > 0.0, -margin, || format!("interior row {}", i + 1));
        }
        let dt = grid.dt;
        let (lo, hi) = (ctx.coeffs[0], ctx.coeffs[grid.n_z]);
        let m0 = 1.0 + dt * lo.f - dt * lo.h;
        dominance.record(m0 > 0.0, -m0, || "row 0".into());
        let mn = 1.0 + dt * hi.f - dt * hi.d;
        dominance.record(mn > 0.0, -mn, || format!("row {}", grid.n_z));

        let mut coefficients = CheckResult::new("upwind coefficients nonnegative");
        for (l, c) in ctx.coeffs.iter().enumerate() {
            let neg = c.d.min(c.h);
            coefficients.record(neg >= 0.0, -neg, || format!("l = {l}"));
        }
        Ok(Self {
            grid,
            model,
            terminal,
            terminal_check: CheckResult::new("terminal slice equals terminal cost"),
            dominance,
            coefficients,
            stats: SliceStats::new(),
            check_monotone: terminal.kind == TerminalKind::Liquidation,
        })
    }

    fn check_values(&self, n: usize, values: &[f64], stats: &mut SliceStats) {
        if !self.check_monotone {
            return;
        }
        let nq1 = self.grid.n_q + 1;
        for (l, row) in values.chunks(nq1).enumerate() {
            for j in 0..self.grid.n_q {
                let rise = row[j + 1] - row[j];
                let tol = MONOTONE_TOLERANCE * (1.0 + row[j].abs());
                stats
                    .monotone
                    .record(rise <= tol, rise, || format!("(n, l, j) = ({n}, {l}, {j})"));
            }
        }
    }

    fn check_policy_row(&self, n: usize, l: usize, a_row: &[f64]) -> SliceStats {
        let mut st = SliceStats::new();
        let g = self.grid;
        let s = &self.model.storage;
        let frame = g.frame(n, self.model);
        let z = g.z(l);
        let at = |j: usize| move || format!("(n, l, j) = ({n}, {l}, {j})");
        for (j, &a) in a_row.iter().enumerate() {
            let q = g.q(j);
            match feasible_discrete(&frame, z, q, s) {
                Ok(k) => {
                    let gap = (k.lo - a).max(a - k.hi).max(0.0);
                    st.feasible.record(gap <= FEASIBILITY_TOLERANCE, gap, at(j));
                    let cands = control_candidates(&frame, z, q, k, g.dq, s);
                    st.bang_bang.record(cands.contains(a), 1.0, at(j));
                }
                Err(_) => {
                    st.feasible.record(false, f64::INFINITY, at(j));
                    st.bang_bang.record(false, 1.0, at(j));
                }
            }
            match interp_weights(&frame, z, j, a, g, s) {
                Ok(w) => {
                    let neg = w.lower.min(w.center).min(w.upper);
                    let sum_err = (w.lower + w.center + w.upper - 1.0).abs();
                    let ok = neg >= 0.0 && sum_err <= WEIGHT_SUM_TOLERANCE;
                    st.weights.record(ok, sum_err.max(-neg), at(j));
                }
                Err(_) => st.weights.record(false, f64::INFINITY, at(j)),
            }
        }
        st
    }

    pub fn report(&self) -> ValidationReport {
        ValidationReport {
            checks: vec![
                self.terminal_check.clone(),
                self.stats.monotone.clone(),
                self.stats.feasible.clone(),
                self.stats.bang_bang.clone(),
                self.stats.weights.clone(),
                self.dominance.clone(),
                self.coefficients.clone(),
            ],
        }
    }
}

impl SliceSink for Battery<'_> {
    fn terminal(&mut self, values: &[f64]) -> Result<()> {
        let nq1 = self.grid.n_q + 1;
        for (l, row) in values.chunks(nq1).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let phi = terminal_cost(self.grid.q(j), self.terminal);
                self.terminal_check
                    .record(v == phi, (v - phi).abs(), || format!("(l, j) = ({l}, {j})"));
            }
        }
        let mut st = SliceStats::new();
        self.check_values(self.grid.n_t, values, &mut st);
        self.stats.merge(st);
        Ok(())
    }

    fn slice(&mut self, n: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        let nq1 = self.grid.n_q + 1;
        let mut st = SliceStats::new();
        self.check_values(n, values, &mut st);
        let rows: Vec<SliceStats> = policy
            .par_chunks(nq1)
            .enumerate()
            .map(|(l, row)| self.check_policy_row(n, l, row))
            .collect();
        for r in rows {
            st.merge(r);
        }
        self.stats.merge(st);
        Ok(())
    }
}

/// Runs the battery over stored cubes, slices in solve order.
pub fn validate_cubes(
    values: &ValueCube,
    policy: &PolicyCube,
    grid: &Grid3,
    model: &ModelConfig,
    terminal: &TerminalSpec,
) -> Result<ValidationReport> {
    let mut b = Battery::new(grid, model, terminal)?;
    b.terminal(values.slice(grid.n_t))?;
    for n in (0..grid.n_t).rev() {
        b.slice(n, values.slice(n), policy.slice(n))?;
    }
    Ok(b.report())
}

/// SHA-256 over every emitted slice, in emission order.
#[derive(Default)]
pub struct HashSink(Sha256);

impl HashSink {
    pub fn finish(self) -> [u8; 32] {
        self.0.finalize().into()
    }
}

impl SliceSink for HashSink {
    fn terminal(&mut self, values: &[f64]) -> Result<()> {
        for x in values {
            self.0.update(x.to_le_bytes());
        }
        Ok(())
    }

    fn slice(&mut self, _n: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        for x in values.iter().chain(policy) {
            self.0.update(x.to_le_bytes());
        }
        Ok(())
    }
}

/// Digest of stored cubes in the same order as [`HashSink`] sees a solve.
pub fn cube_digest(values: &ValueCube, policy: &PolicyCube) -> [u8; 32] {
    let mut h = HashSink::default();
    let nt = values.n_t;
    h.terminal(values.slice(nt)).expect("infallible");
    for n in (0..nt).rev() {
        h.slice(n, values.slice(n), policy.slice(n)).expect("infallible");
    }
    h.finish()
}

/// Solves once per thread count and compares the digests of the cubes.
pub fn determinism_check(
    model: &ModelConfig,
    grid: &Grid3,
    terminal: &TerminalSpec,
    thread_counts: &[usize],
) -> Result<(CheckResult, Vec<[u8; 32]>)> {
    let mut digests = Vec::new();
    for &k in thread_counts {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| crate::Error::Numerical(format!("thread pool: {e}")))?;
        let d = pool.install(|| -> Result<[u8; 32]> {
            let mut h = HashSink::default();
            backward_recursion_with(model, grid, terminal, &mut h)?;
            Ok(h.finish())
        })?;
        digests.push(d);
    }
    let mut c = CheckResult::new("bit-identical across thread counts");
    for (i, d) in digests.iter().enumerate().skip(1) {
        c.record(d == &digests[0], 1.0, || format!("{} threads", thread_counts[i]));
    }
    Ok((c, digests))
}
