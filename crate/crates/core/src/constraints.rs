//! State-dependent control sets.
//!
//! A control `a ∈ [0, 1]` is the share of the residual demand traded with the
//! network; `1 - a` goes through the storage. Near the temperature bounds
//! only part of that range keeps the storage admissible.

use serde::Serialize;

use crate::dynamics::compensation_rate;
use crate::error::{Error, Result};
use crate::grid::StepFrame;
use crate::model::StorageParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ControlInterval {
    pub const FULL: Self = Self { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (0.0 <= lo && lo <= hi && hi <= 1.0).then_some(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }

    #[inline]
    pub fn project(&self, a: f64) -> f64 {
        a.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Admissible controls of the continuous-time problem at `(t, z, q)`.
///
/// Binding only on the boundary: an empty storage facing demand must buy
/// everything, and a full storage facing overproduction may only take in
/// what compensates its heat loss.
pub fn feasible_continuous(
    frame: &StepFrame,
    z: f64,
    q: f64,
    s: &StorageParams,
) -> Result<ControlInterval> {
    if !(s.q_min <= q && q <= s.q_max) {
        return Err(Error::State(format!(
            "temperature {q} outside [{}, {}]",
            s.q_min, s.q_max
        )));
    }
    let r = frame.residual(z);
    if r >= 0.0 {
        if q == s.q_min {
            return Ok(ControlInterval { lo: 1.0, hi: 1.0 });
        }
    } else if q == s.q_max {
        let c_star = (1.0 + s.loss_rate() * (s.q_max - frame.q_amb) / r).clamp(0.0, 1.0);
        return Ok(ControlInterval { lo: c_star, hi: 1.0 });
    }
    Ok(ControlInterval::FULL)
}

/// Bounds on `a` that keep the Euler arrival point inside the temperature range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiBounds {
    Bounded { lo: f64, hi: f64 },
    /// Zero residual demand: the arrival point does not depend on `a`.
    Unconstrained,
}

/// The lower and upper control bounds written with `|μⁿ + z|`.
pub fn chi_bounds(frame: &StepFrame, z: f64, q: f64, s: &StorageParams) -> ChiBounds {
    let r = frame.residual(z);
    if r == 0.0 {
        return ChiBounds::Unconstrained;
    }
    let c = s.heat_capacity();
    let loss = s.loss_rate() * frame.dt * (q - frame.q_amb);
    let denom = r.abs() * frame.dt;
    ChiBounds::Bounded {
        lo: 1.0 - (c * (q - s.q_min) - loss) / denom,
        hi: 1.0 + (c * (s.q_max - q) + loss) / denom,
    }
}

fn loss_adjusted_capacity(frame: &StepFrame, s: &StorageParams) -> Result<f64> {
    let d = s.heat_capacity() - s.loss_rate() * frame.dt;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::InvalidConfig(vec![crate::error::Violation::new(
            "storage.gamma",
            format!("heat loss over one step exceeds the storage heat capacity (m_Q c_P - A γ Δt = {d})"),
        )]))
    }
}

/// Temperature below which discharging at full rate empties the storage
/// within one step.
pub fn discharge_threshold(frame: &StepFrame, z: f64, s: &StorageParams) -> Result<f64> {
    let d = loss_adjusted_capacity(frame, s)?;
    let r = frame.residual(z);
    Ok((s.heat_capacity() * s.q_min - frame.dt * (s.loss_rate() * frame.q_amb - r)) / d)
}

/// Charge threshold split by the compensation rate at the current temperature
/// `q`: `q_max` when `μⁿ + z <= r*(q)`, otherwise the temperature from which
/// charging at full rate lands on `q_max`.
pub fn charge_threshold(frame: &StepFrame, z: f64, q: f64, s: &StorageParams) -> Result<f64> {
    let d = loss_adjusted_capacity(frame, s)?;
    let r = frame.residual(z);
    if r <= compensation_rate(frame, q, s) {
        Ok(s.q_max)
    } else {
        Ok((s.heat_capacity() * s.q_max - frame.dt * (s.loss_rate() * frame.q_amb - r)) / d)
    }
}

/// Controls that are admissible at `(t_n, z, q)` and keep the one-step
/// arrival point in `[q_min, q_max]`.
///
/// The arrival point is affine in `a`, so the admissible set is the interval
/// between the two bound-hitting controls, intersected with the continuous
/// set and `[0, 1]`. With unsatisfied demand its lower end is `x₁ⁿ`, with
/// overproduction `x₂ⁿ`.
pub fn feasible_discrete(
    frame: &StepFrame,
    z: f64,
    q: f64,
    s: &StorageParams,
) -> Result<ControlInterval> {
    let cont = feasible_continuous(frame, z, q, s)?;
    let r = frame.residual(z);
    if r == 0.0 {
        return Ok(ControlInterval::FULL);
    }
    let c = s.heat_capacity();
    let loss = s.loss_rate() * frame.dt * (q - frame.q_amb);
    let rdt = r * frame.dt;
    // Controls at which the arrival point equals q_min and q_max respectively.
    let to_empty = 1.0 - (c * (q - s.q_min) - loss) / rdt;
    let to_full = 1.0 + (c * (s.q_max - q) + loss) / rdt;
    let (arr_lo, arr_hi) = if r > 0.0 {
        (to_empty, to_full)
    } else {
        (to_full, to_empty)
    };
    let lo = arr_lo.max(cont.lo).max(0.0);
    let hi = arr_hi.min(cont.hi).min(1.0);
    if lo <= hi {
        Ok(ControlInterval { lo, hi })
    } else {
        Err(Error::EmptyFeasibleSet {
            n: frame.n,
            z,
            q,
            lo,
            hi,
        })
    }
}
