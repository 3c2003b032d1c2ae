//! Equidistant time × demand × temperature mesh and the step-size
//! conditions that keep the scheme monotone.

use serde::Serialize;

use crate::config::GridSpec;
use crate::error::{Error, Result, Violation};
use crate::model::{ModelConfig, OuParams};

/// Symmetric demand bounds `±c_eps σ / sqrt(2κ)`.
pub fn z_bounds(ou: &OuParams, c_eps: f64) -> (f64, f64) {
    let half = c_eps * ou.asymptotic_std();
    (-half, half)
}

/// Largest demand step for which the upwind coefficients stay nonnegative.
pub fn positivity_bound(ou: &OuParams) -> f64 {
    ou.sigma * (2.0 * ou.kappa).sqrt() / (6.0 * ou.kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid3 {
    pub n_t: usize,
    pub n_z: usize,
    pub n_q: usize,
    pub dt: f64,
    pub dz: f64,
    pub dq: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub t0: f64,
    pub t_end: f64,
}

/// Quantities frozen over one time step `[t_n, t_{n+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFrame {
    pub n: usize,
    pub t: f64,
    pub dt: f64,
    /// Seasonal mean demand μⁿ [kW].
    pub mu: f64,
    /// Ambient temperature Q_ambⁿ [°C].
    pub q_amb: f64,
    pub s_buy: f64,
    pub s_sell: f64,
}

impl StepFrame {
    /// Left-endpoint sample of every time-dependent input at `t`.
    pub fn at(n: usize, t: f64, dt: f64, model: &ModelConfig) -> Self {
        let s_buy = model.prices.buy(t);
        Self {
            n,
            t,
            dt,
            mu: model.seasonality.at(t),
            q_amb: model.ambient.at_index(n),
            s_buy,
            s_sell: s_buy - model.prices.xi,
        }
    }

    /// Residual demand `μⁿ + z`.
    #[inline]
    pub fn residual(&self, z: f64) -> f64 {
        self.mu + z
    }
}

impl Grid3 {
    /// Builds the mesh and hard-fails on the positivity and CFL conditions.
    pub fn new(spec: &GridSpec, model: &ModelConfig) -> Result<Self> {
        let g = Self::unchecked(spec, model)?;
        check_positivity(&g, &model.ou)?;
        check_cfl(&g, model)?;
        Ok(g)
    }

    /// Builds the mesh without the positivity and CFL checks.
    pub fn unchecked(spec: &GridSpec, model: &ModelConfig) -> Result<Self> {
        let mut v = Vec::new();
        if spec.n_t < 1 {
            v.push(Violation::new("grid.n_t", "must be >= 1"));
        }
        if spec.n_z < 3 {
            v.push(Violation::new("grid.n_z", format!("must be >= 3, got {}", spec.n_z)));
        }
        if spec.n_q < 3 {
            v.push(Violation::new("grid.n_q", format!("must be >= 3, got {}", spec.n_q)));
        }
        let half = match spec.z_bound {
            Some(b) => {
                if !(b > 0.0 && b.is_finite()) {
                    v.push(Violation::new("grid.z_bound", format!("must be > 0, got {b}")));
                }
                b
            }
            None => {
                if !(3..=5).contains(&spec.c_eps) {
                    v.push(Violation::new(
                        "grid.c_eps",
                        format!("must be 3, 4 or 5, got {}", spec.c_eps),
                    ));
                }
                z_bounds(&model.ou, spec.c_eps as f64).1
            }
        };
        if let Some(len) = model.ambient.len() {
            if len < spec.n_t + 1 {
                v.push(Violation::new(
                    "model.ambient",
                    format!("profile has {len} entries, need N_t + 1 = {}", spec.n_t + 1),
                ));
            }
        }
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v));
        }
        let s = &model.storage;
        Ok(Self {
            n_t: spec.n_t,
            n_z: spec.n_z,
            n_q: spec.n_q,
            dt: model.horizon / spec.n_t as f64,
            dz: 2.0 * half / spec.n_z as f64,
            dq: (s.q_max - s.q_min) / spec.n_q as f64,
            z_min: -half,
            z_max: half,
            q_min: s.q_min,
            q_max: s.q_max,
            t0: 0.0,
            t_end: model.horizon,
        })
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    #[inline]
    pub fn z(&self, l: usize) -> f64 {
        self.z_min + l as f64 * self.dz
    }

    #[inline]
    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq
    }

    /// Number of nodes in the (z, q) plane.
    #[inline]
    pub fn plane_len(&self) -> usize {
        (self.n_z + 1) * (self.n_q + 1)
    }

    pub fn frame(&self, n: usize, model: &ModelConfig) -> StepFrame {
        StepFrame::at(n, self.t(n), self.dt, model)
    }

    /// Seasonal extremes over the time nodes `t_0..t_{N_t}`.
    pub fn seasonal_extremes(&self, model: &ModelConfig) -> (f64, f64) {
        (0..=self.n_t)
            .map(|n| model.seasonality.at(self.t(n)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                (lo.min(m), hi.max(m))
            })
    }

    /// Smallest temperature step admitted by the CFL condition.
    pub fn cfl_min_dq(&self, model: &ModelConfig) -> f64 {
        let (mu_min, mu_max) = self.seasonal_extremes(model);
        let s = &model.storage;
        let q_amb_min = model.ambient.min_over(self.n_t + 1);
        let transport = (mu_min + self.z_min).abs().max(mu_max + self.z_max);
        self.dt / s.heat_capacity() * (transport - s.loss_rate() * (s.q_max - q_amb_min))
    }
}

pub fn check_positivity(grid: &Grid3, ou: &OuParams) -> Result<()> {
    let bound = positivity_bound(ou);
    if grid.dz <= bound {
        Ok(())
    } else {
        Err(Error::Positivity { dz: grid.dz, bound })
    }
}

pub fn check_cfl(grid: &Grid3, model: &ModelConfig) -> Result<()> {
    let required = grid.cfl_min_dq(model);
    if grid.dq >= required {
        Ok(())
    } else {
        Err(Error::Cfl {
            dq: grid.dq,
            required,
        })
    }
}
