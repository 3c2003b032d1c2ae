//! Heat prices, running cost, discounted stage cost and terminal cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::grid::StepFrame;
use crate::model::{ModelConfig, PriceParams, PumpParams, StorageParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    /// Stored heat above `q_min` is sold at `S_liq`.
    #[default]
    Liquidation,
    /// Shortfall below `q_crit` is charged at `S_pen`, surplus above it sold at `S_liq`.
    PenaltyLiquidation,
}

/// Terminal contract with its prices resolved from the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalSpec {
    pub kind: TerminalKind,
    pub s_liq: f64,
    pub s_pen: f64,
    pub q_crit: f64,
    pub q_min: f64,
    pub heat_capacity: f64,
}

impl TerminalSpec {
    pub fn new(kind: TerminalKind, model: &ModelConfig) -> Result<Self> {
        let p = &model.prices;
        let s = &model.storage;
        let mut v = Vec::new();
        let sell_t = p.sell(model.horizon);
        if !(p.s_liq < sell_t) {
            v.push(Violation::new(
                "prices.s_liq",
                format!("must be below S_sell(T) = {sell_t}, got {}", p.s_liq),
            ));
        }
        if kind == TerminalKind::PenaltyLiquidation {
            let buy_t = p.buy(model.horizon);
            if !(p.s_pen > buy_t) {
                v.push(Violation::new(
                    "prices.s_pen",
                    format!("must exceed S_buy(T) = {buy_t}, got {}", p.s_pen),
                ));
            }
            if !(s.q_min <= p.q_crit && p.q_crit <= s.q_max) {
                v.push(Violation::new(
                    "prices.q_crit",
                    format!("must lie in [{}, {}], got {}", s.q_min, s.q_max, p.q_crit),
                ));
            }
        }
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v));
        }
        Ok(Self {
            kind,
            s_liq: p.s_liq,
            s_pen: p.s_pen,
            q_crit: p.q_crit,
            q_min: s.q_min,
            heat_capacity: s.heat_capacity(),
        })
    }
}

#[inline]
pub fn price_buy(t: f64, prices: &PriceParams) -> f64 {
    prices.buy(t)
}

#[inline]
pub fn price_sell(t: f64, prices: &PriceParams) -> f64 {
    prices.sell(t)
}

/// Running cost rate ψ [€/h] with residual demand `r` and the prices of `frame`.
#[inline]
pub fn running_cost_rate(frame: &StepFrame, r: f64, a: f64, pumps: &PumpParams, s_el: f64) -> f64 {
    if r >= 0.0 {
        r * (a * (frame.s_buy + pumps.d2 * (pumps.pi_d - pumps.p_c) * s_el) + pumps.d1 * s_el)
    } else {
        r * (a * frame.s_sell - pumps.d1 * s_el)
    }
}

/// Running cost ψ(t, z, a) [€/h].
pub fn running_cost(t: f64, z: f64, a: f64, model: &ModelConfig) -> f64 {
    let frame = StepFrame {
        n: 0,
        t,
        dt: 0.0,
        mu: model.seasonality.at(t),
        q_amb: f64::NAN,
        s_buy: model.prices.buy(t),
        s_sell: model.prices.sell(t),
    };
    running_cost_rate(&frame, frame.residual(z), a, &model.pumps, model.prices.s_el)
}

/// `∫₀^dt e^{-δs} ds`.
#[inline]
pub fn discount_integral(delta: f64, dt: f64) -> f64 {
    if delta == 0.0 {
        dt
    } else {
        -(-delta * dt).exp_m1() / delta
    }
}

/// Discounted cost of holding `a` over step `frame.n` with ψ frozen at `t_n` [€].
#[inline]
pub fn stage_cost(frame: &StepFrame, z: f64, a: f64, model: &ModelConfig) -> f64 {
    running_cost_rate(frame, frame.residual(z), a, &model.pumps, model.prices.s_el)
        * discount_integral(model.delta, frame.dt)
}

/// Terminal cost Φ(q) [€]; negative values are revenue.
#[inline]
pub fn terminal_cost(q: f64, spec: &TerminalSpec) -> f64 {
    let c = spec.heat_capacity;
    match spec.kind {
        TerminalKind::Liquidation => -spec.s_liq * c * (q - spec.q_min),
        TerminalKind::PenaltyLiquidation => {
            if q < spec.q_crit {
                spec.s_pen * c * (spec.q_crit - q)
            } else {
                -spec.s_liq * c * (q - spec.q_crit)
            }
        }
    }
}

/// Convenience for callers holding only the storage record.
pub fn liquidation_value(q: f64, s_liq: f64, storage: &StorageParams) -> f64 {
    -s_liq * storage.heat_capacity() * (q - storage.q_min)
}
