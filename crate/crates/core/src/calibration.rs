//! Closed-form calibration of the loss coefficient, the demand seasonality
//! and the admissible pump constants.
//!
//! The ambient temperature is taken equal to `q_min` throughout, so an idle
//! storage cools exponentially towards its empty level.

use serde::Serialize;

use crate::config::GammaTargets;
use crate::error::{Error, Result};
use crate::model::{sampled_extrema, PriceParams, PumpParams, StorageParams};

/// Loss coefficient γ such that a full, idle storage cools to `q_tilde` at `t_star`.
pub fn calibrate_gamma(cal: &GammaTargets, storage: &StorageParams) -> Result<f64> {
    if !(cal.t_star > 0.0) {
        return Err(Error::Calibration(format!(
            "t_star must be > 0, got {}",
            cal.t_star
        )));
    }
    if !(cal.q_tilde > storage.q_min) {
        return Err(Error::Calibration(format!(
            "q_tilde = {} must exceed q_min = {}",
            cal.q_tilde, storage.q_min
        )));
    }
    if cal.q_tilde > storage.q_max {
        return Err(Error::Calibration(format!(
            "q_tilde = {} must not exceed q_max = {}",
            cal.q_tilde, storage.q_max
        )));
    }
    let ratio = (storage.q_max - storage.q_min) / (cal.q_tilde - storage.q_min);
    Ok(storage.heat_capacity() / (storage.area * cal.t_star) * ratio.ln())
}

/// Constant demand that empties a full storage exactly after `t` hours.
fn depleting_demand(t: f64, gamma: f64, storage: &StorageParams) -> f64 {
    let span = storage.q_max - storage.q_min;
    if gamma == 0.0 {
        return storage.heat_capacity() * span / t;
    }
    let a_gamma = storage.area * gamma;
    let exponent = a_gamma * t / storage.heat_capacity();
    a_gamma * span / exponent.exp_m1()
}

/// Long-term mean demand `L0` draining a full storage in `t1` hours.
///
/// `gamma == 0` uses the lossless limit `m_Q c_P (q_max - q_min) / t1`.
pub fn calibrate_l0(t1: f64, gamma: f64, storage: &StorageParams) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::Calibration(format!("t1 must be > 0, got {t1}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Calibration(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(depleting_demand(t1, gamma, storage))
}

/// Seasonal amplitude `L` such that the peak demand `L0 + L` drains a full
/// storage in `t2` hours.
pub fn calibrate_l(t2: f64, l0: f64, gamma: f64, storage: &StorageParams) -> Result<f64> {
    if !(t2 > 0.0) {
        return Err(Error::Calibration(format!("t2 must be > 0, got {t2}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Calibration(format!("gamma must be >= 0, got {gamma}")));
    }
    let l = depleting_demand(t2, gamma, storage) - l0;
    if l < 0.0 {
        return Err(Error::Calibration(format!(
            "amplitude L = {l} is negative; t2 = {t2} is too long relative to the depletion time of L0 = {l0}"
        )));
    }
    Ok(l)
}

/// Upper bounds for the pump constants derived from the minimum heat prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpBounds {
    pub min_sell: f64,
    pub min_buy: f64,
    /// `min S_sell / S_el`.
    pub d1_max: f64,
    /// `(min S_buy - d1 S_el) / (S_el (π_d - P_c))`, evaluated with the configured `d1`.
    pub d2_max: f64,
    /// True when `min S_sell` is zero up to rounding or negative, which makes
    /// the `d1` bound unsatisfiable.
    pub degenerate: bool,
}

impl PumpBounds {
    pub fn admits(&self, pumps: &PumpParams) -> bool {
        !self.degenerate && pumps.d1 < self.d1_max && pumps.d2 < self.d2_max
    }
}

/// Minimum prices are found by sampling `[0, horizon]` every quarter hour.
pub fn pump_constant_bounds(prices: &PriceParams, pumps: &PumpParams, horizon: f64) -> PumpBounds {
    let (min_sell, _) = sampled_extrema(|t| prices.sell(t), 0.0, horizon);
    let (min_buy, _) = sampled_extrema(|t| prices.buy(t), 0.0, horizon);
    let d1_max = min_sell / prices.s_el;
    let d2_max = (min_buy - pumps.d1 * prices.s_el) / (prices.s_el * (pumps.pi_d - pumps.p_c));
    PumpBounds {
        min_sell,
        min_buy,
        d1_max,
        d2_max,
        degenerate: min_sell <= 1e-12 * prices.l0.abs().max(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn storage() -> StorageParams {
        presets::basic_model().storage
    }

    fn targets() -> GammaTargets {
        GammaTargets {
            t_star: 720.0,
            q_tilde: 65.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Classical RK4 for a scalar autonomous ODE.
    fn rk4(f: impl Fn(f64) -> f64, y0: f64, t: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        (0..steps).fold(y0, |y, _| {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        })
    }

    #[test]
    fn gamma_reproduces_basic_value() {
        let g = calibrate_gamma(&targets(), &storage()).unwrap();
        assert!(rel(g, 2.34e-4) < 0.01, "{g}");
    }

    #[test]
    fn gamma_with_rounded_heat_capacity() {
        let mut s = storage();
        s.c_p = 0.0012;
        let g = calibrate_gamma(&targets(), &s).unwrap();
        // 7854 * 0.0012 / (21.99 * 720) * ln(1.5)
        assert!(rel(g, 2.413_614_490_739_369e-4) < 1e-12, "{g}");
    }

    #[test]
    fn gamma_vanishes_at_full_target() {
        let cal = GammaTargets {
            t_star: 720.0,
            q_tilde: 85.0,
        };
        assert_eq!(calibrate_gamma(&cal, &storage()).unwrap(), 0.0);
    }

    #[test]
    fn gamma_rejects_target_at_or_below_empty() {
        let cal = GammaTargets {
            t_star: 720.0,
            q_tilde: 25.0,
        };
        assert!(matches!(
            calibrate_gamma(&cal, &storage()),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn gamma_round_trip_through_cooling_ode() {
        let s = storage();
        let g = calibrate_gamma(&targets(), &s).unwrap();
        let k = s.area * g / s.heat_capacity();
        let q = rk4(|q| -k * (q - s.q_min), s.q_max, 720.0, 20_000);
        assert!(rel(q, 65.0) < 1e-6, "{q}");
    }

    #[test]
    fn seasonality_reproduces_calibrated_table() {
        let s = storage();
        let g = presets::GAMMA_BASIC;
        let l0 = calibrate_l0(1080.0, g, &s).unwrap();
        assert!(rel(l0, 0.37) < 0.01, "{l0}");
        let basic = calibrate_l(360.0, l0, g, &s).unwrap();
        assert!(rel(basic, 1.00) < 0.01, "{basic}");
        let strong = calibrate_l(120.0, l0, g, &s).unwrap();
        assert!(rel(strong, 4.04) < 0.01, "{strong}");
    }

    #[test]
    fn lossless_limit_matches_small_gamma() {
        let s = storage();
        let exact = calibrate_l0(1080.0, 0.0, &s).unwrap();
        assert!((exact - 0.507_368_4).abs() < 1e-7);
        let near = calibrate_l0(1080.0, 1e-12, &s).unwrap();
        assert!(rel(near, exact) < 1e-6);
    }

    #[test]
    fn longer_depletion_means_smaller_demand() {
        let s = storage();
        let a = calibrate_l0(1080.0, 2.34e-4, &s).unwrap();
        let b = calibrate_l0(2160.0, 2.34e-4, &s).unwrap();
        assert!(b < a);
    }

    #[test]
    fn equal_depletion_times_give_zero_amplitude() {
        let s = storage();
        let l0 = calibrate_l0(1080.0, 2.34e-4, &s).unwrap();
        assert_eq!(calibrate_l(1080.0, l0, 2.34e-4, &s).unwrap(), 0.0);
        assert!(calibrate_l(2000.0, l0, 2.34e-4, &s).is_err());
    }

    #[test]
    fn calibrated_demands_drain_storage_on_time() {
        let s = storage();
        let g = presets::GAMMA_BASIC;
        let c = s.heat_capacity();
        let l0 = calibrate_l0(1080.0, g, &s).unwrap();
        let l = calibrate_l(360.0, l0, g, &s).unwrap();
        for (demand, t) in [(l0, 1080.0), (l0 + l, 360.0_f64)] {
            let drift = |q: f64| -(demand + s.area * g * (q - s.q_min)) / c;
            // Step the ODE hourly and find the first hour at which the tank is empty.
            let mut q = s.q_max;
            let mut hour = 0.0;
            while q > s.q_min {
                q = rk4(drift, q, 1.0, 10);
                hour += 1.0;
            }
            assert!((hour - t).abs() <= 1.0, "{hour} vs {t}");
            let exact = rk4(drift, s.q_max, t, 100_000);
            assert!((exact - s.q_min).abs() < 1e-6, "{exact}");
        }
    }

    #[test]
    fn pump_bounds_degenerate_with_reference_prices() {
        let m = presets::basic_model();
        let b = pump_constant_bounds(&m.prices, &m.pumps, m.horizon);
        assert!(b.min_sell.abs() < 1e-9, "{}", b.min_sell);
        assert!(b.d1_max.abs() < 1e-9);
        assert!(b.degenerate);
        assert!(!b.admits(&m.pumps));
    }

    #[test]
    fn pump_bounds_with_constant_price() {
        let m = presets::basic_model();
        let mut prices = m.prices.clone();
        prices.components.clear();
        prices.xi = 0.0;
        let b = pump_constant_bounds(&prices, &m.pumps, m.horizon);
        assert!((b.d1_max - 0.17 / 0.33).abs() < 1e-12);
        assert!((b.d1_max - 0.5152).abs() < 1e-4);
        assert!(!b.degenerate);
    }

    #[test]
    fn pump_bound_vanishes_with_expensive_electricity() {
        let m = presets::basic_model();
        let mut prices = m.prices.clone();
        prices.components.clear();
        let mut last = f64::INFINITY;
        for s_el in [1.0, 10.0, 1e3, 1e6] {
            prices.s_el = s_el;
            let b = pump_constant_bounds(&prices, &m.pumps, m.horizon);
            assert!(b.d1_max < last);
            last = b.d1_max;
        }
        assert!(last < 1e-6);
    }
}
