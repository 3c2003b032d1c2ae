//! Physical and economic parameters of the prosumer heating system.
//!
//! Units follow the rest of the crate: hours, kW, kWh, °C and €/kWh. All
//! structs deserialize from JSON with unknown keys rejected.

use std::f64::consts::TAU;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Specific heat capacity of water, 4186 J/(kg·K) expressed in kWh/(kg·K).
pub const WATER_HEAT_CAPACITY: f64 = 0.001_162_8;

fn default_c_p() -> f64 {
    WATER_HEAT_CAPACITY
}

fn default_pi_min() -> f64 {
    22.0
}

/// Zero-mean Ornstein-Uhlenbeck dynamics of the deseasonalized residual demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    /// Mean-reversion speed [1/h].
    pub kappa: f64,
    /// Volatility [kW/h^1/2].
    pub sigma: f64,
    /// Initial deseasonalized demand [kW].
    #[serde(default)]
    pub z0: f64,
}

impl OuParams {
    /// Stationary standard deviation `sigma / sqrt(2 kappa)`.
    pub fn asymptotic_std(&self) -> f64 {
        self.sigma / (2.0 * self.kappa).sqrt()
    }
}

/// One term `amplitude * cos(2π (t - reference_time) / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineTerm {
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub reference_time: f64,
}

impl CosineTerm {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (TAU * (t - self.reference_time) / self.period).cos()
    }
}

fn cosine_sum(level: f64, terms: &[CosineTerm], t: f64) -> f64 {
    terms.iter().fold(level, |acc, c| acc + c.eval(t))
}

/// Long-term mean residual demand `L0 + Σ L_i cos(2π(t - t_i)/ρ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonalityParams {
    /// Long-term mean [kW].
    pub l0: f64,
    #[serde(default)]
    pub components: Vec<CosineTerm>,
}

impl SeasonalityParams {
    /// Single-component form used throughout the numerical study.
    pub fn single(l0: f64, amplitude: f64, period: f64, reference_time: f64) -> Self {
        Self {
            l0,
            components: vec![CosineTerm {
                amplitude,
                period,
                reference_time,
            }],
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        cosine_sum(self.l0, &self.components, t)
    }
}

/// External storage: a stirred water tank with Newton cooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageParams {
    /// Water mass [kg].
    pub m_q: f64,
    /// Specific heat capacity [kWh/(kg·K)].
    #[serde(default = "default_c_p")]
    pub c_p: f64,
    /// Surface area [m²].
    pub area: f64,
    /// Heat-transfer coefficient [kW/(m²·K)].
    pub gamma: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Cylinder radius [m], informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Cylinder height [m], informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
}

impl StorageParams {
    /// Heat capacity of the water body `m_Q c_P` [kWh/K].
    #[inline]
    pub fn heat_capacity(&self) -> f64 {
        self.m_q * self.c_p
    }

    /// Loss conductance `A γ` [kW/K].
    #[inline]
    pub fn loss_rate(&self) -> f64 {
        self.area * self.gamma
    }
}

/// Energy held by a full storage relative to an empty one [kWh].
pub fn energy_capacity(storage: &StorageParams) -> f64 {
    storage.m_q * storage.c_p * (storage.q_max - storage.q_min)
}

/// Ambient temperature around the storage, piecewise constant per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbientProfile {
    Constant(f64),
    /// One value per time-step index `0..=N_t`.
    Steps(Vec<f64>),
}

impl AmbientProfile {
    /// Value on step `n`; indices past the end repeat the last entry.
    #[inline]
    pub fn at_index(&self, n: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Steps(v) => v[n.min(v.len() - 1)],
        }
    }

    /// Number of steps covered, `None` when constant.
    pub fn len(&self) -> Option<usize> {
        match self {
            Self::Constant(_) => None,
            Self::Steps(v) => Some(v.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Steps(v) if v.is_empty())
    }

    /// Minimum over the first `steps` step indices.
    pub fn min_over(&self, steps: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Steps(v) => v
                .iter()
                .take(steps.max(1))
                .copied()
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Heat prices with a bid-ask spread, plus tariffs for electricity and the
/// terminal contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceParams {
    /// Long-term mean buy price [€/kWh].
    pub l0: f64,
    #[serde(default)]
    pub components: Vec<CosineTerm>,
    /// Bid-ask spread [€/kWh].
    pub xi: f64,
    /// Electricity tariff [€/kWh].
    pub s_el: f64,
    /// Liquidation price for heat left at the horizon [€/kWh].
    pub s_liq: f64,
    /// Penalty price for falling short of `q_crit` [€/kWh].
    pub s_pen: f64,
    /// Critical terminal temperature [°C].
    pub q_crit: f64,
}

impl PriceParams {
    #[inline]
    pub fn buy(&self, t: f64) -> f64 {
        cosine_sum(self.l0, &self.components, t)
    }

    #[inline]
    pub fn sell(&self, t: f64) -> f64 {
        self.buy(t) - self.xi
    }
}

/// Pump cost constants and the temperatures of the heat-pump circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpParams {
    /// Flow-rate penalty constant.
    pub d1: f64,
    /// Temperature-lift penalty constant [1/K].
    pub d2: f64,
    /// Heat-pump outlet temperature [°C].
    pub pi_d: f64,
    /// Minimum internal-storage temperature [°C].
    #[serde(default = "default_pi_min")]
    pub pi_min: f64,
    /// Connecting-pipe temperature [°C].
    pub p_c: f64,
}

impl PumpParams {
    /// Electricity per kWh bought from the network: `d1 + d2 (π_d - P_c)`.
    #[inline]
    pub fn lift_factor(&self) -> f64 {
        self.d1 + self.d2 * (self.pi_d - self.p_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub ou: OuParams,
    pub seasonality: SeasonalityParams,
    pub storage: StorageParams,
    pub ambient: AmbientProfile,
    pub prices: PriceParams,
    pub pumps: PumpParams,
    /// Discount rate [1/h].
    pub delta: f64,
    /// Horizon T [h].
    pub horizon: f64,
}

/// Minimum and maximum of `f` over `[t0, t1]`, sampled every quarter hour
/// (at least 20 000 samples).
pub fn sampled_extrema(f: impl Fn(f64) -> f64, t0: f64, t1: f64) -> (f64, f64) {
    let span = (t1 - t0).max(0.0);
    let n = ((span / 0.25).ceil() as usize).max(20_000);
    (0..=n)
        .map(|i| f(t0 + span * i as f64 / n as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

/// A [`ModelConfig`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedModel(ModelConfig);

impl Deref for ValidatedModel {
    type Target = ModelConfig;

    fn deref(&self) -> &ModelConfig {
        &self.0
    }
}

impl ValidatedModel {
    pub fn config(&self) -> &ModelConfig {
        &self.0
    }

    pub fn into_inner(self) -> ModelConfig {
        self.0
    }

    /// Pump bounds measured against the minimum prices over
    /// the horizon. These are reported, not enforced.
    pub fn advisories(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let t = self.horizon;
        let (min_sell, _) = sampled_extrema(|s| self.prices.sell(s), 0.0, t);
        let (min_buy, _) = sampled_extrema(|s| self.prices.buy(s), 0.0, t);
        let s_el = self.prices.s_el;
        if self.pumps.d1 * s_el >= min_sell {
            out.push(Violation::new(
                "pumps.d1",
                format!(
                    "d1*S_el = {} is not below the minimum sell price {min_sell}",
                    self.pumps.d1 * s_el
                ),
            ));
        }
        if self.pumps.lift_factor() * s_el >= min_buy {
            out.push(Violation::new(
                "pumps.d2",
                format!(
                    "(d1 + d2 (pi_d - P_c)) S_el = {} is not below the minimum buy price {min_buy}",
                    self.pumps.lift_factor() * s_el
                ),
            ));
        }
        out
    }
}

fn finite(v: &mut Vec<Violation>, field: &str, x: f64) -> bool {
    if x.is_finite() {
        true
    } else {
        v.push(Violation::new(field, format!("must be finite, got {x}")));
        false
    }
}

fn check_terms(v: &mut Vec<Violation>, prefix: &str, terms: &[CosineTerm]) {
    for (i, c) in terms.iter().enumerate() {
        let f = format!("{prefix}.components[{i}]");
        finite(v, &format!("{f}.amplitude"), c.amplitude);
        finite(v, &format!("{f}.reference_time"), c.reference_time);
        if !(c.period > 0.0 && c.period.is_finite()) {
            v.push(Violation::new(
                format!("{f}.period"),
                format!("must be > 0, got {}", c.period),
            ));
        }
    }
}

/// Checks every parameter invariant and returns the model on success.
///
/// Pump constants are checked against the long-term mean prices
/// (`d1 S_el < L0_S - ξ`, `(d1 + d2 (π_d - P_c)) S_el < L0_S`); the stricter
/// minimum-price bounds are available through [`ValidatedModel::advisories`].
pub fn validate(config: ModelConfig) -> Result<ValidatedModel> {
    let mut v = Vec::new();
    let c = &config;

    if finite(&mut v, "ou.kappa", c.ou.kappa) && c.ou.kappa <= 0.0 {
        v.push(Violation::new("ou.kappa", format!("must be > 0, got {}", c.ou.kappa)));
    }
    if finite(&mut v, "ou.sigma", c.ou.sigma) && c.ou.sigma <= 0.0 {
        v.push(Violation::new("ou.sigma", format!("must be > 0, got {}", c.ou.sigma)));
    }
    finite(&mut v, "ou.z0", c.ou.z0);

    finite(&mut v, "seasonality.l0", c.seasonality.l0);
    check_terms(&mut v, "seasonality", &c.seasonality.components);

    let s = &c.storage;
    for (name, x) in [("storage.m_q", s.m_q), ("storage.c_p", s.c_p), ("storage.area", s.area)] {
        if finite(&mut v, name, x) && x <= 0.0 {
            v.push(Violation::new(name, format!("must be > 0, got {x}")));
        }
    }
    if finite(&mut v, "storage.gamma", s.gamma) && s.gamma < 0.0 {
        v.push(Violation::new("storage.gamma", format!("must be >= 0, got {}", s.gamma)));
    }
    if finite(&mut v, "storage.q_min", s.q_min)
        && finite(&mut v, "storage.q_max", s.q_max)
        && s.q_min >= s.q_max
    {
        v.push(Violation::new(
            "storage.q_min",
            format!("must be < q_max = {}, got {}", s.q_max, s.q_min),
        ));
    }

    match &c.ambient {
        AmbientProfile::Constant(x) => {
            finite(&mut v, "ambient", *x);
        }
        AmbientProfile::Steps(xs) => {
            if xs.is_empty() {
                v.push(Violation::new("ambient", "profile must not be empty"));
            }
            for (i, x) in xs.iter().enumerate() {
                finite(&mut v, &format!("ambient[{i}]"), *x);
            }
        }
    }

    let p = &c.prices;
    finite(&mut v, "prices.l0", p.l0);
    check_terms(&mut v, "prices", &p.components);
    if finite(&mut v, "prices.xi", p.xi) && p.xi <= 0.0 {
        v.push(Violation::new("prices.xi", format!("must be > 0, got {}", p.xi)));
    }
    if finite(&mut v, "prices.s_el", p.s_el) && p.s_el <= 0.0 {
        v.push(Violation::new("prices.s_el", format!("must be > 0, got {}", p.s_el)));
    }
    finite(&mut v, "prices.s_pen", p.s_pen);
    finite(&mut v, "prices.q_crit", p.q_crit);

    if finite(&mut v, "delta", c.delta) && c.delta < 0.0 {
        v.push(Violation::new("delta", format!("must be >= 0, got {}", c.delta)));
    }
    let horizon_ok = finite(&mut v, "horizon", c.horizon) && c.horizon > 0.0;
    if c.horizon.is_finite() && c.horizon <= 0.0 {
        v.push(Violation::new("horizon", format!("must be > 0, got {}", c.horizon)));
    }
    if horizon_ok && finite(&mut v, "prices.s_liq", p.s_liq) {
        let sell_t = p.sell(c.horizon);
        if p.s_liq >= sell_t {
            v.push(Violation::new(
                "prices.s_liq",
                format!("must be < S_sell(T) = {sell_t}, got {}", p.s_liq),
            ));
        }
    }

    let u = &c.pumps;
    for (name, x) in [
        ("pumps.d1", u.d1),
        ("pumps.d2", u.d2),
        ("pumps.pi_d", u.pi_d),
        ("pumps.pi_min", u.pi_min),
        ("pumps.p_c", u.p_c),
    ] {
        finite(&mut v, name, x);
    }
    if u.d1 <= 0.0 {
        v.push(Violation::new("pumps.d1", format!("must be > 0, got {}", u.d1)));
    }
    if u.d2 <= 0.0 {
        v.push(Violation::new("pumps.d2", format!("must be > 0, got {}", u.d2)));
    }
    if !(s.q_max > u.pi_d) {
        v.push(Violation::new(
            "pumps.pi_d",
            format!("must be < q_max = {}, got {}", s.q_max, u.pi_d),
        ));
    }
    if !(u.pi_d > u.pi_min) {
        v.push(Violation::new(
            "pumps.pi_min",
            format!("must be < pi_d = {}, got {}", u.pi_d, u.pi_min),
        ));
    }
    if !(u.pi_min > u.p_c) {
        v.push(Violation::new(
            "pumps.p_c",
            format!("must be < pi_min = {}, got {}", u.pi_min, u.p_c),
        ));
    }

    let mean_sell = p.l0 - p.xi;
    if u.d1 * p.s_el >= mean_sell {
        v.push(Violation::new(
            "pumps.d1",
            format!(
                "d1*S_el = {} must be below the long-term sell price {mean_sell}",
                u.d1 * p.s_el
            ),
        ));
    }
    if u.lift_factor() * p.s_el >= p.l0 {
        v.push(Violation::new(
            "pumps.d2",
            format!(
                "(d1 + d2 (pi_d - P_c)) S_el = {} must be below the long-term buy price {}",
                u.lift_factor() * p.s_el,
                p.l0
            ),
        ));
    }

    if v.is_empty() {
        Ok(ValidatedModel(config))
    } else {
        Err(Error::InvalidConfig(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn violations(cfg: ModelConfig) -> Vec<Violation> {
        match validate(cfg) {
            Err(Error::InvalidConfig(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn table_one_parameters_are_accepted() {
        let m = validate(presets::basic_model()).unwrap();
        assert_eq!(m.config(), &presets::basic_model());
    }

    #[test]
    fn validation_is_idempotent() {
        let m = validate(presets::basic_model()).unwrap();
        let again = validate(m.config().clone()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn equal_outlet_and_pipe_temperature_is_rejected() {
        let mut cfg = presets::basic_model();
        cfg.pumps.pi_d = 20.0;
        cfg.pumps.p_c = 20.0;
        let v = violations(cfg);
        assert!(v.iter().any(|x| x.field == "pumps.pi_min"), "{v:?}");
    }

    #[test]
    fn large_flow_penalty_is_rejected() {
        let mut cfg = presets::basic_model();
        cfg.pumps.d1 = 0.5;
        let v = violations(cfg);
        assert!(v.iter().any(|x| x.field == "pumps.d1"), "{v:?}");
    }

    #[test]
    fn table_one_pump_constants_exceed_minimum_price_bounds() {
        // min S_sell over the year is 0, so the strict bound is only advisory.
        let m = validate(presets::basic_model()).unwrap();
        let adv = m.advisories();
        assert!(adv.iter().any(|x| x.field == "pumps.d1"));
        assert!(adv.iter().any(|x| x.field == "pumps.d2"));
    }

    #[test]
    fn violations_are_collected() {
        let mut cfg = presets::basic_model();
        cfg.ou.kappa = -1.0;
        cfg.storage.q_min = 90.0;
        cfg.delta = -0.1;
        let v = violations(cfg);
        for f in ["ou.kappa", "storage.q_min", "delta"] {
            assert!(v.iter().any(|x| x.field == f), "missing {f} in {v:?}");
        }
    }

    #[test]
    fn liquidation_price_must_stay_below_terminal_sell_price() {
        let mut cfg = presets::basic_model();
        cfg.prices.s_liq = 0.31;
        let v = violations(cfg);
        assert!(v.iter().any(|x| x.field == "prices.s_liq"));
    }

    #[test]
    fn energy_capacity_matches_reported_value() {
        let s = presets::basic_model().storage;
        assert!((energy_capacity(&s) - 547.9).abs() <= 0.1);
    }

    #[test]
    fn energy_capacity_zero_width() {
        let mut s = presets::basic_model().storage;
        s.q_max = s.q_min;
        assert_eq!(energy_capacity(&s), 0.0);
    }

    #[test]
    fn energy_capacity_with_rounded_heat_capacity() {
        let mut s = presets::basic_model().storage;
        s.c_p = 0.0012;
        assert!((energy_capacity(&s) - 565.488).abs() < 1e-9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut json = serde_json::to_value(presets::basic_model()).unwrap();
        json["ou"]["theta"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<ModelConfig>(json).is_err());
    }

    #[test]
    fn ambient_accepts_scalar_and_profile() {
        let a: AmbientProfile = serde_json::from_str("25.0").unwrap();
        assert_eq!(a.at_index(100), 25.0);
        let b: AmbientProfile = serde_json::from_str("[20.0, 21.0]").unwrap();
        assert_eq!(b.at_index(0), 20.0);
        assert_eq!(b.at_index(7), 21.0);
        assert_eq!(b.min_over(2), 20.0);
    }

    proptest::proptest! {
        #[test]
        fn energy_capacity_is_linear(k in 0.1f64..10.0, m in 100.0f64..1e4, c in 1e-4f64..1e-2, w in 1.0f64..100.0) {
            let base = StorageParams { m_q: m, c_p: c, area: 1.0, gamma: 0.0, q_min: 0.0, q_max: w, radius: None, height: None };
            let e = energy_capacity(&base);
            let scaled = [
                StorageParams { m_q: k * m, ..base.clone() },
                StorageParams { c_p: k * c, ..base.clone() },
                StorageParams { q_max: k * w, ..base.clone() },
            ];
            for s in scaled {
                proptest::prop_assert!((energy_capacity(&s) - k * e).abs() <= 1e-9 * k * e);
            }
        }
    }
}
