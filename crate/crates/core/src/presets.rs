//! Reference parameter sets: a 7.85 m³ hot-water tank serving a single
//! household over one year, in four variants (basic, weak insulation, strong
//! seasonality, perfect insulation).

use crate::config::{CalibrationTargets, GammaTargets, GridSpec, RunConfig};
use crate::costs::TerminalKind;
use crate::model::{
    AmbientProfile, ModelConfig, OuParams, PriceParams, PumpParams, SeasonalityParams,
    StorageParams, WATER_HEAT_CAPACITY,
};

pub const YEAR_HOURS: f64 = 8760.0;
pub const GAMMA_BASIC: f64 = 2.34e-4;
pub const GAMMA_WEAK: f64 = 4.68e-4;
pub const L0_BASIC: f64 = 0.37;
pub const L_BASIC: f64 = 1.00;
pub const L0_STRONG: f64 = 0.37;
pub const L_STRONG: f64 = 4.04;

pub fn basic_model() -> ModelConfig {
    ModelConfig {
        ou: OuParams {
            kappa: 0.0063,
            sigma: 0.075,
            z0: 0.0,
        },
        seasonality: SeasonalityParams::single(L0_BASIC, L_BASIC, YEAR_HOURS, 0.0),
        storage: StorageParams {
            m_q: 7854.0,
            c_p: WATER_HEAT_CAPACITY,
            area: 21.99,
            gamma: GAMMA_BASIC,
            q_min: 25.0,
            q_max: 85.0,
            radius: Some(1.0),
            height: Some(2.5),
        },
        ambient: AmbientProfile::Constant(25.0),
        prices: PriceParams {
            l0: 0.17,
            components: vec![crate::model::CosineTerm {
                amplitude: 0.15,
                period: YEAR_HOURS,
                reference_time: 0.0,
            }],
            xi: 0.02,
            s_el: 0.33,
            s_liq: 0.004,
            s_pen: 0.32,
            q_crit: 50.0,
        },
        pumps: PumpParams {
            d1: 0.01,
            d2: 0.012,
            pi_d: 25.0,
            pi_min: 22.0,
            p_c: 20.0,
        },
        delta: 1.712e-6,
        horizon: YEAR_HOURS,
    }
}

pub fn weak_model() -> ModelConfig {
    let mut m = basic_model();
    m.storage.gamma = GAMMA_WEAK;
    m
}

pub fn perfect_model() -> ModelConfig {
    let mut m = basic_model();
    m.storage.gamma = 0.0;
    m
}

pub fn strong_model() -> ModelConfig {
    let mut m = basic_model();
    m.seasonality = SeasonalityParams::single(L0_STRONG, L_STRONG, YEAR_HOURS, 0.0);
    m
}

/// Hourly steps over one year, 85 demand cells on ±2 kW and 80 temperature cells.
pub fn paper_grid() -> GridSpec {
    GridSpec {
        n_t: 8760,
        n_z: 85,
        n_q: 80,
        c_eps: 3,
        z_bound: Some(2.0),
    }
}

pub fn calibration_targets() -> CalibrationTargets {
    CalibrationTargets {
        gamma: Some(GammaTargets {
            t_star: 720.0,
            q_tilde: 65.0,
        }),
        t1: Some(45.0 * 24.0),
        t2: Some(15.0 * 24.0),
    }
}

fn run(model: ModelConfig) -> RunConfig {
    RunConfig {
        model,
        grid: paper_grid(),
        terminal: TerminalKind::Liquidation,
        calibration: Some(calibration_targets()),
    }
}

pub fn basic() -> RunConfig {
    run(basic_model())
}

pub fn weak() -> RunConfig {
    run(weak_model())
}

pub fn strong() -> RunConfig {
    let mut r = run(strong_model());
    if let Some(c) = r.calibration.as_mut() {
        c.t2 = Some(5.0 * 24.0);
    }
    r
}

pub fn perfect() -> RunConfig {
    run(perfect_model())
}

/// A 5×5×5-cell problem for oracle comparisons. The demand domain is
/// narrowed to half a stationary standard deviation so the positivity bound
/// holds with five cells.
pub fn toy() -> RunConfig {
    let mut model = basic_model();
    // Ten-hour seasonal cycle so the five steps see both signs of demand.
    model.horizon = 10.0;
    model.seasonality.components[0].period = 10.0;
    model.prices.components[0].period = 10.0;
    let s0 = model.ou.asymptotic_std();
    RunConfig {
        model,
        grid: GridSpec {
            n_t: 5,
            n_z: 5,
            n_q: 5,
            c_eps: 3,
            z_bound: Some(0.5 * s0),
        },
        terminal: TerminalKind::Liquidation,
        calibration: None,
    }
}
