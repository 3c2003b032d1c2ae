//! Demand seasonality, the Ornstein-Uhlenbeck demand noise and the storage
//! temperature ODE.

use crate::grid::StepFrame;
use crate::model::{OuParams, SeasonalityParams, StorageParams};

/// Deseasonalized demand and storage temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateX {
    pub z: f64,
    pub q: f64,
}

#[inline]
pub fn seasonality_at(t: f64, s: &SeasonalityParams) -> f64 {
    s.at(t)
}

/// Residual demand `μ(t) + z`; positive means unsatisfied demand.
#[inline]
pub fn residual_demand(t: f64, z: f64, s: &SeasonalityParams) -> f64 {
    s.at(t) + z
}

/// Exact transition of the zero-mean OU process over `dt` given a standard
/// normal draw.
#[inline]
pub fn ou_exact_step(z: f64, dt: f64, noise: f64, ou: &OuParams) -> f64 {
    let decay = (-ou.kappa * dt).exp();
    // 1 - e^{-2κdt} without cancellation for small κdt.
    let var = -(-2.0 * ou.kappa * dt).exp_m1() / (2.0 * ou.kappa);
    z * decay + ou.sigma * var.sqrt() * noise
}

/// Temperature drift `dQ/dt` [°C/h] with demand and ambient frozen at step `frame.n`.
#[inline]
pub fn storage_drift(frame: &StepFrame, z: f64, q: f64, a: f64, s: &StorageParams) -> f64 {
    -((1.0 - a) * frame.residual(z) + s.loss_rate() * (q - frame.q_amb)) / s.heat_capacity()
}

/// One explicit Euler step of the temperature ODE from `q` under control `a`.
#[inline]
pub fn arrival_point(frame: &StepFrame, z: f64, q: f64, a: f64, s: &StorageParams) -> f64 {
    let c = s.heat_capacity();
    let ag = s.loss_rate();
    (1.0 - ag * frame.dt / c) * q
        + frame.dt / c * ((a - 1.0) * frame.residual(z) + ag * frame.q_amb)
}

/// Compensation rate `r*(q) = -Aγ(q - Q_ambⁿ)`: the overproduction whose
/// injection exactly offsets the heat loss.
#[inline]
pub fn compensation_rate(frame: &StepFrame, q: f64, s: &StorageParams) -> f64 {
    -s.loss_rate() * (q - frame.q_amb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn frame(mu: f64, q_amb: f64, dt: f64) -> StepFrame {
        StepFrame {
            n: 0,
            t: 0.0,
            dt,
            mu,
            q_amb,
            s_buy: 0.32,
            s_sell: 0.30,
        }
    }

    fn basic_season() -> SeasonalityParams {
        presets::basic_model().seasonality
    }

    #[test]
    fn seasonality_key_points() {
        let s = basic_season();
        assert!((seasonality_at(0.0, &s) - 1.37).abs() < 1e-12);
        assert!((seasonality_at(4380.0, &s) + 0.63).abs() < 1e-12);
        assert!((seasonality_at(2190.0, &s) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn residual_demand_examples() {
        let s = basic_season();
        assert!((residual_demand(0.0, 0.0, &s) - 1.37).abs() < 1e-12);
        let mu = seasonality_at(1234.5, &s);
        assert_eq!(residual_demand(1234.5, -mu, &s), 0.0);
        assert!((residual_demand(4380.0, -2.0, &s) + 2.63).abs() < 1e-12);
    }

    #[test]
    fn ou_step_without_noise() {
        let ou = presets::basic_model().ou;
        assert!((ou_exact_step(1.0, 1.0, 0.0, &ou) - 0.993_719_803_391_054_7).abs() < 1e-15);
        assert_eq!(ou_exact_step(1.0, 1e6, 0.0, &ou), 0.0);
    }

    #[test]
    fn ou_step_variance_matches_closed_form() {
        let ou = presets::basic_model().ou;
        let dt = 100.0;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..n)
            .map(|_| ou_exact_step(0.0, dt, StandardNormal.sample(&mut rng), &ou))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = ou.sigma.powi(2) * (1.0 - (-2.0 * ou.kappa * dt).exp()) / (2.0 * ou.kappa);
        // Standard error of a normal sample variance: target * sqrt(2 / (n - 1)).
        let se = target * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn ou_mean_decays_exponentially() {
        let ou = presets::basic_model().ou;
        let z0 = 1.5;
        let steps = 200;
        let paths = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ends: Vec<f64> = (0..paths)
            .map(|_| {
                (0..steps).fold(z0, |z, _| {
                    ou_exact_step(z, 1.0, StandardNormal.sample(&mut rng), &ou)
                })
            })
            .collect();
        let mean = ends.iter().sum::<f64>() / paths as f64;
        let sd = (ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (paths - 1) as f64).sqrt();
        let target = z0 * (-ou.kappa * steps as f64).exp();
        assert!((mean - target).abs() < 3.0 * sd / (paths as f64).sqrt());
    }

    #[test]
    fn drift_examples() {
        let s = presets::basic_model().storage;
        let f = frame(1.37, 25.0, 1.0);
        assert_eq!(storage_drift(&f, 0.0, 25.0, 1.0, &s), 0.0);
        let d = storage_drift(&f, 0.0, 85.0, 1.0, &s);
        assert!((d + 0.033_806_204_722_249_156).abs() < 1e-12, "{d}");
        // Overproduction equal to the compensation rate holds the temperature.
        let q = 60.0;
        let r_star = compensation_rate(&f, q, &s);
        let f2 = frame(r_star, 25.0, 1.0);
        assert!(storage_drift(&f2, 0.0, q, 0.0, &s).abs() < 1e-15);
    }

    #[test]
    fn arrival_examples() {
        let mut s = presets::basic_model().storage;
        let f = frame(1.37, 25.0, 1.0);
        let q = arrival_point(&f, 0.3, 85.0, 1.0, &s);
        assert!((q - 84.966_193_795_277_75).abs() < 1e-10, "{q}");
        let r_star = compensation_rate(&f, 70.0, &s);
        let f2 = frame(r_star, 25.0, 1.0);
        assert!((arrival_point(&f2, 0.0, 70.0, 0.0, &s) - 70.0).abs() < 1e-12);
        s.gamma = 0.0;
        assert_eq!(arrival_point(&f, 0.3, 55.0, 1.0, &s), 55.0);
    }

    #[test]
    fn arrival_slope_in_control() {
        let s = presets::basic_model().storage;
        for (mu, z, q) in [(1.37, 0.4, 40.0), (-0.63, -1.1, 80.0), (0.2, 0.1, 55.0)] {
            let f = frame(mu, 25.0, 1.0);
            let h = 1e-3;
            let fd = (arrival_point(&f, z, q, 0.5 + h, &s) - arrival_point(&f, z, q, 0.5 - h, &s))
                / (2.0 * h);
            let exact = f.dt * (mu + z) / s.heat_capacity();
            assert!((fd - exact).abs() < 1e-10, "{fd} vs {exact}");
        }
    }

    #[test]
    fn arrival_is_first_order_in_dt() {
        let s = presets::basic_model().storage;
        let (z, q, a) = (0.5, 60.0, 0.3);
        let mut errs = Vec::new();
        let mut dt = 1.0;
        for _ in 0..6 {
            let f = frame(1.0, 20.0, dt);
            let g = storage_drift(&f, z, q, a, &s);
            // The Euler step reproduces q + g dt exactly; compare against the exact ODE flow.
            let k = s.loss_rate() / s.heat_capacity();
            let q_inf = f.q_amb - (1.0 - a) * f.residual(z) / s.loss_rate();
            let exact = q_inf + (q - q_inf) * (-k * dt).exp();
            let euler = arrival_point(&f, z, q, a, &s);
            assert!((euler - (q + g * dt)).abs() < 1e-12);
            errs.push((euler - exact).abs() / (dt * dt));
            dt /= 2.0;
        }
        let c = errs[0];
        assert!(errs.iter().all(|e| *e <= 1.01 * c), "{errs:?}");
    }
}
