//! Steady-state power map and the sampled feedback-optimization law.
//!
//! The gradient is taken on the steady-state map evaluated at ambient
//! temperature, not on the live plant temperature; feedback absorbs the
//! difference.

use serde::{Deserialize, Serialize};

use crate::config::{ControllerParams, ElectrolyzerParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyMapEval {
    /// Steady power (W).
    pub h: f64,
    /// Steady power slope (W/A).
    pub dh_du: f64,
    /// Steady temperature (°C).
    pub t_hat: f64,
}

/// Thermal fixed point under constant current `u`.
pub fn steady_temperature(p: &ElectrolyzerParams, u: f64, t_a: f64) -> f64 {
    let u2 = u * u;
    (t_a + p.r_th * p.rho1 * u2) / (1.0 - p.r_th * p.rho2 * u2)
}

pub fn steady_power(p: &ElectrolyzerParams, u: f64, t_a: f64) -> f64 {
    let u2 = u * u;
    p.u_rev * u + (p.rho1 + p.rho2 * t_a) * u2 / (1.0 - p.r_th * p.rho2 * u2)
}

pub fn steady_power_gradient(p: &ElectrolyzerParams, u: f64, t_a: f64) -> f64 {
    let denom = 1.0 - p.r_th * p.rho2 * u * u;
    p.u_rev + 2.0 * (p.rho1 + p.rho2 * t_a) * u / (denom * denom)
}

pub fn steady_map(p: &ElectrolyzerParams, u: f64, t_a: f64) -> SteadyMapEval {
    SteadyMapEval {
        h: steady_power(p, u, t_a),
        dh_du: steady_power_gradient(p, u, t_a),
        t_hat: steady_temperature(p, u, t_a),
    }
}

/// `sum_i h_i(u_i) - p_wind` (W).
pub fn power_mismatch(us: &[f64], params: &[ElectrolyzerParams], t_a: f64, p_wind: f64) -> f64 {
    us.iter()
        .zip(params)
        .map(|(&u, p)| steady_power(p, u, t_a))
        .sum::<f64>()
        - p_wind
}

/// Surrogate tracking objective `0.5 * e^2`.
pub fn surrogate_objective(us: &[f64], params: &[ElectrolyzerParams], t_a: f64, p_wind: f64) -> f64 {
    let e = power_mismatch(us, params, t_a, p_wind);
    0.5 * e * e
}

/// One gradient step on the surrogate. No clipping: components may leave the
/// admissible region and are corrected by the safety layer.
pub fn fo_update(
    us: &[f64],
    params: &[ElectrolyzerParams],
    t_a: f64,
    p_wind: f64,
    ctrl: &ControllerParams,
) -> Vec<f64> {
    let e = power_mismatch(us, params, t_a, p_wind);
    let gain = ctrl.epsilon * ctrl.dt;
    us.iter()
        .zip(params)
        .map(|(&u, p)| u - gain * steady_power_gradient(p, u, t_a) * e)
        .collect()
}
