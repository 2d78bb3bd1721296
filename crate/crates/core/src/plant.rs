//! Electrolyzer power, lumped thermal and three-compartment HTO models,
//! with the explicit-Euler stepper the controller is designed against.

use serde::{Deserialize, Serialize};

use crate::config::ElectrolyzerParams;
use crate::error::{Error, Result};

const KELVIN_OFFSET: f64 = 273.15;

/// Temperature plus the hydrogen held in the anode, separator liquid and
/// separator gas compartments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyzerState {
    /// Stack temperature (°C).
    pub t_ele: f64,
    /// Dissolved H2 in the anode compartment (mol).
    pub n_an: f64,
    /// Dissolved H2 in the separator liquid (mol).
    pub n_sep_l: f64,
    /// H2 in the separator gas phase (mol).
    pub n_sep_g: f64,
}

impl ElectrolyzerState {
    /// Empty compartments at temperature `t_ele`.
    pub fn fresh(t_ele: f64) -> Self {
        Self {
            t_ele,
            n_an: 0.0,
            n_sep_l: 0.0,
            n_sep_g: 0.0,
        }
    }
}

/// Result of one Euler step. `clamped` is set when a mole balance would have
/// gone negative and was cut at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: ElectrolyzerState,
    pub clamped: bool,
}

/// Ohmic coefficient `rho1 + rho2 * T`.
#[inline]
pub fn resistance(p: &ElectrolyzerParams, t_ele: f64) -> f64 {
    p.rho1 + p.rho2 * t_ele
}

/// Temperature entering the HTO gas-law term.
#[inline]
pub fn hto_temperature(p: &ElectrolyzerParams, t_ele: f64) -> f64 {
    if p.absolute_temperature_in_hto {
        t_ele + KELVIN_OFFSET
    } else {
        t_ele
    }
}

pub fn cell_voltage(p: &ElectrolyzerParams, t_ele: f64, i: f64) -> Result<f64> {
    if i < 0.0 {
        return Err(Error::NegativeCurrent(i));
    }
    Ok(p.u_rev + resistance(p, t_ele) * i)
}

fn valid_resistance(p: &ElectrolyzerParams, t_ele: f64) -> Result<f64> {
    let r = resistance(p, t_ele);
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::ModelValidity { t_ele, value: r })
    }
}

/// Largest current keeping the stack voltage at its limit (A).
pub fn max_current(p: &ElectrolyzerParams, t_ele: f64) -> Result<f64> {
    let r = valid_resistance(p, t_ele)?;
    Ok((p.u_max() - p.u_rev) / r)
}

pub fn max_power(p: &ElectrolyzerParams, t_ele: f64) -> Result<f64> {
    Ok(p.u_max() * max_current(p, t_ele)?)
}

/// Instantaneous electrical power `u(T, i) * i` (W). `i` must be ≥ 0.
#[inline]
pub fn electrolyzer_power(p: &ElectrolyzerParams, t_ele: f64, i: f64) -> f64 {
    debug_assert!(i >= 0.0, "negative current {i}");
    (p.u_rev + resistance(p, t_ele) * i) * i
}

/// Hydrogen crossover into the anode stream (mol/s), affine in current.
#[inline]
pub fn crossover_rate(p: &ElectrolyzerParams, i: f64) -> f64 {
    (p.cross_c0 + p.cross_c1 * i).max(0.0)
}

/// Oxygen production (mol/s).
#[inline]
pub fn oxygen_rate(p: &ElectrolyzerParams, i: f64) -> f64 {
    p.eta_f * f64::from(p.n_cell) * i / (2.0 * p.z_h * p.faraday)
}

/// Hydrogen fraction in the separator gas.
#[inline]
pub fn hto(p: &ElectrolyzerParams, s: &ElectrolyzerState) -> f64 {
    hto_temperature(p, s.t_ele) * s.n_sep_g * p.gas_const / (p.pressure * p.v_sep_g)
}

/// Gas-phase H2 outflow (mol/s) at current `i`.
pub fn sep_gas_outflow(p: &ElectrolyzerParams, s: &ElectrolyzerState, i: f64) -> f64 {
    s.n_sep_g * oxygen_rate(p, i) / (p.pressure * p.v_sep_g / (p.gas_const * hto_temperature(p, s.t_ele)))
}

/// HTO as the ratio of gas-phase H2 outflow to oxygen production. Agrees
/// with [`hto`] for any `i > 0`.
pub fn hto_from_flows(p: &ElectrolyzerParams, s: &ElectrolyzerState, i: f64) -> f64 {
    sep_gas_outflow(p, s, i) / oxygen_rate(p, i)
}

/// One explicit-Euler step with current `i` held over `dt`.
pub fn step(p: &ElectrolyzerParams, s: &ElectrolyzerState, i: f64, t_a: f64, dt: f64) -> StepOutcome {
    debug_assert!(i >= 0.0 && dt > 0.0);
    let t = s.t_ele;
    let t_next = t - dt / (p.r_th * p.c_th) * (t - t_a) + dt / p.c_th * resistance(p, t) * i * i;

    let anode_out = s.n_an * p.v_lye / p.v_an / 2.0;
    let liquid_out = s.n_sep_l / p.tau_sep_l;
    let gas_out = sep_gas_outflow(p, s, i);

    let n_an = s.n_an + (crossover_rate(p, i) - anode_out) * dt;
    let n_sep_l = s.n_sep_l + (anode_out - liquid_out) * dt;
    let n_sep_g = s.n_sep_g + liquid_out * dt - gas_out * dt;

    let clamped = n_an < 0.0 || n_sep_l < 0.0 || n_sep_g < 0.0;
    StepOutcome {
        state: ElectrolyzerState {
            t_ele: t_next,
            n_an: n_an.max(0.0),
            n_sep_l: n_sep_l.max(0.0),
            n_sep_g: n_sep_g.max(0.0),
        },
        clamped,
    }
}
