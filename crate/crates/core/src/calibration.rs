//! Calibration of the crossover slope.
//!
//! The slope is chosen so that an open-loop run at a fixed fraction of rated
//! current settles at the HTO limit. Higher load then settles below the
//! limit, lower load above it, which is what makes the barrier bind during
//! long low-wind stretches.

use serde::{Deserialize, Serialize};

use crate::config::{rated_current, ElectrolyzerParams};
use crate::plant::{self, ElectrolyzerState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    /// Fraction of rated current held during the run.
    pub load_fraction: f64,
    /// HTO the run should settle at.
    pub target_hto: f64,
    pub ambient_temp: f64,
    /// Open-loop horizon (s).
    pub horizon: f64,
    pub dt: f64,
    /// Relative bracket width at which bisection stops.
    pub rel_tol: f64,
}

impl CalibrationSpec {
    pub fn for_params(p: &ElectrolyzerParams) -> Self {
        Self {
            load_fraction: 0.1,
            target_hto: p.hto_max,
            ambient_temp: 25.0,
            horizon: 48.0 * 3600.0,
            dt: 1.0,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cross_c1: f64,
    /// HTO at the end of the open-loop run with the returned slope.
    pub final_hto: f64,
    pub current: f64,
    pub iterations: usize,
    /// Slope from the steady-state balance `c0 + c1 i = hto * n_O2(i)`.
    pub closed_form: f64,
}

/// HTO after holding `current` from empty compartments for the configured horizon.
pub fn open_loop_hto(p: &ElectrolyzerParams, spec: &CalibrationSpec, current: f64) -> f64 {
    let mut s = ElectrolyzerState::fresh(spec.ambient_temp);
    let steps = (spec.horizon / spec.dt).round() as usize;
    for _ in 0..steps {
        s = plant::step(p, &s, current, spec.ambient_temp, spec.dt).state;
    }
    plant::hto(p, &s)
}

/// Bisection on `cross_c1`; every other parameter is taken from `p`.
pub fn calibrate_crossover(p: &ElectrolyzerParams, spec: &CalibrationSpec) -> Calibration {
    let current = spec.load_fraction * rated_current(p);
    let closed_form = (spec.target_hto * plant::oxygen_rate(p, current) - p.cross_c0) / current;
    let eval = |c1: f64| {
        let mut q = p.clone();
        q.cross_c1 = c1;
        open_loop_hto(&q, spec, current)
    };
    let mut lo = 0.0;
    let mut hi = 1e-7;
    while eval(hi) < spec.target_hto {
        lo = hi;
        hi *= 2.0;
    }
    let mut iterations = 0;
    while hi - lo > spec.rel_tol * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < spec.target_hto {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let cross_c1 = 0.5 * (lo + hi);
    Calibration {
        cross_c1,
        final_hto: eval(cross_c1),
        current,
        iterations,
        closed_form,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::defaults;

    #[test]
    fn bisection_matches_steady_balance() {
        let p = ElectrolyzerParams::reference();
        let spec = CalibrationSpec {
            rel_tol: 1e-8,
            ..CalibrationSpec::for_params(&p)
        };
        let cal = calibrate_crossover(&p, &spec);
        assert!((cal.cross_c1 / cal.closed_form - 1.0).abs() < 1e-4, "{cal:?}");
        assert!((cal.final_hto - p.hto_max).abs() < 1e-6);
        assert!((cal.cross_c1 / defaults::CROSSOVER_SLOPE - 1.0).abs() < 1e-4);
    }

    #[test]
    fn calibrated_defaults_bracket_the_limit() {
        let p = ElectrolyzerParams::reference();
        let spec = CalibrationSpec::for_params(&p);
        let i_rated = rated_current(&p);
        let low = open_loop_hto(&p, &spec, 0.05 * i_rated);
        let rated = open_loop_hto(&p, &spec, i_rated);
        assert!(low > p.hto_max);
        assert!(rated < 0.5 * p.hto_max);
    }
}
