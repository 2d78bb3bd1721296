use serde::{Deserialize, Serialize};

use crate::fo;
use crate::sim::Trace;

/// Mismatch magnitudes below this fraction of the cluster rating are noise.
pub const NOISE_FLOOR_REL: f64 = 1e-6;
/// Deviation norms above this count as an active projection (A).
pub const ACTIVE_DEVIATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionDiagnostics {
    /// Largest measured one-step ratio `(|e(t+1)| - |Δw(t)|) / |e(t)|`; 0 without samples.
    pub q_hat: f64,
    /// Largest wind step (W).
    pub omega_bar: f64,
    /// Largest safety-layer deviation (A).
    pub e_f_bar: f64,
    /// Largest summed steady-map slope at the applied currents (W/A).
    pub l_h: f64,
    /// `(omega_bar + l_h * e_f_bar) / (1 - q_hat)`; infinite when `q_hat >= 1`.
    pub uub_bound: f64,
    pub noise_floor: f64,
    pub samples: usize,
    pub excluded_relaxed: usize,
    pub excluded_projection: usize,
    pub excluded_wind: usize,
    pub excluded_floor: usize,
    /// Largest `|e|` over the second half of the trace (W).
    pub tail_max_mismatch: f64,
}

impl ContractionDiagnostics {
    pub fn bound_holds(&self) -> bool {
        self.tail_max_mismatch <= self.uub_bound
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn contraction_diagnostics(trace: &Trace) -> ContractionDiagnostics {
    let cfg = &trace.config;
    let steps = &trace.steps;
    let noise_floor = NOISE_FLOOR_REL * cfg.cluster_rating();
    let dw: Vec<f64> = steps.windows(2).map(|w| (w[1].p_wind - w[0].p_wind).abs()).collect();
    let dw_median = median(&dw);

    let mut d = ContractionDiagnostics {
        q_hat: 0.0,
        omega_bar: dw.iter().copied().fold(0.0, f64::max),
        e_f_bar: steps.iter().map(|s| s.deviation_norm).fold(0.0, f64::max),
        l_h: 0.0,
        uub_bound: 0.0,
        noise_floor,
        samples: 0,
        excluded_relaxed: 0,
        excluded_projection: 0,
        excluded_wind: 0,
        excluded_floor: 0,
        tail_max_mismatch: steps[steps.len() / 2..].iter().map(|s| s.mismatch.abs()).fold(0.0, f64::max),
    };
    for s in steps {
        let slope: f64 = s
            .u_applied
            .iter()
            .zip(&cfg.electrolyzers)
            .map(|(&u, p)| fo::steady_power_gradient(p, u, cfg.ambient_temp))
            .sum();
        d.l_h = d.l_h.max(slope);
    }
    for (k, w) in steps.windows(2).enumerate() {
        let (now, next) = (&w[0], &w[1]);
        if now.relaxed {
            d.excluded_relaxed += 1;
        } else if now.deviation_norm > ACTIVE_DEVIATION {
            d.excluded_projection += 1;
        } else if dw[k] > dw_median {
            d.excluded_wind += 1;
        } else if now.mismatch.abs() < noise_floor {
            d.excluded_floor += 1;
        } else {
            d.samples += 1;
            let ratio = (next.mismatch.abs() - dw[k]) / now.mismatch.abs();
            d.q_hat = d.q_hat.max(ratio);
        }
    }
    d.uub_bound = if d.q_hat < 1.0 {
        (d.omega_bar + d.l_h * d.e_f_bar) / (1.0 - d.q_hat)
    } else {
        f64::INFINITY
    };
    d
}

/// Whether `|e|` strictly decreases at every step until it first drops
/// below `floor`.
pub fn strictly_decreasing_until(trace: &Trace, floor: f64) -> bool {
    for w in trace.steps.windows(2) {
        let (a, b) = (w[0].mismatch.abs(), w[1].mismatch.abs());
        if a < floor {
            return true;
        }
        if b >= a {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ElectrolyzerParams, SimConfig};
    use crate::sim::run_samples;

    fn constant_wind_trace(steps: usize) -> Trace {
        let mut cfg = SimConfig::reference(4);
        cfg.horizon_steps = steps;
        let p = ElectrolyzerParams::reference();
        let u0 = [9.0, 10.0, 11.0, 12.0];
        cfg.initial_currents = u0.to_vec();
        cfg.initial_temps = u0.iter().map(|&u| fo::steady_temperature(&p, u, 25.0)).collect();
        let target: f64 = u0.iter().map(|&u| fo::steady_power(&p, u, 25.0)).sum::<f64>() - 400.0;
        run_samples(&cfg, &vec![target; steps], "const").unwrap()
    }

    #[test]
    fn constant_wind_contracts() {
        let trace = constant_wind_trace(150);
        let d = contraction_diagnostics(&trace);
        assert!(d.samples > 5);
        assert!(d.q_hat > 0.0 && d.q_hat < 1.0, "{d:?}");
        assert_eq!(d.omega_bar, 0.0);
        // the opening step overshoots the budget and is projected
        assert_eq!(d.excluded_projection, 1);
        assert!(trace.steps[1..].iter().all(|s| s.deviation_norm <= ACTIVE_DEVIATION));
        assert!(strictly_decreasing_until(&trace, d.noise_floor));
        assert!(d.bound_holds());
    }

    #[test]
    fn fixed_point_degenerates() {
        let mut cfg = SimConfig::reference(2);
        cfg.horizon_steps = 20;
        let p = ElectrolyzerParams::reference();
        cfg.initial_currents = vec![6.0; 2];
        cfg.initial_temps = vec![fo::steady_temperature(&p, 6.0, 25.0); 2];
        let w = 2.0 * fo::steady_power(&p, 6.0, 25.0);
        let trace = run_samples(&cfg, &[w; 20], "fixed").unwrap();
        let d = contraction_diagnostics(&trace);
        assert_eq!(d.q_hat, 0.0);
        assert_eq!(d.samples, 0);
        assert_eq!(d.uub_bound, d.l_h * d.e_f_bar);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }
}
