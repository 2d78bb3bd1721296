//! Seeded synthetic wind-power year.
//!
//! A slow AR(1) weather latent with a daily cycle is mapped through the
//! normal CDF onto a Weibull wind speed, perturbed by fast turbulence and
//! passed through a turbine power curve. Output is in per-unit of turbine
//! rating.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::wind::{WindProfile, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWind {
    pub days: usize,
    /// Sampling period (s).
    pub dt: f64,
    pub seed: u64,
    pub weibull_shape: f64,
    /// Weibull scale (m/s).
    pub weibull_scale: f64,
    /// Correlation time of the weather latent (h).
    pub synoptic_hours: f64,
    /// Daily-cycle amplitude on the latent.
    pub diurnal_amplitude: f64,
    /// Relative seasonal swing of the Weibull scale, windiest in mid-January.
    pub seasonal_amplitude: f64,
    /// Turbulence intensity.
    pub turbulence: f64,
    /// Correlation time of turbulence (s).
    pub turbulence_seconds: f64,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
}

impl Default for SyntheticWind {
    fn default() -> Self {
        Self {
            days: 365,
            dt: 60.0,
            seed: 2024,
            weibull_shape: 2.0,
            weibull_scale: 7.5,
            synoptic_hours: 30.0,
            diurnal_amplitude: 0.4,
            seasonal_amplitude: 0.15,
            turbulence: 0.08,
            turbulence_seconds: 600.0,
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 25.0,
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

impl SyntheticWind {
    /// Per-unit turbine output at hub speed `v` (m/s).
    pub fn power_curve(&self, v: f64) -> f64 {
        if v < self.cut_in || v >= self.cut_out {
            0.0
        } else if v >= self.rated_speed {
            1.0
        } else {
            let c3 = self.cut_in.powi(3);
            (v.powi(3) - c3) / (self.rated_speed.powi(3) - c3)
        }
    }

    pub fn generate(&self) -> WindProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let per_day = (SECONDS_PER_DAY / self.dt).round() as usize;
        let n = per_day * self.days;
        let phi_slow = (-self.dt / (self.synoptic_hours * 3600.0)).exp();
        let phi_fast = (-self.dt / self.turbulence_seconds).exp();
        let gain_slow = (1.0 - phi_slow * phi_slow).sqrt();
        let gain_fast = (1.0 - phi_fast * phi_fast).sqrt();
        let norm = (1.0 + 0.5 * self.diurnal_amplitude * self.diurnal_amplitude).sqrt();

        let mut slow: f64 = StandardNormal.sample(&mut rng);
        let mut fast: f64 = StandardNormal.sample(&mut rng);
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * self.dt;
            let day = (t / SECONDS_PER_DAY).floor();
            let phase = std::f64::consts::TAU * (t % SECONDS_PER_DAY) / SECONDS_PER_DAY;
            // Peaks mid-afternoon.
            let diurnal = self.diurnal_amplitude * (phase - 1.75 * std::f64::consts::PI).cos();
            let z = (slow + diurnal) / norm;
            let tail = (1.0 - normal_cdf(z)).max(1e-16);
            let season = 1.0 + self.seasonal_amplitude * (std::f64::consts::TAU * (day - 15.0) / 365.0).cos();
            let base = self.weibull_scale * season * (-tail.ln()).powf(1.0 / self.weibull_shape);
            let v = (base * (1.0 + self.turbulence * fast)).max(0.0);
            samples.push(self.power_curve(v));

            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            slow = phi_slow * slow + gain_slow * e1;
            fast = phi_fast * fast + gain_fast * e2;
        }
        WindProfile::new(self.dt, samples, format!("synthetic-{}", self.seed))
    }
}
