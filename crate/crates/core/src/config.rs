//! Parameters, validation and JSON run configurations.
//!
//! Temperatures are stored in °C everywhere. The only place an absolute
//! temperature may appear is the HTO gas-law term, selected per unit with
//! [`ElectrolyzerParams::absolute_temperature_in_hto`].

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};
use crate::plant::ElectrolyzerState;

/// Standard reversible cell voltage (V) used for the stack default.
pub const REVERSIBLE_CELL_VOLTAGE: f64 = 1.229;
pub const FARADAY: f64 = 96485.0;
pub const GAS_CONSTANT: f64 = 8.314;
/// Temperature at which the cluster rating and rated current are evaluated (°C).
pub const NOMINAL_TEMPERATURE: f64 = 60.0;

/// Shipped defaults for plant constants that have no catalogue value.
///
/// `CROSSOVER_SLOPE` is the output of [`crate::calibration::calibrate_crossover`]
/// for the reference stack below (steady HTO equal to the limit at 10 %
/// rated current); rerun the `calibrate_crossover` example after changing any
/// of the other constants.
pub mod defaults {
    pub const PRESSURE: f64 = 1.0e5;
    pub const V_AN: f64 = 1.0e-3;
    pub const V_SEP_G: f64 = 5.0e-4;
    pub const TAU_SEP_L: f64 = 120.0;
    pub const V_LYE: f64 = 5.0e-5;
    pub const ETA_F: f64 = 1.0;
    pub const Z_H: f64 = 2.0;
    pub const HTO_MAX: f64 = 0.02;
    pub const CROSSOVER_OFFSET: f64 = 4.5e-6;
    pub const CROSSOVER_SLOPE: f64 = 4.835_236e-7;
    /// Ramp limit as a fraction of rated current per second.
    pub const RAMP_FRACTION: f64 = 0.2;
    pub const EPSILON: f64 = 1e-5;
    pub const ALPHA: f64 = 0.8;
    pub const DT: f64 = 1.0;
    pub const CBF_TOL: f64 = 1e-9;
    pub const POWER_TOL_REL: f64 = 1e-9;
}

/// Per-unit physical and electrochemical constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyzerParams {
    pub n_cell: u32,
    /// Cell voltage limit (V).
    pub u_limit: f64,
    pub rho1: f64,
    /// Temperature coefficient of the ohmic term (per °C), must be ≤ 0.
    pub rho2: f64,
    /// Stack reversible voltage (V).
    pub u_rev: f64,
    /// Thermal resistance (K/W).
    pub r_th: f64,
    /// Thermal capacitance (J/K).
    pub c_th: f64,
    pub eta_f: f64,
    pub z_h: f64,
    pub faraday: f64,
    pub gas_const: f64,
    /// Separator pressure (Pa).
    pub pressure: f64,
    /// Anode compartment volume (m³).
    pub v_an: f64,
    /// Separator gas-phase volume (m³).
    pub v_sep_g: f64,
    /// Separator liquid time constant (s).
    pub tau_sep_l: f64,
    /// Electrolyte flow rate (m³/s).
    pub v_lye: f64,
    /// Crossover offset (mol/s).
    pub cross_c0: f64,
    /// Crossover slope (mol/(s·A)).
    pub cross_c1: f64,
    /// Current ramp limit (A/s).
    pub delta_i_max: f64,
    pub hto_max: f64,
    /// Use `T + 273.15` in the HTO gas-law term instead of the stored °C value.
    pub absolute_temperature_in_hto: bool,
}

impl ElectrolyzerParams {
    /// Stack parameters of the reference 45-cell unit with every default filled.
    pub fn reference() -> Self {
        RawElectrolyzer {
            n_cell: 45,
            u_limit: 2.1,
            rho1: 3.11,
            rho2: -0.025,
            r_th: 0.054,
            c_th: 15000.0,
            ..RawElectrolyzer::default()
        }
        .finalize()
    }

    /// Stack voltage limit `n_cell * u_limit` (V).
    pub fn u_max(&self) -> f64 {
        f64::from(self.n_cell) * self.u_limit
    }
}

/// Wire form of [`ElectrolyzerParams`]; omitted optional constants are
/// filled in by [`RawElectrolyzer::finalize`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawElectrolyzer {
    pub n_cell: u32,
    pub u_limit: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub r_th: f64,
    pub c_th: f64,
    #[serde(default)]
    pub u_rev: Option<f64>,
    #[serde(default)]
    pub eta_f: Option<f64>,
    #[serde(default)]
    pub z_h: Option<f64>,
    #[serde(default)]
    pub faraday: Option<f64>,
    #[serde(default)]
    pub gas_const: Option<f64>,
    #[serde(default)]
    pub pressure: Option<f64>,
    #[serde(default)]
    pub v_an: Option<f64>,
    #[serde(default)]
    pub v_sep_g: Option<f64>,
    #[serde(default)]
    pub tau_sep_l: Option<f64>,
    #[serde(default)]
    pub v_lye: Option<f64>,
    #[serde(default)]
    pub cross_c0: Option<f64>,
    #[serde(default)]
    pub cross_c1: Option<f64>,
    #[serde(default)]
    pub delta_i_max: Option<f64>,
    #[serde(default)]
    pub hto_max: Option<f64>,
    #[serde(default)]
    pub absolute_temperature_in_hto: Option<bool>,
}

impl RawElectrolyzer {
    pub fn finalize(self) -> ElectrolyzerParams {
        let u_rev = self
            .u_rev
            .unwrap_or(REVERSIBLE_CELL_VOLTAGE * f64::from(self.n_cell));
        let mut p = ElectrolyzerParams {
            n_cell: self.n_cell,
            u_limit: self.u_limit,
            rho1: self.rho1,
            rho2: self.rho2,
            u_rev,
            r_th: self.r_th,
            c_th: self.c_th,
            eta_f: self.eta_f.unwrap_or(defaults::ETA_F),
            z_h: self.z_h.unwrap_or(defaults::Z_H),
            faraday: self.faraday.unwrap_or(FARADAY),
            gas_const: self.gas_const.unwrap_or(GAS_CONSTANT),
            pressure: self.pressure.unwrap_or(defaults::PRESSURE),
            v_an: self.v_an.unwrap_or(defaults::V_AN),
            v_sep_g: self.v_sep_g.unwrap_or(defaults::V_SEP_G),
            tau_sep_l: self.tau_sep_l.unwrap_or(defaults::TAU_SEP_L),
            v_lye: self.v_lye.unwrap_or(defaults::V_LYE),
            cross_c0: self.cross_c0.unwrap_or(defaults::CROSSOVER_OFFSET),
            cross_c1: self.cross_c1.unwrap_or(defaults::CROSSOVER_SLOPE),
            delta_i_max: 0.0,
            hto_max: self.hto_max.unwrap_or(defaults::HTO_MAX),
            absolute_temperature_in_hto: self.absolute_temperature_in_hto.unwrap_or(false),
        };
        p.delta_i_max = match self.delta_i_max {
            Some(v) => v,
            None => defaults::RAMP_FRACTION * rated_current(&p),
        };
        p
    }
}

/// Current limit at [`NOMINAL_TEMPERATURE`]; NaN when the model is invalid there.
pub fn rated_current(p: &ElectrolyzerParams) -> f64 {
    crate::plant::max_current(p, NOMINAL_TEMPERATURE).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    /// Feedback-optimization gain.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Discrete-time CBF decay coefficient in (0, 1].
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Sampling period (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_epsilon() -> f64 {
    defaults::EPSILON
}
fn default_alpha() -> f64 {
    defaults::ALPHA
}
fn default_dt() -> f64 {
    defaults::DT
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            epsilon: defaults::EPSILON,
            alpha: defaults::ALPHA,
            dt: defaults::DT,
        }
    }
}

/// Numerical tolerances of the safety layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Relative slack on the CBF cubic (scaled by the largest coefficient).
    #[serde(default = "default_cbf_tol")]
    pub cbf_tol: f64,
    /// Coupling tolerance as a fraction of the cluster rating.
    #[serde(default = "default_power_tol_rel")]
    pub power_tol_rel: f64,
}

fn default_cbf_tol() -> f64 {
    defaults::CBF_TOL
}
fn default_power_tol_rel() -> f64 {
    defaults::POWER_TOL_REL
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            cbf_tol: defaults::CBF_TOL,
            power_tol_rel: defaults::POWER_TOL_REL,
        }
    }
}

/// How a loaded wind profile is rescaled before simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Peak equals the sum of unit maximum powers at [`NOMINAL_TEMPERATURE`].
    #[default]
    ClusterRating,
    None,
    Peak { peak_w: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSource {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub scaling: Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_ele: usize,
    /// Ambient temperature (°C).
    pub ambient_temp: f64,
    pub initial_temps: Vec<f64>,
    /// Full initial states; when absent every unit starts with empty
    /// compartments at its entry of `initial_temps`.
    pub initial_states: Option<Vec<ElectrolyzerState>>,
    pub initial_currents: Vec<f64>,
    pub horizon_steps: usize,
    pub electrolyzers: Vec<ElectrolyzerParams>,
    pub controller: ControllerParams,
    pub solver: SolverSettings,
    pub wind_source: WindSource,
    pub rng_seed: u64,
}

impl SimConfig {
    /// Reference cluster: identical units, 25 °C ambient, default controller.
    ///
    /// Units beyond the fourth cycle through the four reference initial
    /// temperatures.
    pub fn reference(n_ele: usize) -> Self {
        const TEMPS: [f64; 4] = [25.0, 30.0, 40.0, 60.0];
        Self {
            n_ele,
            ambient_temp: 25.0,
            initial_temps: (0..n_ele).map(|i| TEMPS[i % 4]).collect(),
            initial_states: None,
            initial_currents: vec![0.0; n_ele],
            horizon_steps: 86_400,
            electrolyzers: vec![ElectrolyzerParams::reference(); n_ele],
            controller: ControllerParams::default(),
            solver: SolverSettings::default(),
            wind_source: WindSource::default(),
            rng_seed: 0,
        }
    }

    pub fn initial_state(&self, unit: usize) -> ElectrolyzerState {
        match &self.initial_states {
            Some(states) => states[unit],
            None => ElectrolyzerState::fresh(self.initial_temps[unit]),
        }
    }

    pub fn initial_states(&self) -> Vec<ElectrolyzerState> {
        (0..self.n_ele).map(|i| self.initial_state(i)).collect()
    }

    /// Sum of unit maximum powers at [`NOMINAL_TEMPERATURE`] (W).
    pub fn cluster_rating(&self) -> f64 {
        self.electrolyzers
            .iter()
            .map(|p| crate::plant::max_power(p, NOMINAL_TEMPERATURE).unwrap_or(0.0))
            .sum()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimConfig {
    n_ele: usize,
    #[serde(default = "default_ambient")]
    ambient_temp: f64,
    initial_temps: Vec<f64>,
    #[serde(default)]
    initial_states: Option<Vec<ElectrolyzerState>>,
    #[serde(default)]
    initial_currents: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    horizon_steps: usize,
    electrolyzers: Vec<RawElectrolyzer>,
    #[serde(default)]
    controller: ControllerParams,
    #[serde(default)]
    solver: SolverSettings,
    #[serde(default)]
    wind_source: WindSource,
    #[serde(default)]
    rng_seed: u64,
}

fn default_ambient() -> f64 {
    25.0
}
fn default_horizon() -> usize {
    86_400
}

impl RawSimConfig {
    fn finalize(self) -> SimConfig {
        let mut electrolyzers: Vec<ElectrolyzerParams> =
            self.electrolyzers.into_iter().map(RawElectrolyzer::finalize).collect();
        // A single entry is a template shared by every unit.
        if electrolyzers.len() == 1 && self.n_ele > 1 {
            electrolyzers = vec![electrolyzers[0].clone(); self.n_ele];
        }
        SimConfig {
            n_ele: self.n_ele,
            ambient_temp: self.ambient_temp,
            initial_currents: self
                .initial_currents
                .unwrap_or_else(|| vec![0.0; self.n_ele]),
            initial_temps: self.initial_temps,
            initial_states: self.initial_states,
            horizon_steps: self.horizon_steps,
            electrolyzers,
            controller: self.controller,
            solver: self.solver,
            wind_source: self.wind_source,
            rng_seed: self.rng_seed,
        }
    }
}

/// One failed invariant: the offending field and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl Violation {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Parses a JSON configuration from a string. Relative wind paths are kept
/// as written; [`load_config`] resolves them against the file's directory.
pub fn parse_config(text: &str, origin: &Path) -> Result<SimConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = if path == "." || path.is_empty() {
            e.inner().to_string()
        } else {
            format!("at `{path}`: {}", e.inner())
        };
        Error::ConfigParse {
            path: origin.to_path_buf(),
            message,
        }
    })?;
    let config = raw.finalize();
    let violations = validate(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Invalid(Violations(violations)))
    }
}

/// Reads, fills defaults and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = parse_config(&text, path)?;
    if let Some(wind) = config.wind_source.path.as_mut() {
        if wind.is_relative() {
            if let Some(dir) = path.parent() {
                *wind = dir.join(&*wind);
            }
        }
    }
    Ok(config)
}

/// Checks every parameter invariant. An empty list means the configuration is valid.
pub fn validate(config: &SimConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = config.n_ele;
    if n == 0 {
        out.push(Violation::new("n_ele", "n_ele must be at least 1"));
    }
    if config.initial_temps.len() != n {
        out.push(Violation::new(
            "initial_temps",
            format!("expected {n} entries, found {}", config.initial_temps.len()),
        ));
    }
    if config.initial_currents.len() != n {
        out.push(Violation::new(
            "initial_currents",
            format!("expected {n} entries, found {}", config.initial_currents.len()),
        ));
    } else if config.initial_currents.iter().any(|&u| !(u >= 0.0)) {
        out.push(Violation::new("initial_currents", "currents must be ≥ 0"));
    }
    if let Some(states) = &config.initial_states {
        if states.len() != n {
            out.push(Violation::new(
                "initial_states",
                format!("expected {n} entries, found {}", states.len()),
            ));
        }
        for (i, s) in states.iter().enumerate() {
            if s.n_an < 0.0 || s.n_sep_l < 0.0 || s.n_sep_g < 0.0 {
                out.push(Violation::new(
                    format!("initial_states[{i}]"),
                    "mole amounts must be ≥ 0",
                ));
            }
        }
    }
    if config.horizon_steps < 1 {
        out.push(Violation::new("horizon_steps", "horizon_steps must be ≥ 1"));
    }
    if config.electrolyzers.len() != n {
        out.push(Violation::new(
            "electrolyzers",
            format!("expected 1 or {n} entries, found {}", config.electrolyzers.len()),
        ));
    }
    for (i, p) in config.electrolyzers.iter().enumerate() {
        validate_params(p, config.ambient_temp, &format!("electrolyzers[{i}]"), &mut out);
    }
    validate_controller(&config.controller, &mut out);
    let s = &config.solver;
    if !(s.cbf_tol >= 0.0) {
        out.push(Violation::new("solver.cbf_tol", "cbf_tol must be ≥ 0"));
    }
    if !(s.power_tol_rel >= 0.0) {
        out.push(Violation::new("solver.power_tol_rel", "power_tol_rel must be ≥ 0"));
    }
    if let Scaling::Peak { peak_w } = config.wind_source.scaling {
        if !(peak_w > 0.0) {
            out.push(Violation::new("wind_source.scaling.peak_w", "peak_w must be positive"));
        }
    }
    out
}

pub fn validate_controller(c: &ControllerParams, out: &mut Vec<Violation>) {
    if !(c.alpha > 0.0 && c.alpha <= 1.0) {
        out.push(Violation::new("controller.alpha", "alpha out of (0,1]"));
    }
    if !(c.epsilon > 0.0) {
        out.push(Violation::new("controller.epsilon", "epsilon must be positive"));
    }
    if !(c.dt > 0.0) {
        out.push(Violation::new("controller.dt", "dt must be positive"));
    }
}

pub fn validate_params(p: &ElectrolyzerParams, ambient: f64, prefix: &str, out: &mut Vec<Violation>) {
    let mut push = |field: &str, reason: &str| {
        out.push(Violation::new(format!("{prefix}.{field}"), reason));
    };
    if !(p.rho2 <= 0.0) {
        push("rho2", "rho2 must be ≤ 0");
    }
    if !(p.rho1 + p.rho2 * ambient > 0.0) {
        push("rho1", "rho1 + rho2·ambient_temp must be positive");
    }
    for (name, value) in [
        ("r_th", p.r_th),
        ("c_th", p.c_th),
        ("v_an", p.v_an),
        ("v_sep_g", p.v_sep_g),
        ("tau_sep_l", p.tau_sep_l),
        ("v_lye", p.v_lye),
        ("pressure", p.pressure),
        ("u_limit", p.u_limit),
        ("delta_i_max", p.delta_i_max),
        ("faraday", p.faraday),
        ("gas_const", p.gas_const),
        ("z_h", p.z_h),
    ] {
        if !(value > 0.0) {
            push(name, &format!("{name} must be positive"));
        }
    }
    if !(p.eta_f > 0.0 && p.eta_f <= 1.0) {
        push("eta_f", "eta_f out of (0,1]");
    }
    if !(p.hto_max > 0.0 && p.hto_max < 1.0) {
        push("hto_max", "hto_max out of (0,1)");
    }
    if p.n_cell < 1 {
        push("n_cell", "n_cell must be at least 1");
    }
    if !(p.u_rev >= 0.0) {
        push("u_rev", "u_rev must be ≥ 0");
    }
    if !(p.u_max() > p.u_rev) {
        push("u_limit", "n_cell·u_limit must exceed u_rev");
    }
    if !(p.cross_c0 >= 0.0) {
        push("cross_c0", "cross_c0 must be ≥ 0");
    }
    if !(p.cross_c1.is_finite()) {
        push("cross_c1", "cross_c1 must be finite");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "n_ele": 4,
        "initial_temps": [25.0, 30.0, 40.0, 60.0],
        "electrolyzers": [{"n_cell": 45, "u_limit": 2.1, "rho1": 3.11, "rho2": -0.025,
                           "r_th": 0.054, "c_th": 15000.0}],
        "controller": {"epsilon": 1e-5, "alpha": 0.8, "dt": 1.0}
    }"#;

    fn parse(text: &str) -> Result<SimConfig> {
        parse_config(text, Path::new("inline.json"))
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.controller.epsilon, 1e-5);
        assert_eq!(c.controller.alpha, 0.8);
        assert_eq!(c.controller.dt, 1.0);
        assert_eq!(c.electrolyzers.len(), 4);
        assert_eq!(c.initial_currents, vec![0.0; 4]);
        assert!((c.electrolyzers[0].u_rev - 55.305).abs() < 1e-12);
        assert_eq!(c.electrolyzers[0].faraday, 96485.0);
        assert_eq!(c.electrolyzers[0].gas_const, 8.314);
        assert_eq!(c.electrolyzers[0].z_h, 2.0);
        assert_eq!(c.electrolyzers[0], ElectrolyzerParams::reference());
    }

    #[test]
    fn alpha_zero_is_rejected() {
        let text = MINIMAL.replace("\"alpha\": 0.8", "\"alpha\": 0.0");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("alpha out of (0,1]"), "{err}");
    }

    #[test]
    fn missing_and_mistyped_keys_are_named() {
        let text = MINIMAL.replace("\"rho1\": 3.11, ", "");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("rho1"), "{err}");

        let text = MINIMAL.replace("\"r_th\": 0.054", "\"r_th\": \"hot\"");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("r_th"), "{err}");

        let text = MINIMAL.replace("\"n_ele\": 4,", "\"n_ele\": 4, \"bogus\": 1,");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_config("/nonexistent/config.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn reference_is_valid() {
        assert!(validate(&SimConfig::reference(4)).is_empty());
        assert!(validate(&SimConfig::reference(10)).is_empty());
    }

    #[test]
    fn sign_and_positivity_violations() {
        let mut c = SimConfig::reference(4);
        c.electrolyzers[1].rho2 = 0.025;
        c.electrolyzers[2].r_th = 0.0;
        let v = validate(&c);
        assert!(v.iter().any(|v| v.field == "electrolyzers[1].rho2" && v.reason == "rho2 must be ≤ 0"));
        assert!(v.iter().any(|v| v.field == "electrolyzers[2].r_th" && v.reason == "r_th must be positive"));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let mut c = SimConfig::reference(4);
        c.initial_temps.pop();
        assert!(validate(&c).iter().any(|v| v.field == "initial_temps"));
    }

    #[test]
    fn default_ramp_is_a_fifth_of_rated_current() {
        let p = ElectrolyzerParams::reference();
        let rated = 39.195 / 1.61;
        assert!((p.delta_i_max - 0.2 * rated).abs() < 1e-9);
    }
}
