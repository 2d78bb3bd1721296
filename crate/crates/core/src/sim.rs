//! Closed-loop engine: feedback-optimization reference, safety projection,
//! plant step, log.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cbf::{self, AdmissibleSet};
use crate::config::{validate, SimConfig};
use crate::error::{Error, Result, Violations};
use crate::fo;
use crate::plant::{self, ElectrolyzerState};
use crate::safety;
use crate::scenarios::WindProfile;

/// Deficit drawn from storage (W).
#[inline]
pub fn storage_power(p_total: f64, p_wind: f64) -> f64 {
    (p_total - p_wind).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step_index: usize,
    pub p_wind: f64,
    /// Steady-map mismatch `sum h(u_prev) - p_wind` the reference update used (W).
    pub mismatch: f64,
    pub u_desired: Vec<f64>,
    pub u_applied: Vec<f64>,
    /// Instantaneous unit powers at the pre-step temperatures (W).
    pub p_units: Vec<f64>,
    pub p_total: f64,
    pub storage_power: f64,
    pub p_min_reach: f64,
    /// HTO after the step.
    pub hto: Vec<f64>,
    /// Temperatures after the step (°C).
    pub temps: Vec<f64>,
    pub feasible: bool,
    pub relaxed: bool,
    /// `|u_applied - u_desired|` (A).
    pub deviation_norm: f64,
    /// Controller compute for this step (s).
    pub solve_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimConfig,
    pub wind_label: String,
    pub initial_states: Vec<ElectrolyzerState>,
    pub steps: Vec<StepLog>,
    pub terminal_states: Vec<ElectrolyzerState>,
    /// Plant steps where a mole balance was cut at zero.
    pub clamp_events: usize,
}

impl Trace {
    pub fn n_units(&self) -> usize {
        self.initial_states.len()
    }

    /// Copy with every solve time zeroed, for bitwise comparison of runs.
    pub fn without_timing(&self) -> Trace {
        let mut t = self.clone();
        for s in &mut t.steps {
            s.solve_time = 0.0;
        }
        t
    }

    pub fn clamp_count(&self) -> usize {
        self.clamp_events
    }
}

/// Stepwise closed loop over a fixed configuration.
pub struct ClosedLoop<'a> {
    config: &'a SimConfig,
    states: Vec<ElectrolyzerState>,
    u: Vec<f64>,
    step_index: usize,
    clamp_events: usize,
    tol_power: f64,
}

impl<'a> ClosedLoop<'a> {
    /// Validates the configuration and the safety of the initial states.
    pub fn new(config: &'a SimConfig) -> Result<Self> {
        let violations = validate(config);
        if !violations.is_empty() {
            return Err(Error::Invalid(Violations(violations)));
        }
        let states = config.initial_states();
        for (unit, (p, s)) in config.electrolyzers.iter().zip(&states).enumerate() {
            if cbf::safe_value(p, s) < 0.0 {
                return Err(Error::UnsafeInitialState {
                    unit,
                    hto: plant::hto(p, s),
                    hto_max: p.hto_max,
                });
            }
        }
        Ok(Self {
            config,
            states,
            u: config.initial_currents.clone(),
            step_index: 0,
            clamp_events: 0,
            tol_power: config.solver.power_tol_rel * config.cluster_rating(),
        })
    }

    pub fn states(&self) -> &[ElectrolyzerState] {
        &self.states
    }

    pub fn currents(&self) -> &[f64] {
        &self.u
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    /// Advance one sampling period under wind `p_wind`.
    pub fn step(&mut self, p_wind: f64) -> Result<StepLog> {
        let cfg = self.config;
        let params = &cfg.electrolyzers;
        let ctrl = &cfg.controller;
        let t_a = cfg.ambient_temp;

        let start = Instant::now();
        let mismatch = fo::power_mismatch(&self.u, params, t_a, p_wind);
        let u_desired = fo::fo_update(&self.u, params, t_a, p_wind, ctrl);
        let mut sets: Vec<AdmissibleSet> = Vec::with_capacity(params.len());
        for ((p, s), &u_prev) in params.iter().zip(&self.states).zip(&self.u) {
            sets.push(safety::unit_constraints(p, s, u_prev, t_a, ctrl, cfg.solver.cbf_tol)?.set);
        }
        let report = safety::feasibility_check(&sets, params, &self.states, p_wind);
        let projection = safety::project(&u_desired, &sets, params, &self.states, p_wind, report.relaxed, self.tol_power)?;
        let solve_time = start.elapsed().as_secs_f64();

        let u = projection.u;
        let p_units: Vec<f64> = params
            .iter()
            .zip(&self.states)
            .zip(&u)
            .map(|((p, s), &u)| plant::electrolyzer_power(p, s.t_ele, u))
            .collect();
        let p_total: f64 = p_units.iter().sum();
        let deviation_norm = u
            .iter()
            .zip(&u_desired)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();

        for ((p, s), &ui) in params.iter().zip(self.states.iter_mut()).zip(&u) {
            let out = plant::step(p, s, ui, t_a, ctrl.dt);
            if out.clamped {
                self.clamp_events += 1;
            }
            *s = out.state;
        }
        let hto = params.iter().zip(&self.states).map(|(p, s)| plant::hto(p, s)).collect();
        let temps = self.states.iter().map(|s| s.t_ele).collect();

        let log = StepLog {
            step_index: self.step_index,
            p_wind,
            mismatch,
            u_desired,
            u_applied: u.clone(),
            p_units,
            p_total,
            storage_power: storage_power(p_total, p_wind),
            p_min_reach: report.p_min_reach,
            hto,
            temps,
            feasible: report.coupling_reachable,
            relaxed: report.relaxed,
            deviation_norm,
            solve_time,
        };
        self.u = u;
        self.step_index += 1;
        Ok(log)
    }
}

/// Run `config.horizon_steps` steps over the first samples of `samples`.
pub fn run_samples(config: &SimConfig, samples: &[f64], wind_label: &str) -> Result<Trace> {
    let horizon = config.horizon_steps;
    if samples.len() < horizon {
        return Err(Error::WindTooShort {
            len: samples.len(),
            needed: horizon,
        });
    }
    let mut stepper = ClosedLoop::new(config)?;
    let initial_states = stepper.states().to_vec();
    let mut steps = Vec::with_capacity(horizon);
    for &w in &samples[..horizon] {
        steps.push(stepper.step(w)?);
    }
    Ok(Trace {
        config: config.clone(),
        wind_label: wind_label.to_string(),
        initial_states,
        terminal_states: stepper.states().to_vec(),
        clamp_events: stepper.clamp_events(),
        steps,
    })
}

/// Run a configuration against a wind profile sampled at the control period.
pub fn run(config: &SimConfig, wind: &WindProfile) -> Result<Trace> {
    if (wind.dt - config.controller.dt).abs() > 1e-9 * config.controller.dt {
        return Err(Error::Wind(format!(
            "wind sampled every {} s but the controller period is {} s",
            wind.dt, config.controller.dt
        )));
    }
    run_samples(config, &wind.samples, &wind.label)
}

/// Post-hoc re-verification of a trace by replaying the plant from its
/// initial states with the logged currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    /// Largest distance of an applied current outside its box (A).
    pub box_excess: f64,
    /// Largest `-cubic_value / scale` at an applied current.
    pub cubic_deficit: f64,
    /// Largest `hto(t+1) - ((1 - alpha) hto(t) + alpha hto_max)`.
    pub one_step_excess: f64,
    pub hto_peak: f64,
    /// (step, unit) pairs above `hto_max + 1e-9`.
    pub hto_violations: usize,
    /// Steps whose replayed HTO differs from the logged value.
    pub replay_mismatches: usize,
}

pub fn audit(trace: &Trace) -> Result<Audit> {
    let cfg = &trace.config;
    let ctrl = &cfg.controller;
    let mut states = trace.initial_states.clone();
    let mut u_prev = cfg.initial_currents.clone();
    let mut a = Audit {
        box_excess: 0.0,
        cubic_deficit: 0.0,
        one_step_excess: f64::NEG_INFINITY,
        hto_peak: 0.0,
        hto_violations: 0,
        replay_mismatches: 0,
    };
    for log in &trace.steps {
        for (i, p) in cfg.electrolyzers.iter().enumerate() {
            let s = states[i];
            let u = log.u_applied[i];
            let bounds = safety::box_bounds(p, &s, u_prev[i], ctrl.dt)?;
            a.box_excess = a.box_excess.max(bounds.lower - u).max(u - bounds.upper);
            let c = cbf::cbf_coefficients(p, &s, cfg.ambient_temp, ctrl.alpha, ctrl.dt);
            let scale = c.scale().max(f64::MIN_POSITIVE);
            a.cubic_deficit = a.cubic_deficit.max(-cbf::cubic_value(&c, u) / scale);
            let before = plant::hto(p, &s);
            let next = plant::step(p, &s, u, cfg.ambient_temp, ctrl.dt).state;
            let after = plant::hto(p, &next);
            a.one_step_excess = a.one_step_excess.max(after - ((1.0 - ctrl.alpha) * before + ctrl.alpha * p.hto_max));
            a.hto_peak = a.hto_peak.max(after);
            if after > p.hto_max + 1e-9 {
                a.hto_violations += 1;
            }
            if after != log.hto[i] {
                a.replay_mismatches += 1;
            }
            states[i] = next;
        }
        u_prev.clone_from(&log.u_applied);
    }
    Ok(a)
}

const FIXED_COLUMNS: [&str; 10] = [
    "step",
    "p_wind",
    "mismatch",
    "p_total",
    "storage_power",
    "p_min_reach",
    "feasible",
    "relaxed",
    "deviation_norm",
    "solve_time",
];
const UNIT_COLUMNS: [&str; 5] = ["u_des", "u", "p", "hto", "temp"];

/// One row per step: the fixed columns, then `<name>_<unit>` blocks.
pub fn write_trace_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let n = trace.n_units();
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for name in UNIT_COLUMNS {
        header.extend((0..n).map(|i| format!("{name}_{i}")));
    }
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for s in &trace.steps {
        row.clear();
        row.push(s.step_index.to_string());
        for v in [s.p_wind, s.mismatch, s.p_total, s.storage_power, s.p_min_reach] {
            row.push(v.to_string());
        }
        row.push(u8::from(s.feasible).to_string());
        row.push(u8::from(s.relaxed).to_string());
        row.push(s.deviation_norm.to_string());
        row.push(s.solve_time.to_string());
        for block in [&s.u_desired, &s.u_applied, &s.p_units, &s.hto, &s.temps] {
            row.extend(block.iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Steps of a CSV trace written by [`write_trace_csv`].
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<StepLog>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers()?.clone();
    let width = header.len();
    if width < FIXED_COLUMNS.len() || header.iter().take(FIXED_COLUMNS.len()).ne(FIXED_COLUMNS) {
        return Err(Error::Trace(format!("{}: unrecognized header", path.display())));
    }
    let extra = width - FIXED_COLUMNS.len();
    if extra % UNIT_COLUMNS.len() != 0 {
        return Err(Error::Trace(format!("{}: ragged unit columns", path.display())));
    }
    let n = extra / UNIT_COLUMNS.len();
    let mut steps = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Trace(format!("{}:{}: bad value in column {}", path.display(), line + 2, k + 1)))
        };
        let flag = |k: usize| -> Result<bool> { Ok(num(k)? != 0.0) };
        let block = |b: usize| -> Result<Vec<f64>> {
            (0..n).map(|i| num(FIXED_COLUMNS.len() + b * n + i)).collect()
        };
        steps.push(StepLog {
            step_index: num(0)? as usize,
            p_wind: num(1)?,
            mismatch: num(2)?,
            p_total: num(3)?,
            storage_power: num(4)?,
            p_min_reach: num(5)?,
            feasible: flag(6)?,
            relaxed: flag(7)?,
            deviation_norm: num(8)?,
            solve_time: num(9)?,
            u_desired: block(0)?,
            u_applied: block(1)?,
            p_units: block(2)?,
            hto: block(3)?,
            temps: block(4)?,
        });
    }
    Ok(steps)
}

pub fn write_trace_json(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, trace)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_trace_json(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ElectrolyzerParams;

    fn short(n: usize, horizon: usize) -> SimConfig {
        let mut c = SimConfig::reference(n);
        c.horizon_steps = horizon;
        c
    }

    #[test]
    fn storage_power_examples() {
        assert_eq!(storage_power(500.0, 800.0), 0.0);
        assert_eq!(storage_power(800.0, 800.0), 0.0);
        assert_eq!(storage_power(900.0, 800.0), 100.0);
    }

    #[test]
    fn zero_wind_shuts_down() {
        let mut cfg = short(4, 300);
        cfg.initial_currents = vec![4.0, 3.0, 2.0, 1.0];
        let trace = run_samples(&cfg, &[0.0; 300], "calm").unwrap();
        let last = trace.steps.last().unwrap();
        assert!(last.u_applied.iter().all(|&u| u == 0.0));
        assert!(trace.steps.iter().all(|s| s.storage_power == 0.0));
        assert!(trace.steps.iter().all(|s| !s.relaxed));
    }

    #[test]
    fn steady_fixed_point() {
        let mut cfg = short(2, 200);
        let p = ElectrolyzerParams::reference();
        let u0 = 8.0;
        let t_hat = fo::steady_temperature(&p, u0, cfg.ambient_temp);
        cfg.initial_temps = vec![t_hat; 2];
        cfg.initial_currents = vec![u0; 2];
        let wind = 2.0 * fo::steady_power(&p, u0, cfg.ambient_temp);
        let trace = run_samples(&cfg, &vec![wind; 200], "flat").unwrap();
        for s in &trace.steps {
            assert!(s.mismatch.abs() < 1e-9);
            for &u in &s.u_applied {
                assert!((u - u0).abs() < 1e-9, "{u}");
            }
        }
    }

    #[test]
    fn rejects_short_wind_and_unsafe_start() {
        let cfg = short(2, 10);
        assert!(matches!(run_samples(&cfg, &[1.0; 5], "x"), Err(Error::WindTooShort { len: 5, needed: 10 })));
        let mut bad = short(1, 10);
        let p = &bad.electrolyzers[0];
        let n = 0.05 * p.pressure * p.v_sep_g / (p.gas_const * 25.0);
        bad.initial_states = Some(vec![ElectrolyzerState {
            n_sep_g: n,
            ..ElectrolyzerState::fresh(25.0)
        }]);
        assert!(matches!(run_samples(&bad, &[1.0; 10], "x"), Err(Error::UnsafeInitialState { unit: 0, .. })));
        let mut mismatch = short(1, 10);
        mismatch.controller.dt = 2.0;
        assert!(run(&mismatch, &WindProfile::new(1.0, vec![0.0; 20], "w")).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let cfg = short(3, 50);
        let wind: Vec<f64> = (0..50).map(|k| 1500.0 + 20.0 * k as f64).collect();
        let trace = run_samples(&cfg, &wind, "ramp").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("t.csv");
        write_trace_csv(&trace, &csv_path).unwrap();
        assert_eq!(read_trace_csv(&csv_path).unwrap(), trace.steps);
        let json_path = dir.path().join("t.json");
        write_trace_json(&trace, &json_path).unwrap();
        assert_eq!(read_trace_json(&json_path).unwrap(), trace);
    }

    #[test]
    fn replay_agrees_with_log() {
        let cfg = short(4, 600);
        let wind: Vec<f64> = (0..600).map(|k| 3000.0 + 2500.0 * (k as f64 / 40.0).sin()).collect();
        let trace = run_samples(&cfg, &wind, "wave").unwrap();
        let a = audit(&trace).unwrap();
        assert_eq!(a.replay_mismatches, 0);
        assert_eq!(a.hto_violations, 0);
        assert!(a.box_excess <= 0.0);
        assert!(a.cubic_deficit <= 1e-9);
        assert!(a.one_step_excess <= 1e-12);
        assert_eq!(trace.steps.len(), 600);
        assert_eq!(trace.clamp_count(), 0);
    }
}
