//! Command-line front end.
//!
//! Exit codes: 0 success, 1 safety failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::calibration::{calibrate_crossover, CalibrationSpec};
use crate::config::{load_config, ElectrolyzerParams, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    contraction_diagnostics, run_metrics, sweep, ContractionDiagnostics, RunMetrics,
};
use crate::scenarios::{
    export_representative_days, load_scenario, load_wind_csv, representative_days, write_wind_csv, SyntheticWind,
};
use crate::sim::{self, audit, Audit, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSAFE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Slack on the one-step barrier condition when auditing a run.
pub const ONE_STEP_SLACK: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "electro-coord", version, about = "Wind-powered electrolyzer cluster simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop run over one wind scenario.
    Simulate(SimulateArgs),
    /// Cluster a wind year into representative days.
    Repdays(RepdaysArgs),
    /// Utilization and storage across controller gain factors.
    SweepGain(SweepArgs),
    /// Storage and solve time across barrier decay rates.
    SweepAlpha(SweepArgs),
    /// Statistics and safety summary of a saved trace.
    Report(ReportArgs),
    /// Fit the crossover slope to the HTO limit.
    Calibrate(CalibrateArgs),
    /// Write a synthetic wind year.
    SynthWind(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Wind CSV or representative-day directory; defaults to the config's wind source.
    #[arg(long)]
    pub wind: Option<PathBuf>,
    #[arg(long)]
    pub day: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full trace as JSON.
    #[arg(long)]
    pub json: bool,
    /// Zero the logged solve times so reruns are byte-identical.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Args)]
pub struct RepdaysArgs {
    #[arg(long)]
    pub wind: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Samples averaged per clustering feature; defaults to one-minute blocks.
    #[arg(long)]
    pub downsample: Option<usize>,
    /// Sampling period assumed for files without timestamps (s).
    #[arg(long, default_value_t = 60.0)]
    pub untimed_dt: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub wind: Option<PathBuf>,
    #[arg(long)]
    pub day: Option<usize>,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace CSV or JSON.
    #[arg(long)]
    pub trace: PathBuf,
    /// HTO limit for CSV traces, which carry no configuration.
    #[arg(long, default_value_t = crate::config::defaults::HTO_MAX)]
    pub hto_max: f64,
    /// Control period for CSV traces (s).
    #[arg(long, default_value_t = crate::config::defaults::DT)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Configuration whose first unit is calibrated; reference parameters otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub load_fraction: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 365)]
    pub days: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub dt: f64,
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub wind_label: String,
    pub scale_factor: f64,
    pub metrics: RunMetrics,
    pub max_one_step_excess: f64,
    pub max_box_excess: f64,
    pub contraction: ContractionDiagnostics,
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Io { .. }
            | Error::ConfigParse { .. }
            | Error::Invalid(_)
            | Error::UnsafeInitialState { .. }
            | Error::WindTooShort { .. }
            | Error::Wind(_)
            | Error::DegenerateProfile(_)
            | Error::TooManyClusters { .. }
            | Error::Trace(_)
            | Error::Json(_)
            | Error::Csv(_)
    )
}

fn exit_code(e: &Error) -> i32 {
    if is_input_error(e) {
        EXIT_USAGE
    } else {
        EXIT_UNSAFE
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Repdays(a) => repdays(a),
        Command::SweepGain(a) => sweep_cmd(a, SweepKind::Gain),
        Command::SweepAlpha(a) => sweep_cmd(a, SweepKind::Alpha),
        Command::Report(a) => report(a),
        Command::Calibrate(a) => calibrate(a),
        Command::SynthWind(a) => synth(a),
    }
}

fn wind_path(arg: &Option<PathBuf>, config: &SimConfig) -> Result<PathBuf> {
    arg.clone()
        .or_else(|| config.wind_source.path.clone())
        .ok_or_else(|| Error::Wind("no --wind given and the config has no wind_source.path".into()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Safety verdict of a finished run.
pub fn run_is_safe(metrics: &RunMetrics, a: &Audit) -> bool {
    metrics.hto_violations == 0 && a.hto_violations == 0 && a.one_step_excess <= ONE_STEP_SLACK
}

fn simulate(a: &SimulateArgs) -> Result<i32> {
    let config = load_config(&a.config)?;
    let scenario = load_scenario(wind_path(&a.wind, &config)?, a.day, &config)?;
    let mut trace = sim::run(&config, &scenario.profile)?;
    if a.omit_timing {
        trace = trace.without_timing();
    }
    create_dir(&a.out)?;
    sim::write_trace_csv(&trace, a.out.join("trace.csv"))?;
    if a.json {
        sim::write_trace_json(&trace, a.out.join("trace.json"))?;
    }
    let metrics = run_metrics(&trace);
    let checks = audit(&trace)?;
    let summary = SimulationSummary {
        wind_label: trace.wind_label.clone(),
        scale_factor: scenario.scale_factor,
        metrics: metrics.clone(),
        max_one_step_excess: checks.one_step_excess,
        max_box_excess: checks.box_excess,
        contraction: contraction_diagnostics(&trace),
    };
    write_json(&summary, &a.out.join("metrics.json"))?;
    print_table(&mut std::io::stdout().lock(), &metrics);
    if run_is_safe(&metrics, &checks) {
        Ok(EXIT_OK)
    } else {
        eprintln!("safety check failed: {} HTO violations, one-step excess {:.3e}", metrics.hto_violations, checks.one_step_excess);
        Ok(EXIT_UNSAFE)
    }
}

fn repdays(a: &RepdaysArgs) -> Result<i32> {
    let loaded = load_wind_csv(&a.wind, a.untimed_dt)?;
    let factor = a
        .downsample
        .unwrap_or_else(|| ((60.0 / loaded.profile.dt).round() as usize).max(1));
    let set = representative_days(&loaded.profile, a.k, a.seed, factor)?;
    let manifest = export_representative_days(&set, &a.out)?;
    for (j, file) in manifest.files.iter().enumerate() {
        println!("{file}: source day {}, weight {}", manifest.medoids[j], manifest.weights[j]);
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Copy)]
enum SweepKind {
    Gain,
    Alpha,
}

/// Comma-separated finite numbers; an empty list is an error.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ConfigParse {
                    path: PathBuf::from("--values"),
                    message: format!("`{s}` is not a number"),
                })
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::ConfigParse {
            path: PathBuf::from("--values"),
            message: "empty value list".into(),
        });
    }
    Ok(values)
}

fn sweep_cmd(a: &SweepArgs, kind: SweepKind) -> Result<i32> {
    let values = parse_values(&a.values)?;
    let config = load_config(&a.config)?;
    let scenario = load_scenario(wind_path(&a.wind, &config)?, a.day, &config)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let safe = match kind {
        SweepKind::Gain => {
            let rows = sweep::sweep_gain(&config, &scenario.profile, &values)?;
            sweep::write_gain_csv(&rows, &a.out)?;
            for r in &rows {
                println!("factor {:>10.3e}  utilization {:.4}  storage {:>10.2} Wh", r.factor, r.energy_utilization, r.storage_energy);
            }
            rows.iter().all(|r| r.hto_violations == 0)
        }
        SweepKind::Alpha => {
            let rows = sweep::sweep_alpha(&config, &scenario.profile, &values)?;
            sweep::write_alpha_csv(&rows, &a.out)?;
            for r in &rows {
                println!("alpha {:.2}  storage {:>10.2} Wh  solve avg {:.4} ms", r.alpha, r.storage_energy, r.solve_time_avg * 1e3);
            }
            rows.iter().all(|r| r.hto_violations == 0)
        }
    };
    Ok(if safe { EXIT_OK } else { EXIT_UNSAFE })
}

fn load_trace(a: &ReportArgs) -> Result<Trace> {
    if a.trace.extension().is_some_and(|e| e == "json") {
        return sim::read_trace_json(&a.trace);
    }
    let steps = sim::read_trace_csv(&a.trace)?;
    let n = steps.first().map_or(0, |s| s.u_applied.len());
    if n == 0 {
        return Err(Error::Trace(format!("{}: no steps", a.trace.display())));
    }
    let mut config = SimConfig::reference(n);
    config.controller.dt = a.dt;
    for p in &mut config.electrolyzers {
        p.hto_max = a.hto_max;
    }
    Ok(Trace {
        config,
        wind_label: a.trace.display().to_string(),
        initial_states: Vec::new(),
        terminal_states: Vec::new(),
        clamp_events: 0,
        steps,
    })
}

/// Statistics table printed by `simulate` and `report`.
pub fn print_table(out: &mut impl Write, m: &RunMetrics) {
    let _ = writeln!(out, "steps                {}", m.steps);
    let _ = writeln!(out, "energy utilization   {:.4}", m.energy_utilization);
    let _ = writeln!(out, "storage energy (Wh)  {:.3}", m.storage_energy);
    let _ = writeln!(out, "relaxed steps        {}", m.relaxed_step_count);
    let _ = writeln!(out, "solve time (ms)      avg {:.4}  p95 {:.4}  max {:.4}", m.solve_time_avg * 1e3, m.solve_time_p95 * 1e3, m.solve_time_max * 1e3);
    let _ = writeln!(out, "hto peak             {:.6}", m.hto_peak);
    let _ = writeln!(out, "hto violations       {}", m.hto_violations);
}

fn report(a: &ReportArgs) -> Result<i32> {
    let trace = load_trace(a)?;
    let metrics = run_metrics(&trace);
    print_table(&mut std::io::stdout().lock(), &metrics);
    if metrics.hto_violations == 0 {
        println!("safety: ok");
        Ok(EXIT_OK)
    } else {
        println!("safety: VIOLATED");
        Ok(EXIT_UNSAFE)
    }
}

fn calibrate(a: &CalibrateArgs) -> Result<i32> {
    let params = match &a.config {
        Some(path) => load_config(path)?.electrolyzers[0].clone(),
        None => ElectrolyzerParams::reference(),
    };
    let spec = CalibrationSpec {
        load_fraction: a.load_fraction,
        ..CalibrationSpec::for_params(&params)
    };
    let cal = calibrate_crossover(&params, &spec);
    println!("cross_c1      {:.6e}", cal.cross_c1);
    println!("closed form   {:.6e}", cal.closed_form);
    println!("current (A)   {:.4}", cal.current);
    println!("final hto     {:.6}", cal.final_hto);
    Ok(EXIT_OK)
}

fn synth(a: &SynthArgs) -> Result<i32> {
    let gen = SyntheticWind {
        days: a.days,
        seed: a.seed,
        dt: a.dt,
        ..SyntheticWind::default()
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let profile = gen.generate();
    write_wind_csv(&profile, &a.out)?;
    println!("{} samples every {} s", profile.len(), profile.dt);
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("0.2, 0.4,1").unwrap(), vec![0.2, 0.4, 1.0]);
        assert_eq!(parse_values("1e-3").unwrap(), vec![1e-3]);
        assert!(parse_values("").is_err());
        assert!(parse_values(" , ").is_err());
        assert!(parse_values("0.2,x").is_err());
        assert!(parse_values("nan").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_from(["electro-coord"]), EXIT_USAGE);
        assert_eq!(run_from(["electro-coord", "simulate", "--out", "x"]), EXIT_USAGE);
        let code = run_from(["electro-coord", "simulate", "--config", "/nonexistent/c.json", "--out", "/tmp/x"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&Error::Wind("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Infeasible { p_min: 1.0, p_wind: 0.0 }), EXIT_UNSAFE);
        assert_eq!(exit_code(&Error::EmptyAdmissibleSet { unit: 0 }), EXIT_UNSAFE);
    }
}
