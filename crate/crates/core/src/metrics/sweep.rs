use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kpi::{run_metrics, RunMetrics};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scenarios::WindProfile;
use crate::sim;

pub const THREADS_ENV: &str = "ELECTRO_COORD_THREADS";

/// Worker count from `ELECTRO_COORD_THREADS`, else the available cores.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Threads(e.to_string()))
}

/// Run every configuration, in parallel, keeping input order.
pub fn run_all(configs: &[SimConfig], wind: &WindProfile) -> Result<Vec<RunMetrics>> {
    pool()?.install(|| {
        configs
            .par_iter()
            .map(|c| sim::run(c, wind).map(|t| run_metrics(&t)))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSweepRow {
    pub factor: f64,
    pub epsilon: f64,
    pub energy_utilization: f64,
    pub storage_energy: f64,
    pub hto_violations: usize,
}

/// One run per factor with the gain scaled relative to `config`.
pub fn sweep_gain(config: &SimConfig, wind: &WindProfile, factors: &[f64]) -> Result<Vec<GainSweepRow>> {
    let configs: Vec<SimConfig> = factors
        .iter()
        .map(|&f| {
            let mut c = config.clone();
            c.controller.epsilon *= f;
            c
        })
        .collect();
    let metrics = run_all(&configs, wind)?;
    Ok(factors
        .iter()
        .zip(&configs)
        .zip(metrics)
        .map(|((&factor, c), m)| GainSweepRow {
            factor,
            epsilon: c.controller.epsilon,
            energy_utilization: m.energy_utilization,
            storage_energy: m.storage_energy,
            hto_violations: m.hto_violations,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub storage_energy: f64,
    pub solve_time_avg: f64,
    pub energy_utilization: f64,
    pub relaxed_step_count: usize,
    pub hto_violations: usize,
}

pub fn sweep_alpha(config: &SimConfig, wind: &WindProfile, alphas: &[f64]) -> Result<Vec<AlphaSweepRow>> {
    let configs: Vec<SimConfig> = alphas
        .iter()
        .map(|&a| {
            let mut c = config.clone();
            c.controller.alpha = a;
            c
        })
        .collect();
    let metrics = run_all(&configs, wind)?;
    Ok(alphas
        .iter()
        .zip(metrics)
        .map(|(&alpha, m)| AlphaSweepRow {
            alpha,
            storage_energy: m.storage_energy,
            solve_time_avg: m.solve_time_avg,
            energy_utilization: m.energy_utilization,
            relaxed_step_count: m.relaxed_step_count,
            hto_violations: m.hto_violations,
        })
        .collect())
}

/// Longest run of at least `min_len` consecutive rows whose utilization
/// spread stays below `width`. Returns inclusive row indices.
pub fn plateau_band(rows: &[GainSweepRow], width: f64, min_len: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for start in 0..rows.len() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for end in start..rows.len() {
            lo = lo.min(rows[end].energy_utilization);
            hi = hi.max(rows[end].energy_utilization);
            if hi - lo >= width {
                break;
            }
            let len = end - start + 1;
            if len >= min_len && best.is_none_or(|(s, e)| len > e - s + 1) {
                best = Some((start, end));
            }
        }
    }
    best
}

/// Adjacent pairs where `values` rises by more than `noise` relative to the
/// earlier value.
pub fn inversions(values: &[f64], noise: f64) -> usize {
    values.windows(2).filter(|w| w[1] > w[0] * (1.0 + noise)).count()
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_gain_csv(rows: &[GainSweepRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path.as_ref())
}

pub fn write_alpha_csv(rows: &[AlphaSweepRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path.as_ref())
}
