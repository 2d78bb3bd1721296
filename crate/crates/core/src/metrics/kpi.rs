use serde::{Deserialize, Serialize};

use crate::sim::Trace;

/// Slack on the HTO limit when counting violations.
pub const HTO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: usize,
    pub energy_utilization: f64,
    /// Energy drawn from storage (Wh).
    pub storage_energy: f64,
    pub hto_peak: f64,
    pub hto_violations: usize,
    pub solve_time_avg: f64,
    pub solve_time_p95: f64,
    pub solve_time_max: f64,
    pub relaxed_step_count: usize,
    pub clamp_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveTimeStats {
    pub avg: f64,
    pub p95: f64,
    pub max: f64,
}

/// Wind energy absorbed by the cluster over wind energy offered. A trace
/// without wind counts as fully utilized.
pub fn energy_utilization(trace: &Trace) -> f64 {
    let offered: f64 = trace.steps.iter().map(|s| s.p_wind).sum();
    if offered <= 0.0 {
        return 1.0;
    }
    let used: f64 = trace.steps.iter().map(|s| s.p_total.min(s.p_wind)).sum();
    used / offered
}

/// Storage energy (Wh).
pub fn storage_energy(trace: &Trace) -> f64 {
    let dt = trace.config.controller.dt;
    trace.steps.iter().map(|s| s.storage_power).sum::<f64>() * dt / 3600.0
}

/// Mean, nearest-rank 95th percentile and maximum.
pub fn time_stats(times: &[f64]) -> SolveTimeStats {
    if times.is_empty() {
        return SolveTimeStats { avg: 0.0, p95: 0.0, max: 0.0 };
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (0.95 * sorted.len() as f64).ceil() as usize;
    SolveTimeStats {
        avg: times.iter().sum::<f64>() / times.len() as f64,
        p95: sorted[rank.max(1) - 1],
        max: sorted[sorted.len() - 1],
    }
}

pub fn solve_time_stats(trace: &Trace) -> SolveTimeStats {
    let times: Vec<f64> = trace.steps.iter().map(|s| s.solve_time).collect();
    time_stats(&times)
}

pub fn hto_peak(trace: &Trace) -> f64 {
    trace
        .steps
        .iter()
        .flat_map(|s| s.hto.iter().copied())
        .fold(0.0, f64::max)
}

/// (step, unit) pairs above the unit's limit plus [`HTO_SLACK`].
pub fn hto_violations(trace: &Trace) -> usize {
    let limits: Vec<f64> = trace.config.electrolyzers.iter().map(|p| p.hto_max + HTO_SLACK).collect();
    trace
        .steps
        .iter()
        .map(|s| s.hto.iter().zip(&limits).filter(|(h, l)| h > l).count())
        .sum()
}

pub fn run_metrics(trace: &Trace) -> RunMetrics {
    let t = solve_time_stats(trace);
    RunMetrics {
        steps: trace.steps.len(),
        energy_utilization: energy_utilization(trace),
        storage_energy: storage_energy(trace),
        hto_peak: hto_peak(trace),
        hto_violations: hto_violations(trace),
        solve_time_avg: t.avg,
        solve_time_p95: t.p95,
        solve_time_max: t.max,
        relaxed_step_count: trace.steps.iter().filter(|s| s.relaxed).count(),
        clamp_events: trace.clamp_events,
    }
}
