//! Run KPIs, contraction diagnostics and parameter sweeps.

pub mod contraction;
pub mod kpi;
pub mod sweep;

pub use contraction::{contraction_diagnostics, ContractionDiagnostics};
pub use kpi::{
    energy_utilization, hto_violations, run_metrics, solve_time_stats, storage_energy, time_stats, RunMetrics,
    SolveTimeStats,
};
pub use sweep::{sweep_alpha, sweep_gain, AlphaSweepRow, GainSweepRow};
