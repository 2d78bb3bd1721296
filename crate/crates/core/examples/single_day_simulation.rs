//! Closed-loop run of the four-unit cluster over one representative day.

use std::time::Instant;

use electro_coord::metrics::{contraction_diagnostics, run_metrics};
use electro_coord::scenarios::{representative_days, resample, scale_by, SyntheticWind};
use electro_coord::sim::{self, audit};
use electro_coord::SimConfig;

fn main() -> electro_coord::Result<()> {
    let n_ele: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let day: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let year = SyntheticWind::default().generate();
    let set = representative_days(&year, 8, 7, 1)?;
    let config = SimConfig::reference(n_ele);

    let wind = resample(&set.days[day], config.controller.dt);
    let wind = scale_by(&wind, config.cluster_rating() / set.source_peak);
    println!("{}: mean {:.1} W, peak {:.1} W", wind.label, wind.samples.iter().sum::<f64>() / wind.len() as f64, wind.peak());

    let start = Instant::now();
    let trace = sim::run(&config, &wind)?;
    println!("simulated {} steps in {:.2?}", trace.steps.len(), start.elapsed());

    let m = run_metrics(&trace);
    println!("utilization      {:.4}", m.energy_utilization);
    println!("storage energy   {:.2} Wh", m.storage_energy);
    println!("hto peak         {:.6} ({} violations)", m.hto_peak, m.hto_violations);
    println!("solve time       avg {:.3} ms, p95 {:.3} ms, max {:.3} ms", m.solve_time_avg * 1e3, m.solve_time_p95 * 1e3, m.solve_time_max * 1e3);
    println!("relaxed steps    {}", m.relaxed_step_count);

    let a = audit(&trace)?;
    println!("one-step excess  {:.3e}", a.one_step_excess);
    let c = contraction_diagnostics(&trace);
    println!("q_hat {:.4}, tail |e| {:.2} W, bound {:.2} W", c.q_hat, c.tail_max_mismatch, c.uub_bound);
    Ok(())
}
