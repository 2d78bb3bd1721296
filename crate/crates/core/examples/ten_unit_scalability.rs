//! Solve-time statistics for growing clusters on the same day.

use electro_coord::metrics::run_metrics;
use electro_coord::scenarios::{representative_days, representative_scenario, SyntheticWind};
use electro_coord::{sim, SimConfig};

fn main() -> electro_coord::Result<()> {
    let set = representative_days(&SyntheticWind::default().generate(), 8, 7, 1)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>8}", "units", "avg (ms)", "p95 (ms)", "max (ms)", "relaxed");
    for n in [2, 4, 6, 8, 10] {
        let config = SimConfig::reference(n);
        let wind = representative_scenario(&set, 5, &config)?.profile;
        let m = run_metrics(&sim::run(&config, &wind)?);
        println!(
            "{n:5} {:10.4} {:10.4} {:10.4} {:8}",
            m.solve_time_avg * 1e3,
            m.solve_time_p95 * 1e3,
            m.solve_time_max * 1e3,
            m.relaxed_step_count
        );
    }
    Ok(())
}
