//! Storage energy and solve time across barrier decay rates.

use electro_coord::metrics::sweep::{sweep_alpha, write_alpha_csv};
use electro_coord::scenarios::{representative_days, representative_scenario, SyntheticWind};
use electro_coord::SimConfig;

fn main() -> electro_coord::Result<()> {
    let set = representative_days(&SyntheticWind::default().generate(), 8, 7, 1)?;
    let config = SimConfig::reference(4);
    let day: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let wind = representative_scenario(&set, day, &config)?.profile;
    let rows = sweep_alpha(&config, &wind, &[0.2, 0.4, 0.6, 0.8, 1.0])?;
    for r in &rows {
        println!(
            "alpha {:.1}  storage {:9.3} Wh  relaxed {:6}  solve avg {:.2} us",
            r.alpha,
            r.storage_energy,
            r.relaxed_step_count,
            r.solve_time_avg * 1e6
        );
    }
    write_alpha_csv(&rows, "alpha_sweep.csv")
}
