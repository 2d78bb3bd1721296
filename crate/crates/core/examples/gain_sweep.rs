//! Utilization across controller gain factors on one representative day.

use electro_coord::metrics::sweep::{plateau_band, sweep_gain, write_gain_csv};
use electro_coord::scenarios::{representative_days, representative_scenario, SyntheticWind};
use electro_coord::SimConfig;

fn main() -> electro_coord::Result<()> {
    let set = representative_days(&SyntheticWind::default().generate(), 8, 7, 1)?;
    let config = SimConfig::reference(4);
    let wind = representative_scenario(&set, 4, &config)?.profile;
    let factors = [1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0];
    let rows = sweep_gain(&config, &wind, &factors)?;
    for r in &rows {
        println!("factor {:8.0e}  epsilon {:.1e}  utilization {:.4}", r.factor, r.epsilon, r.energy_utilization);
    }
    if let Some((a, b)) = plateau_band(&rows, 0.01, 3) {
        println!("flat within 1 point from {} to {}", rows[a].factor, rows[b].factor);
    }
    write_gain_csv(&rows, "gain_sweep.csv")
}
