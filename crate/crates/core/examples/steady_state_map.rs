//! Steady temperature, power and slope over the current range.

use electro_coord::config::{rated_current, ElectrolyzerParams};
use electro_coord::fo::steady_map;

fn main() {
    let p = ElectrolyzerParams::reference();
    let i_rated = rated_current(&p);
    println!("{:>8} {:>9} {:>10} {:>10}", "u (A)", "T (°C)", "h (W)", "dh/du");
    for k in 0..=10 {
        let u = i_rated * f64::from(k) / 10.0;
        let m = steady_map(&p, u, 25.0);
        println!("{u:8.3} {:9.3} {:10.2} {:10.3}", m.t_hat, m.h, m.dh_du);
    }
}
