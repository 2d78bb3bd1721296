//! Fit the crossover slope so a 10% load settles at the HTO limit.

use electro_coord::calibration::{calibrate_crossover, open_loop_hto, CalibrationSpec};
use electro_coord::config::{rated_current, ElectrolyzerParams};

fn main() {
    let p = ElectrolyzerParams::reference();
    let spec = CalibrationSpec::for_params(&p);
    let cal = calibrate_crossover(&p, &spec);
    println!("slope {:.6e} mol/(s A) after {} bisections", cal.cross_c1, cal.iterations);
    println!("closed form {:.6e}", cal.closed_form);

    let mut q = p.clone();
    q.cross_c1 = cal.cross_c1;
    for frac in [0.05, 0.1, 0.2, 0.5, 1.0] {
        let hto = open_loop_hto(&q, &spec, frac * rated_current(&q));
        println!("{:3.0}% load for 48 h: HTO {hto:.5}", frac * 100.0);
    }
}
