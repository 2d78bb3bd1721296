//! Admissible current sets of one unit close to its HTO limit.

use electro_coord::cbf::{cbf_coefficients, cubic_value, nonneg_region};
use electro_coord::config::ElectrolyzerParams;
use electro_coord::plant::{self, ElectrolyzerState};
use electro_coord::safety::box_bounds;

fn main() -> electro_coord::Result<()> {
    let p = ElectrolyzerParams::reference();
    // Idle at low load until zero current is no longer admissible.
    let mut s = ElectrolyzerState::fresh(25.0);
    for _ in 0..400_000 {
        if cubic_value(&cbf_coefficients(&p, &s, 25.0, 0.2, 1.0), 0.0) < 0.0 {
            break;
        }
        s = plant::step(&p, &s, 1.0, 25.0, 1.0).state;
    }
    println!("state: T {:.2} °C, HTO {:.5}", s.t_ele, plant::hto(&p, &s));

    let bounds = box_bounds(&p, &s, 1.0, 1.0)?;
    println!("box [{:.3}, {:.3}] A", bounds.lower, bounds.upper);
    for alpha in [0.05, 0.2, 0.5, 0.8, 1.0] {
        let c = cbf_coefficients(&p, &s, 25.0, alpha, 1.0);
        let set = nonneg_region(&c, bounds.interval(), 1e-9);
        let u = set.u_minus().unwrap_or(f64::NAN);
        println!(
            "alpha {alpha:.2}: {:?}, minimum current {u:.4} A, cubic there {:.2e}",
            set.intervals.iter().map(|iv| (iv.lo, iv.hi)).collect::<Vec<_>>(),
            cubic_value(&c, u)
        );
    }
    Ok(())
}
