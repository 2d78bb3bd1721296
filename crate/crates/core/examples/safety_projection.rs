//! Projection of a reference onto three admissible sets under a wind budget,
//! checked against the grid oracle.

use electro_coord::cbf::{AdmissibleSet, Interval};
use electro_coord::config::ElectrolyzerParams;
use electro_coord::plant::ElectrolyzerState;
use electro_coord::safety::{brute_force_project, feasibility_check, project};

fn main() -> electro_coord::Result<()> {
    let params = vec![ElectrolyzerParams::reference(); 3];
    let states: Vec<_> = [30.0, 45.0, 60.0].map(ElectrolyzerState::fresh).to_vec();
    let mut split = AdmissibleSet::single(Interval::new(2.0, 3.0));
    split.intervals.push(Interval::new(6.0, 9.0));
    let sets = vec![
        AdmissibleSet::single(Interval::new(4.0, 8.0)),
        split,
        AdmissibleSet::single(Interval::new(0.0, 10.0)),
    ];
    let u_des = [7.5, 7.0, 9.0];
    for p_wind in [5000.0, 1500.0, 1000.0, 600.0] {
        let report = feasibility_check(&sets, &params, &states, p_wind);
        let out = project(&u_des, &sets, &params, &states, p_wind, report.relaxed, 1e-6)?;
        print!(
            "wind {p_wind:6.0} W: {:?} stage {:?}, {:.1} W, objective {:.4}",
            out.u.iter().map(|u| (u * 1e3).round() / 1e3).collect::<Vec<_>>(),
            out.stage,
            out.p_total,
            out.objective
        );
        if report.relaxed {
            println!(" (relaxed, minimum reachable {:.1} W)", report.p_min_reach);
            continue;
        }
        let grid = brute_force_project(&u_des, &sets, &params, &states, p_wind, false, 1e-2).unwrap();
        let grid_obj = 0.5 * grid.iter().zip(&u_des).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        println!(", grid {grid_obj:.4}");
    }
    Ok(())
}
