//! Cluster a wind year into representative days and export them.

use electro_coord::scenarios::{export_representative_days, representative_days, SyntheticWind};

fn main() -> electro_coord::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "repdays".into());
    let year = SyntheticWind::default().generate();
    let set = representative_days(&year, 8, 7, 1)?;
    println!("k-means passes: {}", set.wcss_history.len());
    println!("wcss {:.3} -> {:.3}", set.wcss_history[0], set.wcss_history.last().unwrap());
    for (j, day) in set.days.iter().enumerate() {
        let mean = day.samples.iter().sum::<f64>() / day.len() as f64;
        println!("rep {j}: source day {:3}, {:3} members, mean output {:.3}", set.medoids[j], set.weights[j], mean);
    }
    let manifest = export_representative_days(&set, &out)?;
    println!("wrote {} day files to {out}", manifest.files.len());
    Ok(())
}
