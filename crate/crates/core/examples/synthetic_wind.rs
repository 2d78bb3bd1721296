//! Generate a synthetic wind year and write it as CSV.

use electro_coord::scenarios::{write_wind_csv, SyntheticWind};

fn main() -> electro_coord::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "wind_year.csv".into());
    let gen = SyntheticWind::default();
    let year = gen.generate();
    let days = year.days()?;
    let means: Vec<f64> = days.iter().map(|d| d.iter().sum::<f64>() / d.len() as f64).collect();
    let calm = means.iter().filter(|&&m| m < 0.1).count();
    println!("{} samples every {} s over {} days", year.len(), year.dt, days.len());
    println!("capacity factor {:.3}", year.samples.iter().sum::<f64>() / year.len() as f64);
    println!("days below 10% mean output: {calm}");
    write_wind_csv(&year, &out)?;
    println!("wrote {out}");
    Ok(())
}
