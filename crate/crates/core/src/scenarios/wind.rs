use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Uniformly sampled wind power (W, or any consistent unit before scaling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindProfile {
    /// Sampling period (s).
    pub dt: f64,
    pub samples: Vec<f64>,
    pub label: String,
}

impl WindProfile {
    pub fn new(dt: f64, samples: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            dt,
            samples,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m: f64, &v| m.max(v))
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    /// Samples in one day, if the period divides a day evenly.
    pub fn samples_per_day(&self) -> Option<usize> {
        let n = SECONDS_PER_DAY / self.dt;
        let r = n.round();
        ((n - r).abs() < 1e-9 && r >= 1.0).then_some(r as usize)
    }

    /// Whole-day slices. Errors unless the profile covers an integer number of days.
    pub fn days(&self) -> Result<Vec<&[f64]>> {
        let per_day = self
            .samples_per_day()
            .ok_or_else(|| Error::Wind(format!("sampling period {} s does not divide a day", self.dt)))?;
        if self.samples.is_empty() || self.samples.len() % per_day != 0 {
            return Err(Error::Wind(format!(
                "{} samples is not a whole number of days at {} samples per day",
                self.samples.len(),
                per_day
            )));
        }
        Ok(self.samples.chunks(per_day).collect())
    }

    pub fn day(&self, index: usize) -> Result<WindProfile> {
        let days = self.days()?;
        let day = days
            .get(index)
            .ok_or_else(|| Error::Wind(format!("day {index} out of range ({} days)", days.len())))?;
        Ok(WindProfile::new(self.dt, day.to_vec(), format!("{}#day{index}", self.label)))
    }
}

/// A loaded profile plus the number of negative readings that were set to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedWind {
    pub profile: WindProfile,
    pub clamped_negative: usize,
}

fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp_millis() as f64 / 1000.0);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp_millis() as f64 / 1000.0);
        }
    }
    None
}

/// Read a `timestamp,power_w` or `power_w` CSV. Untimed files use
/// `untimed_dt` as their sampling period.
pub fn load_wind_csv(path: impl AsRef<Path>, untimed_dt: f64) -> Result<LoadedWind> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let power_col = headers
        .iter()
        .position(|h| h == "power_w")
        .ok_or_else(|| Error::Wind(format!("{}: missing power_w column", path.display())))?;
    let time_col = headers.iter().position(|h| h == "timestamp");

    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut clamped = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let raw = record.get(power_col).unwrap_or("");
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::Wind(format!("{}:{line}: bad power value {raw:?}", path.display())))?;
        if !value.is_finite() {
            return Err(Error::Wind(format!("{}:{line}: non-finite power", path.display())));
        }
        if value < 0.0 {
            clamped += 1;
        }
        samples.push(value.max(0.0));
        if let Some(tc) = time_col {
            let raw = record.get(tc).unwrap_or("");
            times.push(
                parse_timestamp(raw)
                    .ok_or_else(|| Error::Wind(format!("{}:{line}: bad timestamp {raw:?}", path.display())))?,
            );
        }
    }
    if samples.is_empty() {
        return Err(Error::Wind(format!("{}: no samples", path.display())));
    }
    let dt = if time_col.is_some() && times.len() > 1 {
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(Error::Wind(format!("{}: timestamps must increase", path.display())));
        }
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::Wind(format!(
                    "{}: non-uniform sampling at row {} ({} s vs {} s)",
                    path.display(),
                    k + 3,
                    w[1] - w[0],
                    dt
                )));
            }
        }
        dt
    } else {
        untimed_dt
    };
    if clamped > 0 {
        log::warn!("{}: {clamped} negative readings clamped to 0", path.display());
    }
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(LoadedWind {
        profile: WindProfile::new(dt, samples, label),
        clamped_negative: clamped,
    })
}

/// Write `timestamp,power_w` with timestamps in seconds from the start.
pub fn write_wind_csv(profile: &WindProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["timestamp", "power_w"])?;
    for (k, v) in profile.samples.iter().enumerate() {
        w.write_record([format!("{}", k as f64 * profile.dt), format!("{v}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Rescale so the largest sample equals `target_peak`.
pub fn scale_profile(profile: &WindProfile, target_peak: f64) -> Result<WindProfile> {
    let peak = profile.peak();
    if peak <= 0.0 {
        return Err(Error::DegenerateProfile(format!("{} has no positive sample", profile.label)));
    }
    Ok(scale_by(profile, target_peak / peak))
}

pub fn scale_by(profile: &WindProfile, factor: f64) -> WindProfile {
    WindProfile::new(
        profile.dt,
        profile.samples.iter().map(|v| v * factor).collect(),
        profile.label.clone(),
    )
}

/// Linear interpolation onto a new period, covering the same duration.
/// Points past the last sample hold its value.
pub fn resample(profile: &WindProfile, new_dt: f64) -> WindProfile {
    let n_new = (profile.duration() / new_dt).round() as usize;
    let last = profile.samples.len().saturating_sub(1);
    let samples = (0..n_new)
        .map(|j| {
            let pos = j as f64 * new_dt / profile.dt;
            let k = pos.floor() as usize;
            if k >= last {
                return profile.samples[last];
            }
            let frac = pos - k as f64;
            let (a, b) = (profile.samples[k], profile.samples[k + 1]);
            if frac == 0.0 {
                a
            } else {
                a + (b - a) * frac
            }
        })
        .collect();
    WindProfile::new(new_dt, samples, profile.label.clone())
}

/// Block means over `factor` consecutive samples; a ragged tail is dropped.
pub fn block_average(samples: &[f64], factor: usize) -> Vec<f64> {
    samples
        .chunks_exact(factor.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}
