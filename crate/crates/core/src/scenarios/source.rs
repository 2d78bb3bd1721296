use std::path::{Path, PathBuf};

use super::clustering::{read_manifest, RepresentativeDaySet, MANIFEST_FILE};
use super::wind::{load_wind_csv, resample, scale_by, WindProfile};
use crate::config::{Scaling, SimConfig};
use crate::error::{Error, Result};

/// A wind profile ready for simulation plus the peak its scaling refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub profile: WindProfile,
    pub reference_peak: f64,
    pub scale_factor: f64,
    pub clamped_negative: usize,
}

fn manifest_path(path: &Path) -> Option<PathBuf> {
    if path.is_dir() {
        return Some(path.join(MANIFEST_FILE));
    }
    (path.extension().is_some_and(|e| e == "json")).then(|| path.to_path_buf())
}

/// Load the wind for one run.
///
/// `path` is a wind CSV or a representative-day directory (or its manifest).
/// For a directory `day` picks the representative and scaling refers to the
/// peak of the source year; for a CSV `day` cuts one calendar day and
/// scaling refers to the whole file. The result is resampled to the
/// controller period.
pub fn load_scenario(path: impl AsRef<Path>, day: Option<usize>, config: &SimConfig) -> Result<Scenario> {
    let path = path.as_ref();
    let dt = config.controller.dt;
    let (profile, reference_peak, clamped_negative) = match manifest_path(path) {
        Some(mpath) => {
            let manifest = read_manifest(&mpath)?;
            let index = day.unwrap_or(0);
            let file = manifest.files.get(index).ok_or_else(|| {
                Error::Wind(format!("day {index} out of range ({} representatives)", manifest.files.len()))
            })?;
            let dir = mpath.parent().unwrap_or(Path::new("."));
            let loaded = load_wind_csv(dir.join(file), manifest.dt)?;
            (loaded.profile, manifest.source_peak, loaded.clamped_negative)
        }
        None => {
            let loaded = load_wind_csv(path, dt)?;
            let peak = loaded.profile.peak();
            let profile = match day {
                Some(i) => loaded.profile.day(i)?,
                None => loaded.profile,
            };
            (profile, peak, loaded.clamped_negative)
        }
    };
    prepare(profile, reference_peak, clamped_negative, config)
}

/// Representative day `index` of an in-memory set, scaled against the
/// source year.
pub fn representative_scenario(set: &RepresentativeDaySet, index: usize, config: &SimConfig) -> Result<Scenario> {
    let day = set
        .days
        .get(index)
        .ok_or_else(|| Error::Wind(format!("day {index} out of range ({} representatives)", set.days.len())))?;
    prepare(day.clone(), set.source_peak, 0, config)
}

fn prepare(profile: WindProfile, reference_peak: f64, clamped_negative: usize, config: &SimConfig) -> Result<Scenario> {
    let dt = config.controller.dt;
    let profile = if (profile.dt - dt).abs() > 1e-9 * dt {
        resample(&profile, dt)
    } else {
        profile
    };
    let target = match config.wind_source.scaling {
        Scaling::None => None,
        Scaling::ClusterRating => Some(config.cluster_rating()),
        Scaling::Peak { peak_w } => Some(peak_w),
    };
    let scale_factor = match target {
        None => 1.0,
        Some(_) if reference_peak <= 0.0 => {
            return Err(Error::DegenerateProfile(format!("{} has no positive sample", profile.label)))
        }
        Some(t) => t / reference_peak,
    };
    Ok(Scenario {
        profile: scale_by(&profile, scale_factor),
        reference_peak,
        scale_factor,
        clamped_negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{export_representative_days, representative_days, write_wind_csv};

    fn two_days() -> WindProfile {
        let mut s = vec![1.0; 24];
        s.extend(vec![4.0; 24]);
        WindProfile::new(3600.0, s, "two")
    }

    #[test]
    fn csv_day_is_resampled_and_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        write_wind_csv(&two_days(), &path).unwrap();
        let mut cfg = SimConfig::reference(1);
        cfg.wind_source.scaling = Scaling::Peak { peak_w: 800.0 };
        let sc = load_scenario(&path, Some(0), &cfg).unwrap();
        assert_eq!(sc.profile.dt, 1.0);
        assert_eq!(sc.profile.len(), 86_400);
        assert_eq!(sc.reference_peak, 4.0);
        assert!(sc.profile.samples.iter().all(|&v| v == 200.0));
    }

    #[test]
    fn manifest_uses_source_peak() {
        let dir = tempfile::tempdir().unwrap();
        let set = representative_days(&two_days(), 2, 3, 1).unwrap();
        export_representative_days(&set, dir.path()).unwrap();
        let mut cfg = SimConfig::reference(1);
        cfg.wind_source.scaling = Scaling::None;
        let sc = load_scenario(dir.path(), Some(1), &cfg).unwrap();
        assert_eq!(sc.reference_peak, 4.0);
        assert!(sc.profile.samples.iter().all(|&v| v == 1.0));
        assert!(load_scenario(dir.path(), Some(2), &cfg).is_err());
        cfg.wind_source.scaling = Scaling::ClusterRating;
        let sc = load_scenario(dir.path().join(MANIFEST_FILE), Some(0), &cfg).unwrap();
        assert!((sc.profile.peak() - cfg.cluster_rating()).abs() < 1e-9);
        let mem = representative_scenario(&set, 0, &cfg).unwrap();
        assert_eq!(mem.profile.samples, sc.profile.samples);
    }

    #[test]
    fn all_zero_wind_cannot_be_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        write_wind_csv(&WindProfile::new(3600.0, vec![0.0; 24], "z"), &path).unwrap();
        let cfg = SimConfig::reference(1);
        assert!(matches!(load_scenario(&path, None, &cfg), Err(Error::DegenerateProfile(_))));
    }
}
