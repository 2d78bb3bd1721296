//! Wind data: CSV ingestion, scaling, resampling, a synthetic generator and
//! K-means representative days.

pub mod clustering;
pub mod source;
pub mod synthetic;
pub mod wind;

pub use clustering::{
    export_representative_days, read_manifest, representative_days, Manifest, RepresentativeDaySet,
};
pub use source::{load_scenario, representative_scenario, Scenario};
pub use synthetic::SyntheticWind;
pub use wind::{load_wind_csv, resample, scale_by, scale_profile, write_wind_csv, LoadedWind, WindProfile};
