use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(Violations),

    #[error("negative current {0} A")]
    NegativeCurrent(f64),

    /// The linear resistance term `rho1 + rho2 * T` must stay positive for the
    /// power model to be monotone in current.
    #[error("model validity: rho1 + rho2*T = {value} at T = {t_ele} °C is not positive")]
    ModelValidity { t_ele: f64, value: f64 },

    #[error("unit {unit}: admissible current set is empty")]
    EmptyAdmissibleSet { unit: usize },

    #[error("coupled projection infeasible: minimum reachable power {p_min} W exceeds {p_wind} W")]
    Infeasible { p_min: f64, p_wind: f64 },

    #[error("unit {unit}: initial state is unsafe (HTO {hto} > {hto_max})")]
    UnsafeInitialState { unit: usize, hto: f64, hto_max: f64 },

    #[error("wind profile has {len} samples but the horizon needs {needed}")]
    WindTooShort { len: usize, needed: usize },

    #[error("wind data: {0}")]
    Wind(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("k = {k} exceeds the number of days ({days})")]
    TooManyClusters { k: usize, days: usize },

    #[error("trace: {0}")]
    Trace(String),

    #[error("worker pool: {0}")]
    Threads(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Non-empty list of configuration violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
