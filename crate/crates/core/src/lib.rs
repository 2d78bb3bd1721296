//! Coordinated real-time operation of wind-powered alkaline electrolyzer
//! clusters.
//!
//! A feedback-optimization layer ([`fo`]) turns the measured power mismatch
//! into current references; a safety layer ([`safety`]) projects them onto
//! ramp, electrical and power-coupling limits and onto the admissible region
//! of a discrete-time barrier function on HTO ([`cbf`]). [`sim`] closes the
//! loop around the Euler plant in [`plant`]; [`scenarios`] and [`metrics`]
//! drive experiments and score them.

pub mod calibration;
pub mod cbf;
pub mod cli;
pub mod config;
pub mod error;
pub mod fo;
pub mod metrics;
pub mod plant;
pub mod roots;
pub mod safety;
pub mod scenarios;
pub mod sim;

pub use config::{load_config, validate, ControllerParams, ElectrolyzerParams, SimConfig};
pub use error::{Error, Result};
pub use plant::ElectrolyzerState;
pub use scenarios::WindProfile;
pub use sim::{run, StepLog, Trace};
