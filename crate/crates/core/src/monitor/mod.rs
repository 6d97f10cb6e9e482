//! Energy-based fault detection and isolation.
//!
//! Once cued inference is done, the energy at a recalled step reduces to the
//! squared distance between what was observed and what the memory predicted;
//! that is the fault score. A threshold is the nearest-rank percentile of the
//! scores seen during normal operation, and isolation attributes an alarm to
//! the channel with the largest absolute prediction error.

mod detect;
pub mod grid;
mod pead;
pub mod reactive;

pub use detect::{
    calibrate_threshold, detect, fault_score, isolate, DetectionReport, DetectionThreshold, IsolationScope,
};
pub use grid::{
    eval_grid, evaluate_method, Execution, GridConfig, GridEvaluation, GridResult, GridRow, GridSpec, IsolationUnits, Plan,
    ScoredTrial, SkillMonitor,
};
pub use pead::{pead, Pead};
pub use reactive::{reactive_correct, ReactiveOutcome};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("no calibration energies")]
    EmptyCalibration,
    #[error("percentile must lie in (0, 1], got {0}")]
    Percentile(f64),
    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    Length { context: &'static str, expected: usize, found: usize },
    #[error("start and target points coincide")]
    DegenerateLine,
    #[error("path is empty")]
    EmptyPath,
    #[error(transparent)]
    Tpc(#[from] crate::tpc::TpcError),
    #[error(transparent)]
    Kinematics(#[from] crate::arm::KinematicsError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}
