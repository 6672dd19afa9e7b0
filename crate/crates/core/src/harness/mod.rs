//! Closed-loop scenario harness: avoidance path, speed and steering laws,
//! the runner, and trace export.

pub mod control;
pub mod path_builder;
pub mod scenario;
pub mod trace;

use thiserror::Error;

pub use control::{speed_control, steer_control, ControlConfig};
pub use path_builder::{build_avoidance_path, crosswalk_line_s, occlusion_zone, PathConfig};
pub use scenario::{run_scenario, run_scenario_with, PomdpRuntime, ScenarioConfig, TerminationConfig};
pub use trace::{export_trace, Termination, Trace, TraceFormat, TraceMeta, TraceRow};

use crate::dynamics::DynamicsError;
use crate::path::PathError;
use crate::pomdp::PomdpError;
use crate::qmdp::SolverError;
use crate::world::SceneError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("avoidance path infeasible: {0}")]
    InfeasiblePath(String),
    #[error("run aborted after {} steps: {message}", partial.rows.len())]
    Run { message: String, partial: Box<Trace> },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Model(#[from] PomdpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("json: {0}")]
    Json(String),
}
