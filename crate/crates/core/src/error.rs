use thiserror::Error;

use crate::feasibility::FeasibilityReport;
use crate::verifier::Sample;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("barrier parameters carry no feasibility certificate")]
    InfeasibleParams,

    #[error("parameter system {:?} is infeasible", .0.system)]
    Infeasible(Box<FeasibilityReport>),

    #[error("time {t} is at or beyond the barrier horizon {horizon}")]
    TimeAtOrBeyondHorizon { t: f64, horizon: f64 },

    #[error("sample at r = {r} lies on the cutoff surface (profile = {profile:e})")]
    OnCutoffSurface { r: f64, profile: f64 },

    #[error("residual has the wrong sign at r = {}, t = {} (residual {:e})", .0.r, .0.t, .0.residual)]
    ResidualViolation(Box<Sample>),

    #[error("time step collapsed to {dt:e} at t = {t}")]
    StepCollapse { t: f64, dt: f64 },

    #[error("nested-ball solutions are not monotone in R: radius {radius} falls below radius {smaller} by {excess:e} at r = {r}, t = {t}")]
    MonotonicityViolation {
        smaller: f64,
        radius: f64,
        r: f64,
        t: f64,
        excess: f64,
    },

    #[error("precondition rejected: {0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
