use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is off the surface (|level| = {level:.3e} > tolerance {tol:.3e})")]
    PointOffSurface { level: f64, tol: f64 },

    #[error("degenerate gradient (|grad| = {norm:.3e})")]
    DegenerateGradient { norm: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("no sampled surface points inside the ball of radius {radius}")]
    EmptySurfaceRegion { radius: f64 },

    #[error("sampled functions live on different grids: {0}")]
    GridMismatch(String),

    #[error("grid too coarse to certify the {eps:e}-windows: undeclared increment {increment:.3e} at t = {time}")]
    OscillationNotResolved { eps: f64, increment: f64, time: f64 },

    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: f64, right: f64 },

    #[error("initial vector is not tangent at the starting point (|<v0, n>| = {normal_component:.3e})")]
    NotTangent { normal_component: f64 },

    #[error("trajectories start at different points (distance {distance:.3e})")]
    OriginMismatch { distance: f64 },

    #[error("successive gaps are not Cauchy: gap {next:.3e} after {prev:.3e} at rung {rung}")]
    NotCauchy { rung: usize, prev: f64, next: f64 },

    #[error("nearest-point projection diverged from {point:?}")]
    ProjectionDiverged { point: Vec<f64> },

    #[error("step {step:e} exceeds the admissible maximum {max:e} for this domain")]
    StepTooLarge { step: f64, max: f64 },

    #[error("path never touches the boundary")]
    NoBoundaryContact,

    #[error("local time {requested} not reached (final local time {reached})")]
    LocalTimeNotReached { requested: f64, reached: f64 },

    #[error("replica {replica}: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    ConfigInvalid(Vec<crate::experiment::Diagnostic>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
