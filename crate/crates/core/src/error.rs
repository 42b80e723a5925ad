use thiserror::Error;

/// Errors raised by the attitude and frame helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("zero MRP has no shadow set")]
    ZeroMrp,
    #[error("MRP composition is singular (denominator {denominator:e})")]
    NearSingularComposition { denominator: f64 },
}

/// Errors raised by the field and wrench models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticsError {
    #[error("coincident dipoles (separation {separation:e} m)")]
    Coincident { separation: f64 },
    #[error("evaluation point lies inside the Earth (|r| = {radius:e} m)")]
    InsideEarth { radius: f64 },
    #[error("expected {expected} dipoles, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Errors raised when building a formation model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("formation needs at least {min} satellites, got {got}")]
    TooFewSatellites { min: usize, got: usize },
    #[error("at least one satellite must carry reaction wheels")]
    NoReactionWheels,
    #[error("satellite {index}: {reason}")]
    BadSatellite { index: usize, reason: String },
    #[error("state does not match the formation: {0}")]
    StateShape(String),
}

/// Errors raised by the integrator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite state at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors raised by the control laws.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("reduced mass matrix is not positive definite")]
    SingularMassMatrix,
    #[error("controller needs {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
}

/// Errors raised by the dipole inversion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InversionError {
    #[error("commanded wrenches violate conservation (relative error {relative:e})")]
    InfeasibleCommand { relative: f64 },
    #[error("problem shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
}

/// Errors raised while loading and running scenarios.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown scenario or preset `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Schema { .. }
            | HarnessError::Validation(_)
            | HarnessError::UnknownScenario(_)
            | HarnessError::Model(_) => 2,
            HarnessError::Dynamics(DynamicsError::NonFiniteState { .. }) => 3,
            _ => 1,
        }
    }
}
