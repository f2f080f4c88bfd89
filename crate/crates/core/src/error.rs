use thiserror::Error;

pub type Result<T> = std::result::Result<T, LakeError>;

/// Every failure the library can report. Variants map one-to-one onto the
/// CLI exit-code classes through [`LakeError::class`].
#[derive(Debug, Error)]
pub enum LakeError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("empty interior: no cell center satisfies phi > 0")]
    EmptyInterior,
    #[error("point outside the boundary collar: x_n = {x_n} not in [0, {delta}]")]
    OutOfCollar { x_n: f64, delta: f64 },
    #[error("boundary search failed along direction {angle}: {reason}")]
    Boundary { angle: f64, reason: String },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("indefinite operator: non-positive curvature {curvature:.3e} at CG iteration {iteration}")]
    IndefiniteOperator { iteration: usize, curvature: f64 },
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
    #[error("kernel singularity: {0}")]
    Singularity(String),
    #[error("quadrature did not reach tolerance: estimate {estimate:.6e}, error {error:.3e}")]
    Quadrature { estimate: f64, error: f64 },
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("time step underflow at t = {time}: dt = {dt:.3e}")]
    StepUnderflow { time: f64, dt: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Configuration,
    Numerical,
    Io,
}

impl LakeError {
    pub fn class(&self) -> ErrorClass {
        use LakeError::*;
        match self {
            Validation(_) | Expression { .. } | Precondition(_) | OutOfCollar { .. } => ErrorClass::Validation,
            Configuration(_) | EmptyInterior | GridMismatch(_) | Boundary { .. } => {
                ErrorClass::Configuration
            }
            Io(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        use LakeError::*;
        match self {
            Validation(_) => "validation",
            Configuration(_) => "configuration",
            EmptyInterior => "empty-interior",
            OutOfCollar { .. } => "out-of-collar",
            Boundary { .. } => "boundary",
            Assembly(_) => "assembly",
            NonConvergence { .. } => "non-convergence",
            IndefiniteOperator { .. } => "indefinite-operator",
            UndefinedRatio(_) => "undefined-ratio",
            Singularity(_) => "singularity",
            Quadrature { .. } => "quadrature",
            Calibration(_) => "calibration",
            Precondition(_) => "precondition",
            StepUnderflow { .. } => "step-underflow",
            GridMismatch(_) => "grid-mismatch",
            Expression { .. } => "expression",
            Io(_) => "io",
        }
    }
}
