use thiserror::Error;

/// Every failure the library reports. Variants map onto CLI exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("support interval collapsed (b - a = {0:e})")]
    DegenerateInterval(f64),
    #[error("x = {x} lies outside the open support ({a}, {b})")]
    OutOfSupport { x: f64, a: f64, b: f64 },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("Newton iterates blew up at s = {s} (|y| = {magnitude:e}); wrong solution branch?")]
    PoleSuspected { s: f64, magnitude: f64 },
    #[error("{what} = {value} outside the admissible range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("zeta = {re}{im:+}i lies on the branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },
    #[error("path integration failed: {0}")]
    PathFailure(String),
    #[error("reality defect {defect:e} exceeds tolerance {tolerance:e} at u = {u}")]
    ContaminationDetected { u: f64, defect: f64, tolerance: f64 },
    #[error("h calibration unstable: {0}")]
    CalibrationUnstable(String),
    #[error("precision exhausted: validation run disagrees by {0:e}")]
    PrecisionExhausted(f64),
    #[error("non-positive norm at degree {0}; raise the working digits")]
    NonPositiveNorm(usize),
    #[error("invalid potential family: {0}")]
    InvalidFamily(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidFamily(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
