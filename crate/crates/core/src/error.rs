use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the solvers and the job runner.
#[derive(Debug, Error)]
pub enum PtError {
    #[error("operation not supported for this potential family: {0}")]
    UnsupportedMode(&'static str),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("trajectory came within {distance:.3e} of the branch point at the origin")]
    OriginProximity { distance: f64 },

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("degenerate wedge geometry: 2K + eps + 2 = {0}")]
    DegenerateWedge(f64),

    #[error("requested seed grows along the ray")]
    GrowingSeed,

    #[error("ray integration overflowed: {0}")]
    Overflow(String),

    #[error("no convergence after {iterations} iterations (best estimate {best}, |W| = {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        best: Complex64,
        residual: f64,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("eigenvalue iteration did not converge: {0}")]
    Eigen(String),

    #[error("bracket does not contain a coalescence: {0}")]
    Bracket(String),

    #[error("double precision exhausted: {0}")]
    Precision(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PtError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PtError::Domain(_)
            | PtError::UnsupportedMode(_)
            | PtError::DegenerateWedge(_)
            | PtError::UnknownFigure(_)
            | PtError::Config(_)
            | PtError::Bracket(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PtError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(PtError::Domain(msg.into()))
}
