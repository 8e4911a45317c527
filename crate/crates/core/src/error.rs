use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element sets are not nested: {0}")]
    NotNested(String),

    #[error("empty element set: {0}")]
    EmptySet(String),

    #[error("singular matrix (achieved relative residual {residual:.3e})")]
    Singular { residual: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("internal numerical error: {0}")]
    Internal(String),

    #[error("extension stability bound violated: {lhs:.6e} > {rhs:.6e}")]
    StabilityViolated { lhs: f64, rhs: f64 },

    #[error("missing history: {0}")]
    MissingHistory(String),

    #[error("degenerate level set gradient |grad phi| = {norm:.3e} at {point:?}")]
    DegenerateGradient { norm: f64, point: Vec<f64> },

    #[error("interface lost at t = {time}")]
    InterfaceLost { time: f64 },

    #[error("interface not closed inside the band: {0}")]
    OpenInterface(String),

    #[error("projection domain escaped the band after {halvings} time step halvings at t = {time}")]
    TooManyHalvings { halvings: usize, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotConverged { .. }
                | Error::Internal(_)
                | Error::StabilityViolated { .. }
                | Error::DegenerateGradient { .. }
                | Error::InterfaceLost { .. }
                | Error::OpenInterface(_)
                | Error::TooManyHalvings { .. }
        )
    }
}
