use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point, ball or argument lies outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("numeric error: {message} (residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },

    /// The Jacobi field vanished before the end of the geodesic.
    #[error("conjugate point at s = {s:.6} along a geodesic of length {length:.6}")]
    ConjugatePoint { s: f64, length: f64 },

    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// Expression or table parse failure.
    #[error("parse error in {field} at column {column}: {message}")]
    Parse {
        field: String,
        column: usize,
        message: String,
    },

    /// The transport-induced Jacobian was not positive.
    #[error("geometry inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            residual,
        }
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Domain(_) => 2,
            Error::Numeric { .. } | Error::ConjugatePoint { .. } | Error::Inconsistent(_) => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::input(format!("serialization failed: {e}"))
    }
}
