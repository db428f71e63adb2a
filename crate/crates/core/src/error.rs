use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument violates its precondition. `field` names the
    /// offending input.
    #[error("invalid {field}: {message}")]
    InvalidParameter { field: &'static str, message: String },

    /// The discrete system is numerically singular (or the iterative solver
    /// failed to reduce the residual). `h0` is the mesh size below which the
    /// discrete problem is guaranteed uniquely solvable.
    #[error("singular system ({detail}); h = {h:.3e}, h0 = {h0:.3e}")]
    Singular { detail: String, h: f64, h0: f64 },

    /// Geometric search did not find a sign change of F_N.
    #[error("no sign change of F_N after {} evaluations", samples.len())]
    NoSignChange { samples: Vec<(f64, f64)> },

    #[error("ODE integrator failed: {0}")]
    Integrator(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }

    /// Name of the offending input for parameter errors.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Error::InvalidParameter { field, .. } => Some(field),
            _ => None,
        }
    }
}
