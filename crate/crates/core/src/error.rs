use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the region where the model or pricer is defined.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// Floating-point blow-up inside a Monte Carlo path.
    #[error("numerical error on path {path}: {reason}")]
    Numerical { path: usize, reason: String },

    #[error("quadrature did not converge: relative change {rel_change:.3e} at {nodes} nodes")]
    Convergence { nodes: usize, rel_change: f64 },
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(path: usize, reason: impl Into<String>) -> Self {
        Error::Numerical {
            path,
            reason: reason.into(),
        }
    }

    /// Name of the offending field for domain errors.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Error::Domain { field, .. } => Some(field),
            _ => None,
        }
    }
}
