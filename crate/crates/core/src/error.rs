use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::specfun::DomainError;
use crate::units::ConventionError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    SpecialFunction(#[from] DomainError),
    #[error(transparent)]
    Convention(#[from] ConventionError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("model noise vanishes at r_c = {r_c:e} m; lambda is unbounded by this measurement")]
    Unbounded { r_c: f64 },
    #[error("unsupported readout: {0}")]
    UnsupportedReadout(String),
    #[error("{path}: row {row}: {message}")]
    Ingestion {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: {field}: {message}")]
    Config {
        path: String,
        field: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by bad user input (files, flags, configs),
    /// as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Ingestion { .. }
                | Error::Config { .. }
                | Error::Io { .. }
                | Error::UnsupportedReadout(_)
                | Error::Domain(_)
                | Error::Convention(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
