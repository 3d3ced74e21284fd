use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid value for `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("permittivity pole at Omega = {omega:e} rad/s (undamped oscillator)")]
    PermittivityPole { omega: f64 },

    #[error("quadrature did not converge on [{a:e}, {b:e}] after {subdivisions} subdivisions (value {value:e}, error estimate {error_estimate:e})")]
    NonConvergence {
        a: f64,
        b: f64,
        subdivisions: usize,
        value: f64,
        error_estimate: f64,
    },

    #[error("state outside the perturbative regime: vacuum population {0:e}")]
    NonPerturbative(f64),

    #[error("unsupported filter: {0}")]
    UnsupportedFilter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
