//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// configuration and validation problems exit with 2, I/O problems with 3.
#[derive(Debug, Error)]
pub enum LabError {
    /// A parameter is outside its documented range. The message names the
    /// offending key so config errors are actionable.
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },

    /// A config file could not be parsed as JSON or TOML.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// Geometry or field data is structurally unusable (empty sample set,
    /// non-rectangular grid, mismatched dimensions, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A precondition of an operator failed (e.g. a ball leaves the domain,
    /// a field exceeds its declared sup bound).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn invalid_parameter(key: &str, message: impl Into<String>) -> Self {
        LabError::InvalidParameter {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
