use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error{}: {field}: {message}", bond_suffix(.bond_id))]
    Validation {
        bond_id: Option<String>,
        field: String,
        message: String,
    },

    #[error("I/O error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution for bond {bond_id}: {message}")]
    NoSolution { bond_id: String, message: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("singular system (condition estimate {condition:.3e}): {message}")]
    Singular { condition: f64, message: String },

    #[error("invalid discount factor {value} at t = {t}")]
    InvalidDiscount { t: f64, value: f64 },

    #[error("training diverged at epoch {epoch}, bond index {bond_index}")]
    Divergence { epoch: usize, bond_index: usize },
}

fn bond_suffix(id: &Option<String>) -> String {
    match id {
        Some(id) => format!(" (bond {id})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn validation(bond_id: Option<&str>, field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            bond_id: bond_id.map(str::to_owned),
            field: field.to_owned(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or invalid inputs rather than
    /// by a numerical procedure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation { .. })
    }

    pub fn is_io_error(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
