use crate::domain::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid domain: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid solution document: {0}")]
    InvalidSolution(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("problem generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<serde_path_to_error::Error<serde_json::Error>> for Error {
    fn from(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
