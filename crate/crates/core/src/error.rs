use std::path::PathBuf;

use crate::trace::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("segment {segment} failed validation: {}", display_violations(.violations))]
    Validation {
        segment: String,
        violations: Vec<Violation>,
    },

    #[error("empty trace")]
    EmptyTrace,

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("rescoring passes required")]
    RescoringRequired,

    #[error("degenerate variance ({0:e}): stochastic passes are identical")]
    DegenerateVariance(f64),

    #[error("degenerate attention row at target step {0}")]
    DegenerateAttentionRow(usize),

    #[error("no informative head: every head/layer has constant entropy")]
    NoInformativeHead,

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("inconsistent correlations: determinant {0:e} is not positive")]
    InconsistentCorrelations(f64),

    #[error("degenerate annotator {0}: fewer than two scores or zero spread")]
    DegenerateAnnotator(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            line,
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation { .. } => 2,
            Error::UndefinedCorrelation(_)
            | Error::InconsistentCorrelations(_)
            | Error::DegenerateAnnotator(_)
            | Error::DegenerateVariance(_)
            | Error::NoInformativeHead
            | Error::InsufficientData(_) => 3,
            _ => 1,
        }
    }
}

fn display_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
