use std::io;
use std::path::PathBuf;

/// Failures that stop a command before it can write its outputs. All of
/// them map to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// TOML syntax or type errors; the message from the parser already
    /// carries the line and column.
    #[error("{origin}: {message}")]
    ConfigSyntax { origin: String, message: String },
    #[error("{origin}:{}: {key}: {reason}", line.map_or_else(|| "?".to_owned(), |l| l.to_string()))]
    ConfigValue {
        origin: String,
        key: String,
        line: Option<usize>,
        reason: String,
    },
    /// `row` is the 1-based line in the file, so the header is row 1.
    #[error("{}: row {row}, column {column}: {reason}", path.display())]
    Schema {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("{}: {reason}", path.display())]
    Json { path: PathBuf, reason: String },
    #[error("plot {name}: {reason}")]
    Plot { name: String, reason: String },
    #[error(transparent)]
    Model(#[from] freqbin_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(
        path: impl Into<PathBuf>,
        row: usize,
        column: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        CliError::Schema {
            path: path.into(),
            row,
            column: column.into(),
            reason: reason.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
