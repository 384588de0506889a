use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] filament::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}, row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: no data rows")]
    EmptyData { path: PathBuf },

    #[error("column `{column}` is constant ({value}); cannot rescale a degenerate extent")]
    DegenerateExtent { column: String, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                filament::Error::Domain { .. } | filament::Error::DomainRow { .. } => "domain",
                filament::Error::Data(_) | filament::Error::DimensionMismatch { .. } => "data",
                filament::Error::Numerical(_) => "numerical",
                filament::Error::Estimation(_) => "estimation",
                filament::Error::EmptySet(_) => "empty_set",
                _ => "config",
            },
            CliError::Io { .. } => "io",
            CliError::Csv { .. } | CliError::Parse { .. } | CliError::MissingColumn { .. } => "parse",
            CliError::EmptyData { .. } => "empty_data",
            CliError::DegenerateExtent { .. } => "degenerate_extent",
            CliError::Config(_) => "config",
            CliError::Json { .. } => "parse",
        }
    }

    /// Process exit code: 2 for bad configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            _ => 1,
        }
    }

    /// Machine-readable record written to stderr on failure.
    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}
