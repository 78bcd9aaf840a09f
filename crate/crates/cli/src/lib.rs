//! Batch front end for the ordinal quantile regression samplers: dataset
//! ingestion, fits across quantile levels, covariate-effect tables and
//! summary reports, all emitted as CSV/JSON artifacts that are re-derivable
//! from the input file, the configuration and the seed.

pub mod commands;
pub mod data;
pub mod report;

/// Command-level errors carrying the process exit code: configuration
/// problems exit 2, data problems 3, numerical failures 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<ordqr::Error> for CliError {
    fn from(e: ordqr::Error) -> Self {
        match e {
            ordqr::Error::Parameter(m) => CliError::Config(m),
            ordqr::Error::Domain(m) => CliError::Data(m),
            ordqr::Error::Numerical(m) => CliError::Numerical(m),
            ordqr::Error::DegenerateSeries => CliError::Numerical("degenerate series".into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
