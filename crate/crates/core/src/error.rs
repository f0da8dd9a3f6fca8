use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no boundary")]
    NoBoundary,
    #[error("degenerate ring {ring}: {reason}")]
    DegenerateRing { ring: usize, reason: String },
    #[error("no zero level set")]
    NoZeroLevelSet,
    #[error("destination extent outside source extent")]
    ExtentOutside,
    #[error("masked cells present: {0}")]
    MaskedInput(String),
    #[error("constant covariate{}", .0.as_ref().map(|n| format!(" '{n}'")).unwrap_or_default())]
    ConstantCovariate(Option<String>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid observation series: {0}")]
    InvalidSeries(String),
    #[error("non-SPD conditional precision: {0}")]
    NonSpd(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no event cells")]
    NoEventCells,
    #[error("too few draws: need at least {need}, got {got}")]
    TooFewDraws { need: usize, got: usize },
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::UnknownStrategy { .. } => ErrorKind::Config,
            Error::NonSpd(_) | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Chain { source, .. } | Error::File { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    /// Attaches the file being read or written.
    pub fn in_file(self, path: &std::path::Path) -> Error {
        Error::File {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }
}
