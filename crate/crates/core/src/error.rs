use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::CategoryId;

/// Failures while reading annotations or the canonical index format.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{message}: {}", offending.join(", "))]
    Validation {
        message: String,
        offending: Vec<String>,
    },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        source_name: impl Into<String>,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        IngestError::Parse {
            source_name: source_name.into(),
            line,
            column,
            message: message.into(),
        }
    }
}

/// Failures of the repeat-factor math.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("{name} must be {expected}, got {value}")]
    Domain {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("exp({exponent}) overflows f64")]
    Overflow { exponent: f64 },
    #[error("dataset has no images")]
    EmptyDataset,
    #[error("cannot normalise an empty list of repeat factors")]
    EmptyFactors,
    #[error("category {category_id} ({name}): {source}")]
    InCategory {
        category_id: CategoryId,
        name: String,
        #[source]
        source: Box<FactorError>,
    },
}

/// Failures of the reporting and diagnostic routines.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("power-law fit needs at least 3 classes with nonzero frequency, got {0}")]
    InsufficientData(usize),
    #[error("probe points fall in the clamp region: {}", .0.join(", "))]
    ClampedProbe(Vec<String>),
    #[error("synthetic generation: {0}")]
    Generation(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Failures while reading or writing emitted artifacts.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("digest mismatch: recorded {recorded}, computed {computed}")]
    Digest { recorded: String, computed: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        FormatError::Malformed {
            line,
            message: message.into(),
        }
    }
}

/// Crate-wide error used at the command-line boundary.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while turning a repeat-factor table into epochs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("repeat-factor table has no images")]
    EmptyTable,
    #[error("image {image_id}: repeat factor {value} is not a finite value > 0")]
    InvalidFactor { image_id: String, value: f64 },
    #[error("epoch size must be > 0")]
    ZeroSize,
    #[error("number of epochs must be > 0")]
    ZeroEpochs,
}
