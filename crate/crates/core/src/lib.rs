//! Repeat factor sampling for long-tailed object-detection datasets.
//!
//! The pipeline is:
//!
//! 1. [`ingest`] COCO JSON or YOLO labels into a [`DatasetIndex`];
//! 2. [`frequency::compute_frequencies`] for per-class image and instance
//!    fractions;
//! 3. [`factors::build_table`] for class factors (RFS, IRFS or E-IRFS),
//!    image factors and selection probabilities;
//! 4. [`sampling`] to materialise reproducible epoch manifests.
//!
//! [`analysis`] checks the resulting training distribution, fits power laws,
//! measures growth rates and sweeps parameter grids. [`verify`] bundles the
//! mathematical invariants into a self-test.

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod factors;
pub mod fixtures;
pub mod frequency;
pub mod ingest;
pub mod rng;
pub mod sampling;
pub mod verify;

pub use dataset::{validate, CategoryId, CategoryInfo, DatasetIndex, ImageId, ImageRecord, Severity, ValidationIssue};
pub use error::{AnalysisError, Error, FactorError, FormatError, IngestError, SamplingError};
pub use factors::{build_table, Method, RebalanceConfig, RepeatFactorTable};
pub use frequency::{compute_frequencies, FrequencyTable};
pub use sampling::{EpochManifest, SampleMode};
