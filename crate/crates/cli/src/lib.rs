//! Command implementations behind the `colorbeat` binary: scenario
//! configuration, on-disk formats, and the simulate / fit / sweep / mub
//! pipelines. Everything here is a plain function over paths so the
//! integration tests can drive the exact code the binary runs.
//!
//! Unit conventions for files and flags: angles in degrees, frequencies in
//! THz, delays and times in ps, wavelengths in nm. In-memory angles are
//! radians throughout.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use colorbeat_core::estimate::EstimateError;
use colorbeat_core::gate::GateError;
use colorbeat_core::interference::InterferenceError;
use colorbeat_core::qstate::QStateError;
use colorbeat_core::source::SourceError;

pub mod config;
pub mod fit;
pub mod formats;
pub mod mub;
pub mod simulate;
pub mod sweep;

/// Process exit codes; everything not listed maps to validation.
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FIT_FAILURE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// A config value is out of range or inconsistent; the message names
    /// the offending field.
    #[error("config: {0}")]
    Config(String),
    /// A data file failed to parse at a specific line.
    #[error("{} line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    /// A data file is structurally unusable (missing header or metadata).
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("unknown preset `{name}` (available: {})", config::PRESET_NAMES.join(", "))]
    UnknownPreset { name: String },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Model(#[from] InterferenceError),
    #[error(transparent)]
    Estimate(EstimateError),
    /// The optimizer gave up; a diagnostics document was written for
    /// inspection.
    #[error(
        "fit did not converge after {iterations} iterations (best cost \
         {best_cost:.6e}); diagnostics written to {}",
        diagnostics.display()
    )]
    FitDiverged { iterations: usize, best_cost: f64, diagnostics: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    JsonParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// Exit code contract: 0 success, 2 validation (bad config, bad file
    /// content), 3 fit non-convergence, 4 filesystem I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::FitDiverged { .. } => EXIT_FIT_FAILURE,
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<EstimateError> for CliError {
    fn from(err: EstimateError) -> Self {
        CliError::Estimate(err)
    }
}
