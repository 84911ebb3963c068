//! Run configuration: JSON config files, flag overrides, and defaults.
//!
//! Every subcommand that needs a target state or a damping-rate grid
//! resolves its inputs in the same order: an explicit command-line flag
//! wins, then the corresponding field of the `--config` file, then a
//! built-in default. The config file is a single JSON object whose
//! field names match [`RunConfig`]; unknown fields are rejected so that
//! typos fail loudly instead of being silently ignored.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jrsp_core::{NoiseKind, TargetState};

use crate::CliError;

/// Output encoding for file-emitting subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Comma-separated values, LF line endings, twelve significant digits.
    Csv,
    /// One top-level JSON object with full-precision numbers.
    Json,
}

/// Contents of a `--config` JSON file. All fields are optional; each
/// subcommand reads only the fields it understands.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Target amplitudes, eight entries.
    pub alphas: Option<Vec<f64>>,
    /// Target phases in radians, eight entries.
    pub phis: Option<Vec<f64>>,
    /// Noise model code: `ad`, `pd`, or `dp`.
    pub model: Option<NoiseKind>,
    /// First damping rate of the sweep grid.
    pub eta_start: Option<f64>,
    /// Last damping rate of the sweep grid.
    pub eta_end: Option<f64>,
    /// Grid spacing.
    pub eta_step: Option<f64>,
    /// Accept amplitude vectors whose squared sum is not 1.
    pub allow_unnormalized: Option<bool>,
    /// Where to write the report.
    pub output_path: Option<PathBuf>,
    /// `csv` or `json`.
    pub output_format: Option<OutputFormat>,
}

impl RunConfig {
    /// Load a config file, mapping I/O and syntax problems to input errors.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|err| {
            CliError::input(format!("cannot open config file {}: {err}", path.display()))
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|err| {
            CliError::input(format!("invalid config file {}: {err}", path.display()))
        })
    }

    /// Load the file named by `path`, or an empty config when absent.
    pub fn load_optional(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(path) => Self::load(path),
            None => Ok(Self::default()),
        }
    }
}

/// Convert a flag-or-config amplitude/phase vector into a fixed array,
/// rejecting wrong lengths with the offending count in the message.
pub fn eight(values: &[f64], what: &str) -> Result<[f64; 8], CliError> {
    <[f64; 8]>::try_from(values).map_err(|_| {
        CliError::input(format!(
            "{what} requires exactly 8 comma-separated values, got {}",
            values.len()
        ))
    })
}

/// Build a target state from resolved amplitudes and phases.
///
/// Missing phases default to zero.
pub fn target_from_parts(
    alphas: &[f64],
    phis: Option<&[f64]>,
    allow_unnormalized: bool,
) -> Result<TargetState, CliError> {
    let alphas = eight(alphas, "--alphas")?;
    let phis = match phis {
        Some(values) => eight(values, "--phis")?,
        None => [0.0; 8],
    };
    let target = if allow_unnormalized {
        TargetState::new_unnormalized(alphas, phis)
    } else {
        TargetState::new(alphas, phis)
    };
    target.map_err(|err| CliError::input(format!("invalid target state: {err}")))
}
