//! Configuration, presets and file output for the `nmdot` command.
//!
//! Every run is a pure function from a [`RunConfig`] to text, so the binary
//! only parses arguments, installs a thread pool and writes files.

use std::path::{Path, PathBuf};

pub mod config;
pub mod plot;
pub mod presets;
mod table;
pub mod validate;

pub use config::{parse_config, ConfigError, GridConfig, InitialState, RunConfig, TimeUnit};
pub use plot::{emit_plot_script, plot_script, PlotLayout};
pub use table::{coefficients_csv, compute_coefficients, propagate, propagate_table, propagation_csv, CoefficientTable};
pub use validate::{run_validate, Check, SweepRow, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(#[from] nmdot::Error),
    #[error("validation failed: {failed} of {total} checks did not pass")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    /// 1 validation failure, 2 usage or configuration, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    Ok(parse_config(&text)?)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

/// CSV of the coefficient table for `config`.
pub fn run_coefficients(config: &RunConfig) -> Result<String> {
    let table = compute_coefficients(config)?;
    Ok(coefficients_csv(config, &table))
}

/// CSV of the propagated density matrix for `config`.
pub fn run_propagate(config: &RunConfig) -> Result<String> {
    let (grid, traj) = propagate(config)?;
    Ok(propagation_csv(config, &grid, &traj))
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
