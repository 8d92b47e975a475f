//! Configuration-driven verification suites and their report files.

mod config;
mod report;
mod suites;

use std::path::PathBuf;

use thiserror::Error;

use crate::elliptic_model::EllipticError;
use crate::interpolation::InterpError;
use crate::ro_class::RoError;
use crate::spectral_model::SpectralError;
use crate::trace_model::TraceError;

pub use config::{
    load_config, parse_config, BvpSection, CpSection, EmbedCase, EmbedSection, ExperimentConfig,
    InterpSection, LatticeSection, LocalregSection, OpnormSection, RatioCheck, Resolved, Tolerances,
    TraceSection, SUITES,
};
pub use report::{
    datum_of, emit, emit_all, environment_stamp, fmt_num, CheckRecord, Comparison, Datum,
    ExperimentReport, Format, Series, Table,
};
pub use suites::{estimate_memory_mb, run_suite};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}, column {column}: {message}")]
    Toml { line: usize, column: usize, message: String },
    #[error("config line {line}, column {column}: {what}: {message}")]
    Grammar { line: usize, column: usize, what: String, message: String },
    #[error("config error: {0}")]
    Invalid(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("suite {suite} needs about {estimate_mb:.1} MiB, over the {budget_mb} MiB budget")]
    Budget { suite: String, estimate_mb: f64, budget_mb: f64 },
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Ro(#[from] RoError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}
