//! Experiments, configuration, CSV output and matrix files on top of `nbspectra-core`.
//!
//! - [`config`]: flat `key = value` experiment configs.
//! - [`experiments`]: seeded Monte Carlo runs producing [`records::TrialRecord`]s.
//! - [`records`]: long-format CSV reading and writing.
//! - [`stats`]: sample summaries and binomial intervals.
//! - [`matrix_io`]: triplet text files for explicit matrices.

pub mod config;
pub mod experiments;
pub mod matrix_io;
pub mod records;
pub mod stats;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use records::{read_results, write_results, TrialRecord};
