//! File formats, experiment configuration and the runner behind the
//! `tenfill` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{ExperimentConfig, RunMode};
pub use error::CliError;
pub use run::{run, Summary};
