//! File formats, configuration and sweep orchestration around `dampopt-core`.

pub mod config;
pub mod error;
pub mod mtx;
pub mod output;
pub mod sweep;

pub use error::{CliError, Result};
