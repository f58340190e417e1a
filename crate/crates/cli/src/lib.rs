//! Command-line pipeline around the frequency-mixup library: PNG I/O, run
//! manifests, enhancement/decomposition/sweep commands, and training-pair
//! dataset export.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use error::{CliError, Result};
