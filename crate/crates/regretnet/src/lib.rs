//! File formats, LP export and the command-line runner on top of
//! `regretnet-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod lpfile;

use std::path::Path;

pub use error::{CliError, CliResult};

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
