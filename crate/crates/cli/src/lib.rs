//! Library backing the `prigen` binary: APK container access, argument
//! definitions, and one module per subcommand.
//!
//! Exit taxonomy: input/validation problems exit 1, internal faults exit 2;
//! diagnostics go to stderr, data to declared output files only.

pub mod apk;
pub mod args;
pub mod commands;

use std::fmt::Display;
use std::path::Path;
use thiserror::Error;

/// Default seed used by every seeded subcommand, so a pipeline run with no
/// explicit seeds is still reproducible end to end.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    /// Problems with user-supplied inputs or flags → exit 1.
    #[error("{0}")]
    Input(String),
    /// Faults that indicate a bug or an unexpected environment → exit 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> CliError {
        CliError::Internal(msg.into())
    }
}

/// Read a whole file as UTF-8 text, reporting the path on failure.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

/// Parse one JSON value per non-empty line, reporting path and line number
/// on the first failure.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = read_text(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| {
            CliError::input(format!("{}:{}: invalid record: {e}", path.display(), i + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Write one serialized JSON value per line. Serialization failures are
/// internal (our own types must always serialize); file errors are input
/// (the destination path came from the user).
pub fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| CliError::internal(format!("serializing record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    write_text(path, &out)
}

/// Write text to a file, reporting the path on failure.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Join display items with newlines and a trailing newline; empty input
/// yields an empty string (empty file, not a lone newline).
pub fn lines_to_text<T: Display>(lines: &[T]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}
