use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::Value;
use thiserror::Error;

pub const SCHEMA: &str = "operaq/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{path}: schema tag {found:?} is not {SCHEMA:?}")]
    Schema { path: PathBuf, found: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(String),
}

pub fn core<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Core(e.to_string())
}

/// Reads a JSON file, checks and strips an optional top-level schema tag.
pub fn load_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    if let Value::Object(map) = &mut v {
        if let Some(tag) = map.remove("schema") {
            if tag.as_str() != Some(SCHEMA) {
                return Err(CliError::Schema {
                    path: path.to_path_buf(),
                    found: tag.to_string(),
                });
            }
        }
    }
    Ok(v)
}

pub fn from_value<T: DeserializeOwned>(path: &Path, v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        msg: format!("schema violation: {e}"),
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    from_value(path, load_value(path)?)
}
