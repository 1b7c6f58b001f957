//! `key = value` configuration files.
//!
//! Keys are long option names without the leading dashes (`eta`,
//! `region-r`, ...). Underscores are accepted in place of dashes. Blank
//! lines and lines starting with `#` are ignored. Boolean switches take
//! `true` or `false`.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            reason: format!("expected key = value, got '{trimmed}'"),
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                reason: "empty key".into(),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Syntax {
                line,
                reason: format!("duplicate key '{key}'"),
            });
        }
        entries.push(ConfigEntry {
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<ConfigEntry>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse(&text)
}
