//! Plain-text run configuration.
//!
//! A config file holds one `key=value` pair per line. Blank lines and lines
//! starting with `#` are ignored, whitespace around keys and values is
//! trimmed, and a repeated key keeps its last value. Command-line flags
//! always override file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("key {key}: cannot parse {value:?} as {want}")]
    BadValue { key: String, value: String, want: &'static str },
    #[error("key {key}: expected one of {allowed}, got {value:?}")]
    BadChoice { key: String, value: String, allowed: &'static str },
}

/// Parsed key=value settings with typed lookups.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Settings, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine { line: i + 1, text: raw.to_string() });
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Settings { map })
    }

    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Settings::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// Typed lookup; absent keys are `Ok(None)`, unparseable values error.
    pub fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: raw.to_string(),
                want: std::any::type_name::<T>(),
            }),
        }
    }

    /// Typed lookup with a default for absent keys.
    pub fn lookup_or<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.lookup(key)?.unwrap_or(default))
    }

    /// Boolean lookup accepting true/false/yes/no/1/0.
    pub fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => match raw.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(ConfigError::BadChoice {
                    key: key.to_string(),
                    value: raw.to_string(),
                    allowed: "true|false|yes|no|1|0",
                }),
            },
        }
    }
}
