//! `key=value` config files.
//!
//! Flags win over config-file entries, which win over built-in defaults.
//! Presence flags (`--repair`, `--idiotypic`, ...) cannot be unset by a
//! config file; a `true` entry enables them when the flag is absent.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (index, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').with_context(|| {
                format!("config line {}: expected key=value, got {line:?}", index + 1)
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}: {e}")),
        }
    }

    /// Presence-flag helper: true when the flag was given or the config
    /// file sets the key to true.
    pub fn flag(&self, cli_flag: bool, key: &str) -> Result<bool> {
        Ok(cli_flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}
