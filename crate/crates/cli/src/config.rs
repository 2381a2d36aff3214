//! `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_`; values may be wrapped in double quotes. Command-line flags always win
//! over file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = k.trim().replace('-', "_");
            let v = v.trim();
            let value = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v)
                .to_string();
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if values.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key '{key}'", i + 1);
            }
        }
        Ok(ConfigFile { values })
    }

    /// Fails on keys the command does not understand, so typos surface.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown config key '{k}' (expected one of: {})", allowed.join(", "));
            }
        }
        Ok(())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}")))
            .transpose()
    }
}

/// Flag value if given, else the config value, else the default.
pub fn resolve<T>(flag: Option<T>, config: &ConfigFile, key: &str, default: Option<T>) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = config.get(key)? {
        return Ok(v);
    }
    default.ok_or_else(|| anyhow!("missing required setting '--{}'", key.replace('_', "-")))
}
