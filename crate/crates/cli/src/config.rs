//! Effective settings: flags override the key = value config file, which
//! overrides the defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Resolved key → value map, kept as text so it can be echoed verbatim.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", no + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    /// Layers defaults, then the file (only keys the command knows), then
    /// the flags that were given.
    pub fn resolve(
        defaults: &[(&str, &str)],
        file: Option<&Path>,
        flags: Vec<(&str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config(&text)? {
                if values.contains_key(&k) {
                    values.insert(k, v);
                }
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self
            .raw(key)
            .ok_or_else(|| CliError::Usage(format!("missing value for --{key}")))?;
        raw.parse()
            .map_err(|e| CliError::Usage(format!("--{key} = {raw}: {e}")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let raw = self.raw(key).unwrap_or("");
        raw.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(|e| CliError::Usage(format!("--{key}: {p}: {e}"))))
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(v) => Err(CliError::Usage(format!("--{key} = {v} is not a boolean"))),
        }
    }

    pub fn effective(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
