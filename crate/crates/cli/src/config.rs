//! Settings from a `key = value` file overlaid with command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a config file may contain. Flags use the same names with
/// dashes in place of underscores.
pub const KEYS: &[&str] = &[
    "input",
    "out",
    "outcome",
    "predictors",
    "auxiliary",
    "mask",
    "m",
    "seed",
    "burn_in",
    "strategy",
    "level",
    "d",
    "parallelism",
    "preset",
    "n",
    "rho12",
    "r2",
    "p",
    "pattern",
    "rho_yz",
    "max_iter",
    "tol",
    "ridge",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    /// Parses a config file body. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected `key = value`", no + 1)))?;
            let key = normalize(k);
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Invalid(format!("config line {}: unknown key `{key}`", no + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Invalid(format!("config line {}: `{key}` is set twice", no + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: String) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str, command: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Invalid(format!("{command} needs `{key}` (flag --{})", key.replace('_', "-"))))
    }

    pub fn parse_opt<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn parse_or<T>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Comma-separated list; empty when the key is unset.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default()
    }

    pub fn parse_list<T>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if self.get(key).is_none() {
            return Ok(None);
        }
        self.list(key).iter().map(|v| parse_value(key, v)).collect::<Result<Vec<_>, _>>().map(Some)
    }
}

fn parse_value<T>(key: &str, v: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    v.trim().parse().map_err(|e| CliError::Invalid(format!("invalid value `{v}` for {key}: {e}")))
}
