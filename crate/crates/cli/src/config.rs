//! Flat `key=value` configuration merged with command-line flags.
//!
//! A flag wins over the config file, which wins over the built-in default.
//! Every value read is recorded so the report can echo the resolved
//! configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// A value that can be read from a string and echoed into a report.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn to_json(&self) -> Value;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
        if !v.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        Ok(v)
    }
    fn to_json(&self) -> Value {
        Value::from(*self)
    }
}

impl ConfigValue for usize {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.trim().parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
    }
    fn to_json(&self) -> Value {
        Value::from(*self as u64)
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.trim().parse().map_err(|_| format!("`{s}` is not a 64-bit unsigned integer"))
    }
    fn to_json(&self) -> Value {
        Value::from(*self)
    }
}

impl ConfigValue for String {
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(s.trim().to_string())
    }
    fn to_json(&self) -> Value {
        Value::from(self.as_str())
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(T::parse_value).collect()
    }
    fn to_json(&self) -> Value {
        Value::Array(self.iter().map(ConfigValue::to_json).collect())
    }
}

/// Parses `key=value` lines; blank lines and lines starting with `#` are
/// skipped.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", no + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{k}`", no + 1)));
        }
    }
    Ok(out)
}

/// Values given on the command line and in the config file.
#[derive(Debug, Default)]
pub struct Resolver {
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub fn new(flags: BTreeMap<String, String>, file: BTreeMap<String, String>) -> Self {
        Self {
            flags,
            file,
            resolved: Map::new(),
        }
    }

    pub fn read_file(path: Option<&Path>) -> CliResult<BTreeMap<String, String>> {
        match path {
            None => Ok(BTreeMap::new()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)
            }
        }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let from_file = self.file.remove(key);
        self.flags.remove(key).or(from_file)
    }

    fn parse<T: ConfigValue>(key: &str, s: &str) -> CliResult<T> {
        T::parse_value(s).map_err(|e| CliError::Usage(format!("`{key}`: {e}")))
    }

    pub fn get<T: ConfigValue>(&mut self, key: &str, default: T) -> CliResult<T> {
        let v = match self.raw(key) {
            Some(s) => Self::parse(key, &s)?,
            None => default,
        };
        self.resolved.insert(key.to_string(), v.to_json());
        Ok(v)
    }

    pub fn get_opt<T: ConfigValue>(&mut self, key: &str) -> CliResult<Option<T>> {
        let v = match self.raw(key) {
            Some(s) => Some(Self::parse::<T>(key, &s)?),
            None => None,
        };
        self.resolved
            .insert(key.to_string(), v.as_ref().map_or(Value::Null, ConfigValue::to_json));
        Ok(v)
    }

    pub fn require<T: ConfigValue>(&mut self, key: &str) -> CliResult<T> {
        self.get_opt(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required value `{key}`")))
    }

    /// The resolved configuration. Keys that were supplied but never read
    /// are an error.
    pub fn finish(self) -> CliResult<Map<String, Value>> {
        if let Some(k) = self.file.keys().chain(self.flags.keys()).next() {
            return Err(CliError::Usage(format!("unknown key `{k}` for this command")));
        }
        Ok(self.resolved)
    }
}
