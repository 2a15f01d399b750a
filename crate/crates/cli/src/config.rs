//! Flat key-value configuration files with command-line overrides.
//!
//! A config file is a flat TOML table; every key corresponds to a long
//! option of the subcommand it is used with. Flags win over file entries,
//! and keys the subcommand does not know are rejected.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub struct ConfigMap {
    table: toml::Table,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(ConfigMap {
            table,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    fn value(&self, key: &str) -> Option<&toml::Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    /// Marks a key consumed without reading it (a flag shadowed it).
    pub fn shadow(&self, key: &str) {
        if self.table.contains_key(key) {
            self.used.borrow_mut().insert(key.to_string());
        }
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.value(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(CliError::Config(format!(
                "config key '{key}' must be a number, got {other}"
            ))),
        }
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.value(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(other) => Err(CliError::Config(format!(
                "config key '{key}' must be a non-negative integer, got {other}"
            ))),
        }
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        match self.value(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(CliError::Config(format!(
                "config key '{key}' must be a non-negative integer, got {other}"
            ))),
        }
    }

    pub fn string(&self, key: &str) -> CliResult<Option<String>> {
        match self.value(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(CliError::Config(format!(
                "config key '{key}' must be a string, got {other}"
            ))),
        }
    }

    /// Errors on config keys nobody consumed; catches typos and keys that
    /// belong to a different subcommand.
    pub fn finish(&self, subcommand: &str) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self
            .table
            .keys()
            .filter(|k| !used.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown config key(s) for '{subcommand}': {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

/// Flag value if present, else config value, else default.
pub fn resolve<T: Clone>(
    flag: Option<T>,
    config: CliResult<Option<T>>,
    default: T,
    cfg: &ConfigMap,
    key: &str,
) -> CliResult<T> {
    if let Some(v) = flag {
        cfg.shadow(key);
        return Ok(v);
    }
    Ok(config?.unwrap_or(default))
}

/// Flag value if present, else config value, else an error naming the key.
pub fn resolve_required<T: Clone>(
    flag: Option<T>,
    config: CliResult<Option<T>>,
    cfg: &ConfigMap,
    key: &str,
) -> CliResult<T> {
    if let Some(v) = flag {
        cfg.shadow(key);
        return Ok(v);
    }
    config?.ok_or_else(|| CliError::Config(format!("missing required parameter '{key}'")))
}

/// Parses a comma-separated list of numbers.
pub fn parse_list_f64(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse '{s}' as a number")))
        })
        .collect()
}

pub fn parse_list_usize(text: &str, what: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse '{s}' as an integer")))
        })
        .collect()
}

/// Parses a `start:stop:steps` grid specification into an inclusive
/// linearly spaced grid.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "grid '{text}' must have the form start:stop:steps"
        )));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("grid start '{}' is not a number", parts[0])))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("grid stop '{}' is not a number", parts[1])))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("grid steps '{}' is not an integer", parts[2])))?;
    if steps == 0 {
        return Err(CliError::Config("grid needs at least one step".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    if !(stop > start) {
        return Err(CliError::Config(format!(
            "grid stop {stop} must exceed start {start}"
        )));
    }
    Ok((0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect())
}
