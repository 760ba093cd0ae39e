//! Run configuration: one TOML file with a table per command.
//!
//! Resolution order, later wins:
//! 1. built-in defaults of the command,
//! 2. the command's table in `--config`,
//! 3. `--set key=value` overrides, in the order given,
//! 4. dedicated flags such as `--seeds`.
//!
//! Tables are merged key by key, except that a table whose `kind` changes
//! (for example `data`) replaces the old one.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::UsageError;

/// Key inside a command table that names the output directory.
pub const OUTPUT_DIR_KEY: &str = "output_dir";

pub fn read_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    text.parse::<Table>()
        .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
}

/// Parse `key.path=value`. The value is read as a TOML value when it parses
/// as one and as a plain string otherwise.
pub fn parse_assignment(text: &str) -> Result<(String, Value), UsageError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| UsageError(format!("--set expects key=value, got {text:?}")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(UsageError(format!("--set: malformed key {key:?}")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn assign(table: &mut Table, key: &str, value: Value) -> Result<(), UsageError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut current = table;
    let mut walked = String::new();
    for part in parts {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(part);
        let slot = current.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        current = slot
            .as_table_mut()
            .ok_or_else(|| UsageError(format!("cannot set {key}: {walked} is not a table")))?;
    }
    merge_value(current, last, value);
    Ok(())
}

fn merge_value(table: &mut Table, key: &str, value: Value) {
    match (table.get_mut(key), value) {
        (Some(Value::Table(old)), Value::Table(new)) if old.get("kind") == new.get("kind") || !new.contains_key("kind") => {
            merge(old, new)
        }
        (_, value) => {
            table.insert(key.to_string(), value);
        }
    }
}

pub fn merge(base: &mut Table, overlay: Table) {
    for (k, v) in overlay {
        merge_value(base, &k, v);
    }
}

/// Everything that decides one command's configuration.
pub struct Sources<'a> {
    pub file: Option<&'a Table>,
    pub assignments: &'a [(String, Value)],
    pub flags: Vec<(String, Value)>,
    pub output: Option<PathBuf>,
}

/// A command's configuration with the output directory split off.
pub struct Resolved<T> {
    pub config: T,
    pub output_dir: Option<PathBuf>,
}

pub fn resolve<T>(section: &str, defaults: &T, sources: Sources<'_>) -> Result<Resolved<T>>
where
    T: Serialize + DeserializeOwned,
{
    let mut table = match Value::try_from(defaults).context("serializing defaults")? {
        Value::Table(t) => t,
        _ => unreachable!("configurations serialize to tables"),
    };
    if let Some(file) = sources.file {
        match file.get(section) {
            Some(Value::Table(t)) => merge(&mut table, t.clone()),
            Some(_) => return Err(UsageError(format!("config: {section} must be a table")).into()),
            None => {}
        }
    }
    for (k, v) in sources.assignments.iter().cloned().chain(sources.flags) {
        assign(&mut table, &k, v)?;
    }
    let output_dir = match table.remove(OUTPUT_DIR_KEY) {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => {
            return Err(UsageError(format!("{section}.{OUTPUT_DIR_KEY}: expected a path, got {other}")).into())
        }
    };
    let config = typed(section, table)?;
    Ok(Resolved {
        config,
        output_dir: sources.output.or(output_dir),
    })
}

/// Deserialize with field paths in errors and rejection of unknown keys.
pub fn typed<T: DeserializeOwned>(section: &str, table: Table) -> Result<T, UsageError> {
    let mut unknown = Vec::new();
    let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let de = serde_ignored::Deserializer::new(Value::Table(table), &mut record);
    let value: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        // toml appends its own location line; the path above replaces it
        let inner = e.into_inner().to_string();
        let inner = inner.lines().next().unwrap_or_default().to_string();
        if path == "." {
            UsageError(format!("{section}: {inner}"))
        } else {
            UsageError(format!("{section}.{path}: {inner}"))
        }
    })?;
    if !unknown.is_empty() {
        let keys: Vec<String> = unknown.iter().map(|k| format!("{section}.{k}")).collect();
        return Err(UsageError(format!("unknown configuration keys: {}", keys.join(", "))));
    }
    Ok(value)
}

/// The resolved configuration as it is written next to the results.
pub fn render<T: Serialize>(section: &str, config: &T, output_dir: &Path) -> Result<String> {
    let mut inner = match Value::try_from(config).context("serializing resolved config")? {
        Value::Table(t) => t,
        _ => unreachable!("configurations serialize to tables"),
    };
    inner.insert(OUTPUT_DIR_KEY.into(), Value::String(output_dir.display().to_string()));
    let mut doc = Table::new();
    doc.insert(section.into(), Value::Table(inner));
    Ok(toml::to_string_pretty(&doc).context("writing resolved config")?)
}
