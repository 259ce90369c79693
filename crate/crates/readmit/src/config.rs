//! Stage configuration: a JSON file (or an earlier run manifest) overlaid by
//! command-line flags, with defaults filled in last.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::tables::{open, write_bytes};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Written next to a stage's main output; feeding it back through
/// `--config` repeats the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub stage: String,
    pub tool_version: String,
    pub config: Value,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out` with `.suffix` appended to its file name.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| {
        if e.is_io() {
            Error::io(path, e.into())
        } else {
            Error::format(path, e.to_string())
        }
    })
}

pub fn write_manifest<T: Serialize>(out: &Path, stage: &str, config: &T) -> Result<PathBuf> {
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT_VERSION,
        stage: stage.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(config).map_err(|e| Error::Invalid(e.to_string()))?,
    };
    let path = manifest_path(out);
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Settings from a config file. A manifest contributes its `config`
/// object and must belong to `stage`.
pub fn load_file(path: &Path, stage: &str) -> Result<Map<String, Value>> {
    let value: Value = read_json(path)?;
    let Value::Object(mut obj) = value else {
        return Err(Error::format(path, "config must be a JSON object"));
    };
    if obj.contains_key("format_version") && obj.contains_key("stage") {
        let found = obj.get("stage").and_then(Value::as_str).unwrap_or_default().to_string();
        if found != stage {
            return Err(Error::format(path, format!("manifest is for stage {found:?}, not {stage:?}")));
        }
        return match obj.remove("config") {
            Some(Value::Object(c)) => Ok(c),
            _ => Err(Error::format(path, "manifest has no config object")),
        };
    }
    Ok(obj)
}

/// Merges `flags` over the file settings, fills each absent `(key, suffix)`
/// in `derived` as `<out>.<suffix>`, and deserializes the result. Nested
/// objects merge one level deep so partial overrides keep the rest.
pub fn resolve<T: DeserializeOwned>(
    stage: &str,
    file: Option<&Path>,
    flags: Value,
    derived: &[(&str, &str)],
) -> Result<T> {
    let mut merged = match file {
        Some(p) => load_file(p, stage)?,
        None => Map::new(),
    };
    if let Value::Object(f) = flags {
        for (k, v) in f {
            match (merged.get_mut(&k), v) {
                (_, Value::Null) => {}
                (Some(existing @ Value::Object(_)), Value::Object(o)) => overlay(existing, &o),
                (_, v) => {
                    merged.insert(k, v);
                }
            }
        }
    }
    if let Some(out) = merged.get("out").and_then(Value::as_str).map(PathBuf::from) {
        for (key, suffix) in derived {
            if merged.get(*key).is_none_or(Value::is_null) {
                merged.insert(key.to_string(), Value::String(sibling(&out, suffix).to_string_lossy().into_owned()));
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Invalid(format!("{stage}: {e}")))
}

/// Overlays `overrides` onto `base` key by key (one level deep).
pub fn overlay(base: &mut Value, overrides: &Map<String, Value>) {
    if let Value::Object(b) = base {
        for (k, v) in overrides {
            b.insert(k.clone(), v.clone());
        }
    }
}

/// `key=value` pairs; values are read as JSON when possible, else as strings.
pub fn parse_assignments(items: &[String]) -> Result<Map<String, Value>> {
    let mut out = Map::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected key=value, got {item:?}")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}
