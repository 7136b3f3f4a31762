//! Hash-stamped output files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const HASH_KEY: &str = "config_sha256";

pub struct OutDir {
    root: PathBuf,
    hash: String,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("E_IO", 2, format!("{}: {e}", path.display()))
}

impl OutDir {
    pub fn new(root: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            hash: hash.to_string(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `payload` with the config hash added at top level.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> Result<PathBuf, CliError> {
        let value = serde_json::to_value(payload)
            .map_err(|e| CliError::new("E_INTERNAL", 1, format!("serialising {name}: {e}")))?;
        let mut map = match value {
            Value::Object(map) => map,
            other => {
                let mut map = Map::new();
                map.insert("data".into(), other);
                map
            }
        };
        map.insert(HASH_KEY.into(), Value::String(self.hash.clone()));
        let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("json value");
        text.push('\n');
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    /// CSV with a leading `# config_sha256=…` comment line.
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf, CliError> {
        let mut text = format!("# {HASH_KEY}={}\n{header}\n", self.hash);
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    /// Reads a prior stage's output, refusing files from another config.
    pub fn read_json<T: DeserializeOwned>(&self, name: &str, field: Option<&str>) -> Result<T, CliError> {
        let path = self.path(name);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::new(
                    "E_MISSING_INPUT",
                    4,
                    format!("{} not found; run the producing stage first", path.display()),
                ))
            }
            Err(e) => return Err(io_error(&path, e)),
        };
        let bad = |msg: String| CliError::new("E_BAD_INPUT", 2, format!("{}: {msg}", path.display()));
        let mut value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let stamped = value.get(HASH_KEY).and_then(Value::as_str).unwrap_or_default();
        if stamped != self.hash {
            return Err(CliError::new(
                "E_STALE_INPUT",
                4,
                format!("{} was produced from a different config", path.display()),
            ));
        }
        if let Some(map) = value.as_object_mut() {
            map.remove(HASH_KEY);
        }
        let inner = match field {
            Some(f) => value
                .get(f)
                .cloned()
                .ok_or_else(|| bad(format!("missing field `{f}`")))?,
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| bad(e.to_string()))
    }
}
