use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EngineError;

#[derive(Serialize, Deserialize)]
struct Entry {
    stage: String,
    key: String,
    value: Value,
}

/// Append-only record of finished engine steps keyed by `(stage, key)`.
/// A step found in the journal is not run again.
pub struct Journal {
    entries: IndexMap<(String, String), Value>,
    file: Option<File>,
    path: Option<PathBuf>,
}

impl Journal {
    pub fn in_memory() -> Self {
        Self {
            entries: IndexMap::new(),
            file: None,
            path: None,
        }
    }

    /// Loads existing entries from `path` (if present) and appends new ones
    /// to it. A torn last line from an interrupted write is ignored.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let mut entries = IndexMap::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<Result<_, _>>()?;
            let n = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry>(line) {
                    Ok(e) => {
                        entries.insert((e.stage, e.key), e.value);
                    }
                    Err(e) if i + 1 == n => log::warn!("ignoring torn journal tail: {e}"),
                    Err(e) => {
                        return Err(EngineError::Journal(format!("{}:{}: {e}", path.display(), i + 1)))
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            entries,
            file: Some(file),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get<T: for<'de> Deserialize<'de>>(&self, stage: &str, key: &str) -> Result<Option<T>, EngineError> {
        match self.entries.get(&(stage.to_string(), key.to_string())) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| EngineError::Journal(format!("{stage}/{key}: {e}"))),
        }
    }

    pub fn record<T: Serialize>(&mut self, stage: &str, key: &str, value: &T) -> Result<(), EngineError> {
        let value = serde_json::to_value(value).map_err(|e| EngineError::Journal(e.to_string()))?;
        let entry = Entry {
            stage: stage.into(),
            key: key.into(),
            value,
        };
        if let Some(f) = &mut self.file {
            let mut line = serde_json::to_string(&entry).map_err(|e| EngineError::Journal(e.to_string()))?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.entries.insert((entry.stage, entry.key), entry.value);
        Ok(())
    }

    /// Returns the journaled value for `(stage, key)`, or computes, records
    /// and returns it.
    pub fn step<T, F>(&mut self, stage: &str, key: &str, f: F) -> Result<T, EngineError>
    where
        T: Serialize + for<'de> Deserialize<'de>,
        F: FnOnce() -> Result<T, EngineError>,
    {
        if let Some(v) = self.get(stage, key)? {
            return Ok(v);
        }
        let v = f()?;
        self.record(stage, key, &v)?;
        Ok(v)
    }
}
