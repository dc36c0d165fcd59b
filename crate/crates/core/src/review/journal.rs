use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::decision::DecisionRecord;
use super::{Result, ReviewError};

/// Append-only line-delimited decision log. Writers must be serialized by
/// the caller.
pub struct DecisionJournal {
    file: Option<File>,
}

impl DecisionJournal {
    pub fn in_memory() -> Self {
        Self { file: None }
    }

    /// Reads the existing records at `path` and opens it for appending.
    /// A torn final line is dropped with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<DecisionRecord>)> {
        let path = path.as_ref();
        let records = if path.exists() { Self::load(path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((Self { file: Some(file) }, records))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>> {
        let path = path.as_ref();
        let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<_>>()?;
        let n = lines.len();
        let mut out = Vec::with_capacity(n);
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(r) => out.push(r),
                Err(e) if i + 1 == n => log::warn!("ignoring torn journal tail in {}: {e}", path.display()),
                Err(e) => return Err(ReviewError::Journal(format!("{}:{}: {e}", path.display(), i + 1))),
            }
        }
        Ok(out)
    }

    pub fn append(&mut self, record: &DecisionRecord) -> Result<()> {
        if let Some(f) = &mut self.file {
            let mut line = serde_json::to_string(record).map_err(|e| ReviewError::Journal(e.to_string()))?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }
}
