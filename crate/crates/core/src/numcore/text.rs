//! Plain-text tensor fixtures: one line of dimensions, then the values in
//! row-major order separated by any whitespace.
//!
//! ```text
//! 2 3
//! 1 2 3
//! 4 5 6
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::error::{NumError, Result};
use super::tensor::Tensor;

pub fn read_tensor(text: &str) -> Result<Tensor> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| NumError::Parse("missing shape line".into()))?;
    let shape = header
        .split_whitespace()
        .map(|d| {
            d.parse::<usize>()
                .map_err(|e| NumError::Parse(format!("bad dimension `{d}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = lines
        .flat_map(str::split_whitespace)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|e| NumError::Parse(format!("bad value `{v}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor::new(shape, data)
}

pub fn write_tensor(t: &Tensor) -> String {
    let mut out = String::new();
    let dims: Vec<String> = t.shape().iter().map(ToString::to_string).collect();
    out.push_str(&dims.join(" "));
    out.push('\n');
    for r in 0..t.rows() {
        let row = t.row(r);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor(&std::fs::read_to_string(path)?)
}

pub fn write_tensor_file(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    std::fs::write(path, write_tensor(t))?;
    Ok(())
}
