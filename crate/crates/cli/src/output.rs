//! CSV and summary-JSON emission. Floats are written with Rust's shortest
//! round-trip formatting, so re-parsing a report reproduces the exact values
//! and repeated runs of the same config are byte-identical.

use crate::CliError;
use std::io::Write;
use std::path::Path;

pub fn format_float(value: f64) -> String {
    // Debug formatting: shortest exact round-trip, scientific for extremes.
    format!("{value:?}")
}

pub fn join_values(values: &[f64]) -> String {
    values.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(";")
}

pub fn parse_joined(text: &str) -> Option<Vec<f64>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(';').map(|v| v.parse::<f64>().ok()).collect()
}

/// A CSV writer that optionally puts `#`-prefixed comment lines above the
/// header row.
pub struct Report {
    buffer: Vec<u8>,
}

impl Report {
    pub fn new() -> Self {
        Report { buffer: Vec::new() }
    }

    pub fn comment(&mut self, line: &str) {
        self.buffer.extend_from_slice(format!("# {line}\n").as_bytes());
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buffer.extend_from_slice(cells.join(",").as_bytes());
        self.buffer.push(b'\n');
    }

    pub fn header(&mut self, names: &[&str]) {
        self.buffer.extend_from_slice(names.join(",").as_bytes());
        self.buffer.push(b'\n');
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
        }
        let mut file = std::fs::File::create(path)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        file.write_all(&self.buffer)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
    }
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize summary: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0, -3.25, 0.7425466856651598, 1e-12, 12345.678901234567] {
            let text = format_float(v);
            assert_eq!(text.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn joined_vectors_round_trip() {
        let values = vec![1.5, -0.25, 0.3333333333333333];
        assert_eq!(parse_joined(&join_values(&values)).unwrap(), values);
        assert_eq!(parse_joined("").unwrap(), Vec::<f64>::new());
    }
}
