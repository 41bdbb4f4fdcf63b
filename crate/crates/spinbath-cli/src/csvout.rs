//! CSV emission tuned for bit-exact regression diffs: UTF-8, comma
//! delimiter, `.` decimal point, 17 significant digits (round-trip exact for
//! doubles), `#`-prefixed header comments carrying the config hash,
//! parameter values, and tool version.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex characters of the SHA-256 of the canonical config JSON.
pub fn config_hash(canonical_json: &str) -> String {
    let digest = Sha256::digest(canonical_json.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

/// 17 significant digits; exact round trip for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    lines: Vec<String>,
    columns: usize,
    data_rows: usize,
}

impl CsvWriter {
    pub fn new(hash: &str, description: &str, params_line: &str, columns: &[&str]) -> Self {
        let mut lines = Vec::new();
        lines.push(format!("# spinbath {TOOL_VERSION}"));
        lines.push(format!("# config-hash: {hash}"));
        lines.push(format!("# {description}"));
        lines.push(format!("# {params_line}"));
        lines.push(columns.join(","));
        Self { lines, columns: columns.len(), data_rows: 0 }
    }

    pub fn push_row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "row width must match the header");
        let row: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.lines.push(row.join(","));
        self.data_rows += 1;
    }

    pub fn data_rows(&self) -> usize {
        self.data_rows
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        let mut file = fs::File::create(path)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
        for line in &self.lines {
            writeln!(file, "{line}")
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// Sidecar metadata for outputs with excluded (singular) rows.
pub fn write_sidecar(
    path: &Path,
    hash: &str,
    singular_times: &[f64],
    excluded_rows: &[f64],
    note: &str,
) -> Result<(), CliError> {
    let body = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "note": note,
        "singular_times": singular_times,
        "excluded_t": excluded_rows,
    });
    fs::write(path, serde_json::to_string_pretty(&body).expect("serializable") + "\n")
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}
