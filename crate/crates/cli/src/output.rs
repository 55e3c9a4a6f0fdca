//! Artifact writing. Every artifact embeds the version, the master seed and
//! the full argument list, and identical configurations produce
//! byte-identical files.

use crate::CliError;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub argv: Vec<String>,
}

impl Meta {
    pub fn new(seed: u64) -> Self {
        Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            argv: std::env::args().skip(1).collect(),
        }
    }

    /// Comment line carried at the top of every CSV artifact.
    pub fn csv_line(&self) -> String {
        format!(
            "# nef v{} seed={} argv={}",
            self.version,
            self.seed,
            self.argv.join(" ")
        )
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// CSV with a meta comment line, a header, and row-major float cells.
/// Cells far outside unit scale switch to scientific notation; either way
/// the shortest round-trip representation is used, so identical runs are
/// byte-identical.
pub fn csv_artifact(meta: &Meta, header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&meta.csv_line());
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(',');
            }
            if v == 0.0 || (v.abs() >= 1e-4 && v.abs() < 1e15) {
                let _ = write!(out, "{v}");
            } else {
                let _ = write!(out, "{v:e}");
            }
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn json_artifact<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Derives a sibling path `stem_suffix.csv` from the main artifact path.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let mut name = stem.unwrap_or_else(|| "out".into());
    name.push('_');
    name.push_str(suffix);
    name.push_str(".csv");
    path.with_file_name(name)
}
