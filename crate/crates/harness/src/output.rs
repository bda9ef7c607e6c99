//! CSV tables, JSON summaries and the run metadata sidecar.
//!
//! Everything here except `metadata.json` is a pure function of its inputs, so
//! repeating a command with the same scenario and seeds reproduces the files
//! byte for byte. Wall-clock timestamps go to the sidecar only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const METADATA_FILE: &str = "metadata.json";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

#[derive(Debug, Serialize)]
struct Metadata<'a, P: Serialize> {
    command: &'a str,
    version: &'a str,
    written_at_unix: f64,
    outputs: Vec<String>,
    parameters: P,
}

/// Writes `metadata.json` next to the outputs of one command.
pub fn write_metadata<P: Serialize>(dir: &Path, command: &str, parameters: P, outputs: &[PathBuf]) -> Result<PathBuf> {
    let written_at_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let outputs = outputs
        .iter()
        .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = Metadata { command, version: env!("CARGO_PKG_VERSION"), written_at_unix, outputs, parameters };
    write_json(&dir.join(METADATA_FILE), &meta)
}

/// Seed for sweep point `index`, mixed from `base` with SplitMix64 so that
/// neighbouring points get unrelated streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// File-name friendly rendering of a real parameter value (`2.5` → `2.5`,
/// `-1` → `m1`).
pub fn value_tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_and_repeat() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn tags() {
        assert_eq!(value_tag(2.5), "2.5");
        assert_eq!(value_tag(4.0), "4");
        assert_eq!(value_tag(-0.5), "m0.5");
    }
}
