//! On-disk artifacts: datasets, ground truth, chains, summaries, reports and
//! run configuration.
//!
//! Floats are written in shortest round-trip form, so reading an artifact
//! back reproduces every value bit for bit. Reading validates structure and
//! rejects NaN.

mod chain;
mod config;
mod dataset;
mod summary;
mod truth;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use chain::{chain_columns, read_chain, write_chain, ChainFile, ChainMeta, CHAIN_META, DRAWS_FILE};
pub use config::{HyperFile, HyperOverrides, RunConfig};
pub use dataset::{read_dataset, write_dataset, DatasetManifest, EdgeFormat, MANIFEST_FILE};
pub use summary::{write_curve_csv, write_selection_csv};
pub use truth::{read_truth, write_truth, TruthFile, TRUTH_FILE};

/// Version stamped into every manifest and sidecar.
pub const FORMAT_VERSION: u32 = 1;

/// Shortest decimal string that parses back to exactly `x`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn parse_f64(path: &Path, what: impl Fn() -> String, s: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().map_err(|_| format_error(path, format!("{}: '{s}' is not a number", what())))?;
    if x.is_nan() {
        return Err(format_error(path, format!("{}: NaN is not allowed", what())));
    }
    Ok(x)
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub(crate) fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_error(path))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_error(path))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(io_error(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| format_error(path, format!("cannot encode JSON: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| format_error(path, e.to_string()))
}

pub fn write_toml<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| format_error(path, format!("cannot encode TOML: {e}")))?;
    write_text(path, &text)
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| format_error(path, e.to_string()))
}

/// Rows of a CSV file as strings; the header is returned separately when
/// `header` is set.
pub(crate) fn read_csv(path: &Path, header: bool) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format_error(path, e.to_string()))?;
    let head = if header {
        reader.headers().map_err(|e| format_error(path, e.to_string()))?.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| format_error(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((head, rows))
}

pub(crate) fn write_csv(
    path: &Path,
    header: Option<&[String]>,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| format_error(path, e.to_string()))?;
    let fail = |e: csv::Error| format_error(path, e.to_string());
    if let Some(h) = header {
        writer.write_record(h).map_err(fail)?;
    }
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer.flush().map_err(io_error(path))
}

/// Checks a header row against the expected column names.
pub(crate) fn expect_header(path: &Path, found: &[String], expected: &[String]) -> Result<()> {
    if found != expected {
        return Err(format_error(path, format!("header is [{}], expected [{}]", found.join(","), expected.join(","))));
    }
    Ok(())
}

pub(crate) fn check_version(path: &Path, found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(format_error(path, format!("format version {found} is not supported (expected {FORMAT_VERSION})")));
    }
    Ok(())
}

/// SHA-256 of a file's bytes as lowercase hex.
pub fn file_sha256(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path).map_err(io_error(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
