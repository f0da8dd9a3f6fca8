//! On-disk formats.
//!
//! Every JSON document carries a `format` tag and a `version`; readers reject
//! documents with a different tag or a newer version. Errors raised while
//! reading or writing a file name that file.

mod boundary;
mod field;
mod matrix;
mod report;
mod samples;
mod series;

pub use boundary::{read_boundary, read_polygon_file, write_boundary, PolygonFile};
pub use field::{read_field, read_field_csv, write_field, write_field_csv};
pub use matrix::{read_basis, read_covariates, write_basis, write_covariates, ColumnProvenance};
pub use report::{interval_summary, EssEntry, FitReport, IntervalSummary, Reproducibility};
pub use samples::{read_samples, write_samples, DEFAULT_CHUNK_DRAWS};
pub use series::{read_series, write_series, SeriesManifest};

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Version written into every document.
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn check_header(path: &Path, format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!(
            "expected a '{expected}' document, found '{format}'"
        ))
        .in_file(path));
    }
    if version > FORMAT_VERSION {
        return Err(Error::Format(format!(
            "document version {version} is newer than the supported {FORMAT_VERSION}"
        ))
        .in_file(path));
    }
    Ok(())
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Compact JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec(value).map_err(|e| Error::from(e).in_file(path))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Indented JSON, for documents meant to be read by people.
pub(crate) fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::from(e).in_file(path))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    }
    fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Writes a report document with indentation.
pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json_pretty(path, value)
}
