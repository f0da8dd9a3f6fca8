use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};
use crate::grid::{BoundarySet, Point};

/// Polygon JSON: `{"time": "2017-12-05T08:00:00Z", "rings": [[[x, y], ...]]}`.
/// `time` is an ISO-8601 string and may be omitted when the caller supplies
/// timestamps separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
    pub rings: Vec<Vec<Point>>,
}

/// Reads a polygon file and validates each ring, naming the file and the
/// offending ring on failure.
pub fn read_polygon_file(path: &Path) -> Result<PolygonFile> {
    let doc: PolygonFile = read_json(path)?;
    for (k, ring) in doc.rings.iter().enumerate() {
        BoundarySet::new(vec![ring.clone()], 0.0).map_err(|e| {
            match e {
                Error::DegenerateRing { reason, .. } => Error::DegenerateRing { ring: k, reason },
                other => other,
            }
            .in_file(path)
        })?;
    }
    if doc.rings.is_empty() {
        return Err(Error::NoBoundary.in_file(path));
    }
    Ok(doc)
}

/// Reads a polygon file as a boundary stamped `timestamp` hours.
pub fn read_boundary(path: &Path, timestamp: f64) -> Result<BoundarySet> {
    let doc = read_polygon_file(path)?;
    BoundarySet::new(doc.rings, timestamp).map_err(|e| e.in_file(path))
}

pub fn write_boundary(path: &Path, boundary: &BoundarySet, time: Option<String>) -> Result<()> {
    write_json(
        path,
        &PolygonFile {
            time,
            rings: boundary.rings.clone(),
        },
    )
}
