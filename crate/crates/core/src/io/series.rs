use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::{read_field, write_field};
use super::{check_header, read_json, write_json_pretty, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::series::ObservationSeries;

const FORMAT: &str = "firefront.series";
const MANIFEST: &str = "manifest.json";

/// `manifest.json` of a series directory. Times are hours since the first
/// observation; `origin` optionally anchors them to an ISO-8601 instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesManifest {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    pub times: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Field file names relative to the directory.
    pub fields: Vec<String>,
}

pub fn write_series(dir: &Path, series: &ObservationSeries, origin: Option<String>) -> Result<()> {
    let names: Vec<String> = (0..series.len())
        .map(|k| format!("field_{k:03}.json"))
        .collect();
    for (name, field) in names.iter().zip(series.fields()) {
        write_field(&dir.join(name), field)?;
    }
    let manifest = SeriesManifest {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        grid: *series.grid(),
        origin,
        times: series.times().to_vec(),
        deltas: series.deltas(),
        fields: names,
    };
    write_json_pretty(&dir.join(MANIFEST), &manifest)
}

/// Reads a series directory, returning the series and its manifest.
pub fn read_series(dir: &Path) -> Result<(ObservationSeries, SeriesManifest)> {
    let path = dir.join(MANIFEST);
    let manifest: SeriesManifest = read_json(&path)?;
    check_header(&path, &manifest.format, manifest.version, FORMAT)?;
    let fields = manifest
        .fields
        .iter()
        .map(|name| read_field(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    let series = ObservationSeries::new(manifest.grid, manifest.times.clone(), fields)
        .map_err(|e| e.in_file(&path))?;
    let expected = series.deltas();
    let consistent = expected.len() == manifest.deltas.len()
        && expected
            .iter()
            .zip(&manifest.deltas)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    if !consistent {
        return Err(
            Error::InvalidSeries("deltas disagree with the timestamps".into()).in_file(&path),
        );
    }
    Ok((series, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    #[test]
    fn round_trip_keeps_times_and_masks() {
        let g = GridSpec::new(3, 2, (0.0, 2.0), (0.0, 1.0)).unwrap();
        let a = ScalarField::from_fn(g, |x, y| x - y).unwrap();
        let s = ObservationSeries::new(g, vec![0.0, 20.0, 45.0], vec![a.clone(); 3])
            .unwrap()
            .with_held_out(&[1])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_series(dir.path(), &s, Some("2017-12-05T00:00:00Z".into())).unwrap();
        let (back, manifest) = read_series(dir.path()).unwrap();
        assert_eq!(manifest.deltas, vec![20.0, 25.0]);
        assert_eq!(back.times(), s.times());
        assert_eq!(back.fields()[1].observed_count(), 0);
        assert_eq!(back.fields()[2], s.fields()[2]);
    }
}
