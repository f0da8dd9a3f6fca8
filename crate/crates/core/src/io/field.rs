use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, read_json, write_json, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

const FORMAT: &str = "firefront.field";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    format: String,
    version: u32,
    grid: GridSpec,
    /// `[start, length]` runs of unobserved cells.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    masked_runs: Vec<[usize; 2]>,
    /// `null` exactly at unobserved cells.
    values: Vec<Option<f64>>,
}

fn runs(mask: &[bool]) -> Vec<[usize; 2]> {
    let mut out: Vec<[usize; 2]> = Vec::new();
    for (i, &observed) in mask.iter().enumerate() {
        if observed {
            continue;
        }
        match out.last_mut() {
            Some(run) if run[0] + run[1] == i => run[1] += 1,
            _ => out.push([i, 1]),
        }
    }
    out
}

pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let n = field.grid().len();
    let doc = FieldDoc {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        grid: *field.grid(),
        masked_runs: field.mask().map(runs).unwrap_or_default(),
        values: (0..n).map(|i| field.get(i)).collect(),
    };
    write_json(path, &doc)
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let doc: FieldDoc = read_json(path)?;
    check_header(path, &doc.format, doc.version, FORMAT)?;
    decode(doc).map_err(|e| e.in_file(path))
}

fn decode(doc: FieldDoc) -> Result<ScalarField> {
    doc.grid.validate()?;
    let n = doc.grid.len();
    if doc.values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a grid of {n} cells",
            doc.values.len()
        )));
    }
    let mut mask = vec![true; n];
    for &[start, len] in &doc.masked_runs {
        if len == 0 || start + len > n {
            return Err(Error::Format(format!(
                "masked run [{start}, {len}] outside the grid"
            )));
        }
        mask[start..start + len].iter_mut().for_each(|m| *m = false);
    }
    if let Some(i) = (0..n).find(|&i| mask[i] != doc.values[i].is_some()) {
        return Err(Error::Format(format!(
            "cell {i}: null values must coincide with masked runs"
        )));
    }
    let values = doc
        .values
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    ScalarField::with_mask(doc.grid, values, mask)
}

/// Writes `x,y,value` rows in cell order, leaving `value` empty at
/// unobserved cells.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let grid = field.grid();
    w.write_record(["x", "y", "value"])
        .map_err(|e| Error::from(e).in_file(path))?;
    for i in 0..grid.len() {
        let [x, y] = grid.center(i);
        let v = field.get(i).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([x.to_string(), y.to_string(), v])
            .map_err(|e| Error::from(e).in_file(path))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(e.to_string()).in_file(path))?;
    super::write_bytes(path, &bytes)
}

#[derive(Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
    value: Option<f64>,
}

/// Reads `x,y,value` rows in any order. The grid is recovered from the
/// distinct coordinates, which must form a complete lattice.
pub fn read_field_csv(path: &Path) -> Result<ScalarField> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .map_err(|e| Error::from(e).in_file(path))?;
    lattice_field(rows).map_err(|e| e.in_file(path))
}

fn lattice_field(rows: Vec<CsvRow>) -> Result<ScalarField> {
    let axis = |coords: Vec<f64>| -> Vec<f64> {
        let mut v = coords;
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let xs = axis(rows.iter().map(|r| r.x).collect());
    let ys = axis(rows.iter().map(|r| r.y).collect());
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::Format(
            "need at least two distinct x and y coordinates".into(),
        ));
    }
    let grid = GridSpec::new(
        xs.len(),
        ys.len(),
        (xs[0], xs[xs.len() - 1]),
        (ys[0], ys[ys.len() - 1]),
    )?;
    let index_of = |axis: &[f64]| -> BTreeMap<u64, usize> {
        axis.iter()
            .enumerate()
            .map(|(i, v)| (v.to_bits(), i))
            .collect()
    };
    let (xi, yi) = (index_of(&xs), index_of(&ys));
    let n = grid.len();
    let mut values = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    let mut seen = vec![false; n];
    for r in rows {
        let idx = grid.index(xi[&r.x.to_bits()], yi[&r.y.to_bits()]);
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::Format(format!(
                "duplicate row at ({}, {})",
                r.x, r.y
            )));
        }
        if let Some(v) = r.value {
            values[idx] = v;
            mask[idx] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let [x, y] = grid.center(i);
        return Err(Error::Format(format!("missing row at ({x}, {y})")));
    }
    ScalarField::with_mask(grid, values, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let g = GridSpec::new(4, 3, (-1.0, 2.0), (0.0, 1.0)).unwrap();
        let values = (0..12).map(|i| (i as f64 * 0.1).sin() / 3.0).collect();
        let mask = vec![
            true, false, false, true, true, true, false, true, true, true, true, true,
        ];
        ScalarField::with_mask(g, values, mask).unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        let f = sample();
        write_field(&path, &f).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.mask(), f.mask());
        for i in 0..12 {
            assert_eq!(back.get(i).map(f64::to_bits), f.get(i).map(f64::to_bits));
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"masked_runs\":[[1,2],[6,1]]"));
    }

    #[test]
    fn inconsistent_mask_is_rejected_with_the_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let f = sample();
        write_field(&path, &f).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("[[1,2],[6,1]]", "[[1,1],[6,1]]");
        std::fs::write(&path, text).unwrap();
        let err = read_field(&path).unwrap_err().to_string();
        assert!(err.contains("bad.json") && err.contains("cell 2"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = sample();
        write_field_csv(&path, &f).unwrap();
        let back = read_field_csv(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.mask(), f.mask());
        for i in 0..12 {
            assert_eq!(back.get(i), f.get(i));
        }
    }

    #[test]
    fn csv_with_a_hole_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hole.csv");
        std::fs::write(&path, "x,y,value\n0,0,1\n1,0,2\n0,1,3\n").unwrap();
        assert!(read_field_csv(&path)
            .unwrap_err()
            .to_string()
            .contains("missing row"));
    }
}
