use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_header, read_json, write_json, FORMAT_VERSION};
use crate::basis::{BasisMatrix, CovariateMatrix};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

const BASIS: &str = "firefront.basis";
const COVARIATES: &str = "firefront.covariates";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDoc {
    format: String,
    version: u32,
    grid: GridSpec,
    j: usize,
    eigenvalues: Vec<f64>,
    /// Column-major `N x J`.
    values: Vec<f64>,
}

pub fn write_basis(path: &Path, basis: &BasisMatrix) -> Result<()> {
    write_json(
        path,
        &BasisDoc {
            format: BASIS.into(),
            version: FORMAT_VERSION,
            grid: *basis.grid(),
            j: basis.j(),
            eigenvalues: basis.eigenvalues().to_vec(),
            values: basis.columns().as_slice().to_vec(),
        },
    )
}

fn column_major(grid: &GridSpec, cols: usize, values: Vec<f64>) -> Result<DMatrix<f64>> {
    let n = grid.len();
    if values.len() != n * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {n} cells x {cols} columns",
            values.len()
        )));
    }
    Ok(DMatrix::from_vec(n, cols, values))
}

pub fn read_basis(path: &Path) -> Result<BasisMatrix> {
    let doc: BasisDoc = read_json(path)?;
    check_header(path, &doc.format, doc.version, BASIS)?;
    let build = || {
        let columns = column_major(&doc.grid, doc.j, doc.values)?;
        BasisMatrix::new(doc.grid, columns, doc.eigenvalues)
    };
    build().map_err(|e| e.in_file(path))
}

/// Where a covariate column came from and how it was transformed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnProvenance {
    pub name: String,
    pub source: String,
    /// Steps applied in order, e.g. `["bilinear", "slope", "standardize"]`.
    pub steps: Vec<String>,
    pub raw_mean: f64,
    pub raw_sd: f64,
    /// Cells without data, set to zero after standardizing.
    pub missing_cells: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CovariateDoc {
    format: String,
    version: u32,
    grid: GridSpec,
    names: Vec<String>,
    #[serde(default)]
    provenance: Vec<ColumnProvenance>,
    /// Column-major `N x P`.
    values: Vec<f64>,
}

pub fn write_covariates(
    path: &Path,
    x: &CovariateMatrix,
    provenance: &[ColumnProvenance],
) -> Result<()> {
    write_json(
        path,
        &CovariateDoc {
            format: COVARIATES.into(),
            version: FORMAT_VERSION,
            grid: *x.grid(),
            names: x.names().to_vec(),
            provenance: provenance.to_vec(),
            values: x.columns().as_slice().to_vec(),
        },
    )
}

pub fn read_covariates(path: &Path) -> Result<(CovariateMatrix, Vec<ColumnProvenance>)> {
    let doc: CovariateDoc = read_json(path)?;
    check_header(path, &doc.format, doc.version, COVARIATES)?;
    let build = || {
        let columns = column_major(&doc.grid, doc.names.len(), doc.values)?;
        CovariateMatrix::from_standardized(doc.grid, doc.names, columns)
    };
    let x = build().map_err(|e| e.in_file(path))?;
    Ok((x, doc.provenance))
}
