//! Low-rank spatial basis and covariate design for the speed field.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{standardize, GridSpec, ScalarField};

/// Dense `N x N` matrix of `exp(-|s_i - s_j| / range)` over cell centers.
pub fn exponential_correlation(grid: &GridSpec, range: f64) -> Result<DMatrix<f64>> {
    grid.validate()?;
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "range must be > 0, got {range}"
        )));
    }
    let centers: Vec<_> = grid.centers().collect();
    let n = centers.len();
    let mut corr = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        for j in 0..i {
            let d = (centers[i][0] - centers[j][0]).hypot(centers[i][1] - centers[j][1]);
            let c = (-d / range).exp();
            corr[(i, j)] = c;
            corr[(j, i)] = c;
        }
    }
    Ok(corr)
}

/// One third of the longer side of the grid extent.
pub fn default_range(grid: &GridSpec) -> f64 {
    (grid.x_max - grid.x_min).max(grid.y_max - grid.y_min) / 3.0
}

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// `N x J`, one unit eigenvector per column.
    pub vectors: DMatrix<f64>,
    /// Non-increasing.
    pub values: Vec<f64>,
}

/// Top-`j` eigenpairs of `corr`, each vector signed so that its
/// largest-magnitude entry is positive (the first one on ties).
pub fn leading_eigenbasis(corr: &DMatrix<f64>, j: usize) -> Result<Eigenpairs> {
    let n = corr.nrows();
    if !corr.is_square() {
        return Err(Error::DimensionMismatch(
            "correlation matrix is not square".into(),
        ));
    }
    if j == 0 || j > n {
        return Err(Error::InvalidParameter(format!(
            "basis size J = {j} must lie in 1..={n}"
        )));
    }
    let eig = SymmetricEigen::new(corr.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let lambda_max = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);

    let mut vectors = DMatrix::zeros(n, j);
    let mut values = Vec::with_capacity(j);
    for (col, &k) in order.iter().take(j).enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        // First entry within rounding of the largest magnitude.
        let top = v.amax();
        let pivot = v
            .iter()
            .copied()
            .find(|x| x.abs() >= top * (1.0 - 1e-10))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        let lambda = eig.eigenvalues[k];
        let residual = (corr * &v - &v * lambda).norm();
        if residual > 1e-8 * lambda_max {
            return Err(Error::Numerical(format!(
                "eigenpair {col} residual {residual:e} exceeds tolerance"
            )));
        }
        vectors.set_column(col, &v);
        values.push(lambda);
    }
    Ok(Eigenpairs { vectors, values })
}

/// The `N x J` matrix of spatial basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    grid: GridSpec,
    columns: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl BasisMatrix {
    /// Basis from the exponential correlation on `grid`; `range` defaults to
    /// [`default_range`].
    pub fn exponential(grid: &GridSpec, j: usize, range: Option<f64>) -> Result<Self> {
        let range = range.unwrap_or_else(|| default_range(grid));
        let corr = exponential_correlation(grid, range)?;
        let pairs = leading_eigenbasis(&corr, j)?;
        BasisMatrix::new(*grid, pairs.vectors, pairs.values)
    }

    /// Validates orthonormal columns and positive, non-increasing eigenvalues.
    pub fn new(grid: GridSpec, columns: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if columns.nrows() != grid.len() || columns.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{} with {} eigenvalues for {} cells",
                columns.nrows(),
                columns.ncols(),
                eigenvalues.len(),
                grid.len()
            )));
        }
        if columns.ncols() == 0 {
            return Err(Error::InvalidParameter("basis needs J >= 1".into()));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) || eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "basis eigenvalues must be positive and non-increasing".into(),
            ));
        }
        let gram = columns.tr_mul(&columns);
        let off = (&gram - DMatrix::identity(gram.nrows(), gram.ncols())).amax();
        if off > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "basis columns are not orthonormal (max deviation {off:e})"
            )));
        }
        Ok(BasisMatrix {
            grid,
            columns,
            eigenvalues,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn j(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// The `N x P` matrix of standardized covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateMatrix {
    grid: GridSpec,
    names: Vec<String>,
    columns: DMatrix<f64>,
}

impl CovariateMatrix {
    /// No covariates (`P = 0`).
    pub fn empty(grid: &GridSpec) -> Self {
        CovariateMatrix {
            grid: *grid,
            names: Vec::new(),
            columns: DMatrix::zeros(grid.len(), 0),
        }
    }

    /// Standardizes each raw field; masked cells become 0.
    pub fn from_fields(grid: &GridSpec, named: Vec<(String, ScalarField)>) -> Result<Self> {
        let mut names = Vec::with_capacity(named.len());
        let mut columns = DMatrix::zeros(grid.len(), named.len());
        for (k, (name, field)) in named.into_iter().enumerate() {
            field
                .grid()
                .ensure_same(grid, &format!("covariate '{name}'"))?;
            let z = standardize(&field).map_err(|e| match e {
                Error::ConstantCovariate(_) => Error::ConstantCovariate(Some(name.clone())),
                other => other,
            })?;
            columns.set_column(k, &DVector::from_column_slice(z.values()));
            names.push(name);
        }
        Ok(CovariateMatrix {
            grid: *grid,
            names,
            columns,
        })
    }

    /// Wraps columns that were standardized elsewhere, checking only shapes.
    pub fn from_standardized(
        grid: GridSpec,
        names: Vec<String>,
        columns: DMatrix<f64>,
    ) -> Result<Self> {
        if columns.nrows() != grid.len() || columns.ncols() != names.len() {
            return Err(Error::DimensionMismatch(format!(
                "covariate matrix is {}x{} with {} names for {} cells",
                columns.nrows(),
                columns.ncols(),
                names.len(),
                grid.len()
            )));
        }
        Ok(CovariateMatrix {
            grid,
            names,
            columns,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.columns.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn column_field(&self, k: usize) -> Result<ScalarField> {
        ScalarField::new(self.grid, self.columns.column(k).iter().copied().collect())
    }
}

/// `X beta + Psi xi` as a field.
pub fn speed_field(
    x: &CovariateMatrix,
    beta: &DVector<f64>,
    basis: &BasisMatrix,
    xi: &DVector<f64>,
) -> Result<ScalarField> {
    x.grid().ensure_same(basis.grid(), "covariates vs basis")?;
    if beta.len() != x.p() || xi.len() != basis.j() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries for P = {}, xi has {} for J = {}",
            beta.len(),
            x.p(),
            xi.len(),
            basis.j()
        )));
    }
    let v = x.columns() * beta + basis.columns() * xi;
    ScalarField::new(*x.grid(), v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_definition() {
        let g = GridSpec::new(4, 4, (0.0, 3.0), (0.0, 3.0)).unwrap();
        let c = exponential_correlation(&g, 2.0).unwrap();
        assert!((0..16).all(|i| c[(i, i)] == 1.0));
        // Cells (0,0) and (2,0) are 2 apart, equal to the range.
        let (a, b) = (g.index(0, 0), g.index(2, 0));
        assert!((c[(a, b)] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(c, c.transpose());
        assert!(exponential_correlation(&g, 0.0).is_err());
    }

    #[test]
    fn two_by_two_eigenpairs() {
        let rho = 0.4;
        let c = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let e = leading_eigenbasis(&c, 2).unwrap();
        assert!((e.values[0] - 1.4).abs() < 1e-12);
        assert!((e.values[1] - 0.6).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - s).abs() < 1e-12 && (e.vectors[(1, 0)] - s).abs() < 1e-12);
        // Largest-magnitude entry positive; the tie resolves to the first.
        assert!((e.vectors[(0, 1)] - s).abs() < 1e-12 && (e.vectors[(1, 1)] + s).abs() < 1e-12);
        assert!(leading_eigenbasis(&c, 3).is_err());
    }

    #[test]
    fn identity_accepts_any_unit_vector() {
        let e = leading_eigenbasis(&DMatrix::identity(5, 5), 1).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.vectors.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn speed_field_is_linear() {
        let g = GridSpec::new(5, 4, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let basis = BasisMatrix::exponential(&g, 3, None).unwrap();
        let ramp = ScalarField::from_fn(g, |x, y| x + 0.5 * y).unwrap();
        let x = CovariateMatrix::from_fields(&g, vec![("ramp".into(), ramp)]).unwrap();
        let zero = speed_field(&x, &DVector::zeros(1), &basis, &DVector::zeros(3)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let two = speed_field(
            &x,
            &DVector::from_element(1, 2.0),
            &basis,
            &DVector::zeros(3),
        )
        .unwrap();
        for (i, v) in two.values().iter().enumerate() {
            assert!((v - 2.0 * x.columns()[(i, 0)]).abs() < 1e-12);
        }
        assert!(speed_field(&x, &DVector::zeros(2), &basis, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn constant_covariate_is_named() {
        let g = GridSpec::new(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let flat = ScalarField::constant(g, 1.0).unwrap();
        let err = CovariateMatrix::from_fields(&g, vec![("canopy".into(), flat)]).unwrap_err();
        assert!(err.to_string().contains("canopy"));
    }
}
