//! Samplers and log-densities for the conjugate families used by the Gibbs
//! sampler.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonSpd(format!("{what} has non-finite entries")));
    }
    Cholesky::new(m).ok_or_else(|| Error::NonSpd(format!("{what} is not positive definite")))
}

fn recompose(chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let l = chol.l();
    &l * l.transpose()
}

fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .sum::<f64>()
}

/// Inverse-gamma with density proportional to `x^-(shape+1) exp(-rate / x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGamma {
    shape: f64,
    rate: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse-gamma needs shape, rate > 0 (got {shape}, {rate})"
            )));
        }
        Ok(InverseGamma { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `rate / (shape - 1)`, infinite when `shape <= 1`.
    pub fn mean(&self) -> f64 {
        if self.shape > 1.0 {
            self.rate / (self.shape - 1.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, 1.0 / self.rate).expect("validated parameters");
        // Tiny shapes can underflow the gamma draw; keep the result finite.
        1.0 / g.sample(rng).max(f64::MIN_POSITIVE)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln()
            - ln_gamma(self.shape)
            - (self.shape + 1.0) * x.ln()
            - self.rate / x
    }
}

/// Multivariate normal in canonical form: precision `D` and shift `b`, so
/// the mean is `D^-1 b`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Gaussian {
    pub fn from_canonical(precision: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if precision.nrows() != shift.len() || !precision.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "precision {}x{} with shift of length {}",
                precision.nrows(),
                precision.ncols(),
                shift.len()
            )));
        }
        let chol = cholesky(precision, "conditional precision")?;
        let mean = chol.solve(&shift);
        Ok(Gaussian { mean, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> DMatrix<f64> {
        recompose(&self.chol)
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `mean + L^-T z` with `D = L L^T` and `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = standard_normal_vector(self.dim(), rng);
        let offset = self
            .chol
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        &self.mean + offset
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let l = self.chol.l();
        let q = (l.transpose() * diff).norm_squared();
        0.5 * ln_det(&self.chol) - 0.5 * q - 0.5 * self.dim() as f64 * (2.0 * PI).ln()
    }
}

/// Independent normals with per-coordinate means and precisions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub precision: Vec<f64>,
}

impl DiagonalGaussian {
    /// Builds from per-coordinate precision `d` and shift `b`.
    pub fn from_canonical(precision: Vec<f64>, shift: &[f64]) -> Result<Self> {
        if let Some(i) = precision.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NonSpd(format!(
                "diagonal precision entry {i} is {}",
                precision[i]
            )));
        }
        let mean = precision.iter().zip(shift).map(|(d, b)| b / d).collect();
        Ok(DiagonalGaussian { mean, precision })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.precision)
            .map(|(m, d)| m + rng.sample::<f64, _>(StandardNormal) / d.sqrt())
            .collect()
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.precision)
            .zip(x)
            .map(|((m, d), v)| 0.5 * (d / (2.0 * PI)).ln() - 0.5 * d * (v - m).powi(2))
            .sum()
    }
}

/// Wishart over `p x p` SPD matrices with mean `df * scale`.
#[derive(Debug, Clone)]
pub struct Wishart {
    df: f64,
    scale_chol: Cholesky<f64, Dyn>,
}

impl Wishart {
    pub fn new(scale: DMatrix<f64>, df: f64) -> Result<Self> {
        let p = scale.nrows();
        if !scale.is_square() || p == 0 {
            return Err(Error::DimensionMismatch(
                "Wishart scale must be square".into(),
            ));
        }
        if !(df > (p - 1) as f64) || !df.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Wishart df {df} must exceed dimension - 1 = {}",
                p - 1
            )));
        }
        let scale_chol = cholesky(scale, "Wishart scale")?;
        Ok(Wishart { df, scale_chol })
    }

    pub fn dim(&self) -> usize {
        self.scale_chol.l_dirty().nrows()
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> DMatrix<f64> {
        recompose(&self.scale_chol)
    }

    pub fn mean(&self) -> DMatrix<f64> {
        self.scale() * self.df
    }

    /// Bartlett decomposition: `L A A^T L^T` with `A` lower triangular,
    /// chi-distributed diagonal and standard normal below it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let p = self.dim();
        let mut a = DMatrix::zeros(p, p);
        for i in 0..p {
            let chi2 = ChiSquared::new(self.df - i as f64).expect("df validated");
            a[(i, i)] = chi2.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let la = self.scale_chol.l() * a;
        let w = &la * la.transpose();
        // Exact symmetry for downstream Cholesky factorizations.
        (&w + w.transpose()) * 0.5
    }

    pub fn ln_pdf(&self, x: &DMatrix<f64>) -> f64 {
        let p = self.dim() as f64;
        let Some(chol_x) = Cholesky::new(x.clone()) else {
            return f64::NEG_INFINITY;
        };
        let trace = self.scale_chol.solve(x).trace();
        let ln_mv_gamma = p * (p - 1.0) / 4.0 * PI.ln()
            + (0..self.dim())
                .map(|j| ln_gamma(0.5 * self.df - 0.5 * j as f64))
                .sum::<f64>();
        0.5 * (self.df - p - 1.0) * ln_det(&chol_x)
            - 0.5 * trace
            - 0.5 * self.df * p * 2f64.ln()
            - 0.5 * self.df * ln_det(&self.scale_chol)
            - ln_mv_gamma
    }
}

/// How the matrix argument of [`sample_mvn`] is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvnForm {
    /// `location` is the mean and the matrix its covariance.
    Covariance,
    /// The matrix is the precision `D` and `location` the shift `b`; the mean
    /// is `D^-1 b`.
    Precision,
}

/// One multivariate normal draw via Cholesky factorization.
pub fn sample_mvn<R: Rng + ?Sized>(
    location: &DVector<f64>,
    matrix: &DMatrix<f64>,
    form: MvnForm,
    rng: &mut R,
) -> Result<DVector<f64>> {
    match form {
        MvnForm::Precision => {
            Ok(Gaussian::from_canonical(matrix.clone(), location.clone())?.sample(rng))
        }
        MvnForm::Covariance => {
            if matrix.nrows() != location.len() || !matrix.is_square() {
                return Err(Error::DimensionMismatch(format!(
                    "covariance {}x{} with mean of length {}",
                    matrix.nrows(),
                    matrix.ncols(),
                    location.len()
                )));
            }
            let chol = cholesky(matrix.clone(), "covariance")?;
            let z = standard_normal_vector(location.len(), rng);
            Ok(location + chol.l() * z)
        }
    }
}
