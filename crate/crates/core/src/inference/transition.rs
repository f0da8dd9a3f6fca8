use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::dist::Gaussian;
use super::Hyperparameters;
use crate::error::{Error, Result};

/// Parameterization of the autoregressive transition `xi_k = M xi_{k-1} + eta`.
pub trait TransitionModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Alternative names accepted by the registry, lower case.
    fn aliases(&self) -> &'static [&'static str];
    /// Name of the posterior block holding the parameters.
    fn block(&self) -> &'static str;
    fn n_params(&self, j: usize) -> usize;
    /// Shape under which draws are stored.
    fn param_shape(&self, j: usize) -> Vec<usize> {
        vec![self.n_params(j)]
    }
    fn check(&self, j: usize) -> Result<()>;
    /// Builds `M` from the parameter vector.
    fn matrix(&self, params: &DVector<f64>, j: usize) -> DMatrix<f64>;
    /// Full conditional of the parameters given the coefficient path and
    /// the innovation precision.
    fn conditional(
        &self,
        xi: &[DVector<f64>],
        sigma_eta_inv: &DMatrix<f64>,
        hyper: &Hyperparameters,
    ) -> Result<Gaussian>;

    /// Largest eigenvalue modulus of `M`.
    fn spectral_radius(&self, params: &DVector<f64>, j: usize) -> f64 {
        self.matrix(params, j)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Unrestricted `J x J` transition; parameters are `vec(M)`, column-stacked.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullTransition;

/// Diagonal transition `diag(gamma)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiagonalTransition;

/// Sum of `xi_{k-1} xi_{k-1}^T` over consecutive pairs.
fn lagged_gram(xi: &[DVector<f64>]) -> DMatrix<f64> {
    let j = xi[0].len();
    xi[..xi.len() - 1]
        .iter()
        .fold(DMatrix::zeros(j, j), |acc, x| acc + x * x.transpose())
}

impl TransitionModel for FullTransition {
    fn name(&self) -> &'static str {
        "full"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["m1", "var"]
    }

    fn block(&self) -> &'static str {
        "m_xi"
    }

    fn n_params(&self, j: usize) -> usize {
        j * j
    }

    fn param_shape(&self, j: usize) -> Vec<usize> {
        vec![j, j]
    }

    fn check(&self, j: usize) -> Result<()> {
        if j < 2 {
            return Err(Error::InvalidParameter(
                "the full transition needs J >= 2".into(),
            ));
        }
        Ok(())
    }

    fn matrix(&self, params: &DVector<f64>, j: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(j, j, params.as_slice())
    }

    fn conditional(
        &self,
        xi: &[DVector<f64>],
        sigma_eta_inv: &DMatrix<f64>,
        hyper: &Hyperparameters,
    ) -> Result<Gaussian> {
        let j = sigma_eta_inv.nrows();
        let gram = lagged_gram(xi);
        let cross = xi.windows(2).fold(DMatrix::zeros(j, j), |acc, w| {
            acc + &w[1] * w[0].transpose()
        });
        let precision = gram.kronecker(sigma_eta_inv) + DMatrix::identity(j * j, j * j) / hyper.c_m;
        let shift = sigma_eta_inv * cross;
        Gaussian::from_canonical(precision, DVector::from_column_slice(shift.as_slice()))
    }
}

impl TransitionModel for DiagonalTransition {
    fn name(&self) -> &'static str {
        "diagonal"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["m2", "diag"]
    }

    fn block(&self) -> &'static str {
        "gamma"
    }

    fn n_params(&self, j: usize) -> usize {
        j
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 {
            return Err(Error::InvalidParameter("J must be positive".into()));
        }
        Ok(())
    }

    fn matrix(&self, params: &DVector<f64>, _j: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal(params)
    }

    fn conditional(
        &self,
        xi: &[DVector<f64>],
        sigma_eta_inv: &DMatrix<f64>,
        hyper: &Hyperparameters,
    ) -> Result<Gaussian> {
        let j = sigma_eta_inv.nrows();
        let precision =
            sigma_eta_inv.component_mul(&lagged_gram(xi)) + DMatrix::identity(j, j) / hyper.c_gamma;
        let shift = xi.windows(2).fold(DVector::zeros(j), |acc, w| {
            acc + (sigma_eta_inv * &w[1]).component_mul(&w[0])
        });
        Gaussian::from_canonical(precision, shift)
    }

    fn spectral_radius(&self, params: &DVector<f64>, _j: usize) -> f64 {
        params.amax()
    }
}

/// Transition models by name.
#[derive(Debug, Clone)]
pub struct TransitionRegistry {
    entries: Vec<Arc<dyn TransitionModel>>,
}

impl Default for TransitionRegistry {
    fn default() -> Self {
        TransitionRegistry {
            entries: vec![Arc::new(FullTransition), Arc::new(DiagonalTransition)],
        }
    }
}

impl TransitionRegistry {
    pub fn register(&mut self, model: Arc<dyn TransitionModel>) {
        self.entries.retain(|m| m.name() != model.name());
        self.entries.push(model);
    }

    /// Case-insensitive lookup by name or alias.
    pub fn get(&self, name: &str) -> Result<Arc<dyn TransitionModel>> {
        let key = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|m| m.name() == key || m.aliases().contains(&key.as_str()))
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "transition model",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|m| m.name()).collect()
    }
}
