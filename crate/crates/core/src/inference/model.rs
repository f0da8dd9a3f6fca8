use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::dist::{DiagonalGaussian, Gaussian, InverseGamma, Wishart};
use super::transition::TransitionModel;
use super::Hyperparameters;
use crate::basis::{BasisMatrix, CovariateMatrix};
use crate::error::{Error, Result};
use crate::series::ObservationSeries;

/// Current values of every unknown in the hierarchy.
///
/// `phi` has `T + 1` entries: `phi[0]` is the fixed initial state (the first
/// observation) and `phi[k]` is the latent field at observation `k - 1`.
/// `xi[k]` drives the step from `phi[k]` to `phi[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub phi: Vec<DVector<f64>>,
    pub xi: Vec<DVector<f64>>,
    pub beta: DVector<f64>,
    /// Transition parameters in the layout of the active [`TransitionModel`].
    pub transition: DVector<f64>,
    pub sigma_eta_inv: DMatrix<f64>,
    pub sigma2_d: f64,
    pub sigma2_p: f64,
}

/// Data and design of one fit, prepared for repeated conditional updates.
#[derive(Debug, Clone)]
pub struct Model {
    n: usize,
    t: usize,
    z: Vec<DVector<f64>>,
    observed: Vec<Vec<bool>>,
    n_observed: usize,
    deltas: Vec<f64>,
    x: DMatrix<f64>,
    psi: DMatrix<f64>,
    xtx: DMatrix<f64>,
    psitpsi: DMatrix<f64>,
    hyper: Hyperparameters,
    transition: Arc<dyn TransitionModel>,
}

impl Model {
    /// Requires at least three observations, the first one fully observed.
    pub fn new(
        series: &ObservationSeries,
        basis: &BasisMatrix,
        covariates: &CovariateMatrix,
        hyper: Hyperparameters,
        transition: Arc<dyn TransitionModel>,
    ) -> Result<Self> {
        hyper.validate()?;
        transition.check(basis.j())?;
        let grid = series.grid();
        basis.grid().ensure_same(grid, "basis vs observations")?;
        covariates
            .grid()
            .ensure_same(grid, "covariates vs observations")?;
        if series.len() < 3 {
            return Err(Error::InvalidSeries(format!(
                "need at least 3 observations, got {}",
                series.len()
            )));
        }
        if !series.fields()[0].is_fully_observed() {
            return Err(Error::InvalidSeries(
                "the first observation fixes the initial state and must be fully observed".into(),
            ));
        }
        let n = grid.len();
        let z: Vec<DVector<f64>> = series
            .fields()
            .iter()
            .map(|f| DVector::from_iterator(n, (0..n).map(|i| f.get(i).unwrap_or(0.0))))
            .collect();
        let observed: Vec<Vec<bool>> = series
            .fields()
            .iter()
            .map(|f| (0..n).map(|i| f.is_observed(i)).collect())
            .collect();
        let n_observed = series.fields().iter().map(|f| f.observed_count()).sum();
        // The step into the first latent field reuses the first interval.
        let gaps = series.deltas();
        let deltas = std::iter::once(gaps[0])
            .chain(gaps.iter().copied())
            .collect();
        let x = covariates.columns().clone();
        let psi = basis.columns().clone();
        Ok(Model {
            n,
            t: series.len(),
            z,
            observed,
            n_observed,
            deltas,
            xtx: x.tr_mul(&x),
            psitpsi: psi.tr_mul(&psi),
            x,
            psi,
            hyper,
            transition,
        })
    }

    /// Number of grid cells.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of latent fields (equal to the number of observations).
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn j(&self) -> usize {
        self.psi.ncols()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Step lengths; entry `k` belongs to the step from `phi[k]` to `phi[k + 1]`.
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn transition(&self) -> &Arc<dyn TransitionModel> {
        &self.transition
    }

    pub fn transition_matrix(&self, state: &ChainState) -> DMatrix<f64> {
        self.transition.matrix(&state.transition, self.j())
    }

    /// Latent fields start at the data, carrying the previous field forward
    /// through unobserved cells; everything else starts at zero or identity.
    pub fn initial_state(&self) -> ChainState {
        let mut phi = Vec::with_capacity(self.t + 1);
        phi.push(self.z[0].clone());
        for k in 0..self.t {
            let prev = &phi[k];
            let next = DVector::from_fn(self.n, |i, _| {
                if self.observed[k][i] {
                    self.z[k][i]
                } else {
                    prev[i]
                }
            });
            phi.push(next);
        }
        let j = self.j();
        ChainState {
            phi,
            xi: vec![DVector::zeros(j); self.t],
            beta: DVector::zeros(self.p()),
            transition: DVector::zeros(self.transition.n_params(j)),
            sigma_eta_inv: DMatrix::identity(j, j),
            sigma2_d: 1.0,
            sigma2_p: 1.0,
        }
    }

    /// `X beta + Psi xi_k` for every step.
    pub fn speeds(&self, state: &ChainState) -> Vec<DVector<f64>> {
        let fixed = &self.x * &state.beta;
        state.xi.iter().map(|xi| &fixed + &self.psi * xi).collect()
    }

    fn residuals(&self, state: &ChainState) -> Vec<DVector<f64>> {
        self.speeds(state)
            .iter()
            .enumerate()
            .map(|(k, v)| &state.phi[k + 1] - &state.phi[k] + v * self.deltas[k])
            .collect()
    }

    pub fn sigma2_d_conditional(&self, state: &ChainState) -> Result<InverseGamma> {
        let mut ss = 0.0;
        for k in 0..self.t {
            for i in 0..self.n {
                if self.observed[k][i] {
                    ss += (self.z[k][i] - state.phi[k + 1][i]).powi(2);
                }
            }
        }
        InverseGamma::new(
            self.hyper.alpha_d + 0.5 * self.n_observed as f64,
            self.hyper.beta_d + 0.5 * ss,
        )
    }

    pub fn sigma2_p_conditional(&self, state: &ChainState) -> Result<InverseGamma> {
        let ss: f64 = self.residuals(state).iter().map(|r| r.norm_squared()).sum();
        InverseGamma::new(
            self.hyper.alpha_p + 0.5 * (self.n * self.t) as f64,
            self.hyper.beta_p + 0.5 * ss,
        )
    }

    /// Conditional of `phi[k]` for `k` in `1..=T`, given precomputed speeds.
    pub fn phi_conditional(
        &self,
        state: &ChainState,
        speeds: &[DVector<f64>],
        k: usize,
    ) -> Result<DiagonalGaussian> {
        assert!((1..=self.t).contains(&k), "latent index {k} out of range");
        let inv_d = 1.0 / state.sigma2_d;
        let inv_p = 1.0 / state.sigma2_p;
        let last = k == self.t;
        let from_prev = &state.phi[k - 1] - &speeds[k - 1] * self.deltas[k - 1];
        let from_next = (!last).then(|| &state.phi[k + 1] + &speeds[k] * self.deltas[k]);
        let obs = &self.observed[k - 1];
        let z = &self.z[k - 1];
        let mut precision = vec![0.0; self.n];
        let mut shift = vec![0.0; self.n];
        for i in 0..self.n {
            let mut d = inv_p;
            let mut b = from_prev[i] * inv_p;
            if obs[i] {
                d += inv_d;
                b += z[i] * inv_d;
            }
            if let Some(next) = &from_next {
                d += inv_p;
                b += next[i] * inv_p;
            }
            precision[i] = d;
            shift[i] = b;
        }
        DiagonalGaussian::from_canonical(precision, &shift)
    }

    pub fn beta_conditional(&self, state: &ChainState) -> Result<Gaussian> {
        let p = self.p();
        let inv_p = 1.0 / state.sigma2_p;
        let mut weighted = DVector::zeros(self.n);
        let mut delta_sq = 0.0;
        for k in 0..self.t {
            let dk = self.deltas[k];
            let a = &state.phi[k] - &state.phi[k + 1] - &self.psi * &state.xi[k] * dk;
            weighted += a * dk;
            delta_sq += dk * dk;
        }
        let precision =
            &self.xtx * (delta_sq * inv_p) + DMatrix::identity(p, p) / self.hyper.c_beta;
        let shift = self.x.tr_mul(&weighted) * inv_p;
        Gaussian::from_canonical(precision, shift)
    }

    /// Conditional of `xi[k]` for `k` in `0..T`.
    pub fn xi_conditional(&self, state: &ChainState, k: usize) -> Result<Gaussian> {
        assert!(k < self.t, "coefficient index {k} out of range");
        let j = self.j();
        let inv_p = 1.0 / state.sigma2_p;
        let dk = self.deltas[k];
        let m = self.transition_matrix(state);
        let lam = &state.sigma_eta_inv;

        let a = &state.phi[k] - &state.phi[k + 1] - &self.x * &state.beta * dk;
        let mut precision = &self.psitpsi * (dk * dk * inv_p);
        let mut shift = self.psi.tr_mul(&a) * (dk * inv_p);
        if k == 0 {
            precision += DMatrix::identity(j, j) / self.hyper.c_xi;
        } else {
            precision += lam;
            shift += lam * &m * &state.xi[k - 1];
        }
        if k + 1 < self.t {
            let mt_lam = m.tr_mul(lam);
            precision += &mt_lam * &m;
            shift += mt_lam * &state.xi[k + 1];
        }
        Gaussian::from_canonical(precision, shift)
    }

    pub fn transition_conditional(&self, state: &ChainState) -> Result<Gaussian> {
        self.transition
            .conditional(&state.xi, &state.sigma_eta_inv, &self.hyper)
    }

    /// Conditional of the innovation precision.
    pub fn sigma_eta_inv_conditional(&self, state: &ChainState) -> Result<Wishart> {
        let j = self.j();
        let m = self.transition_matrix(state);
        let mut scale_inv = DMatrix::identity(j, j) * (self.hyper.wishart_scale * (j - 1) as f64);
        for w in state.xi.windows(2) {
            let e = &w[1] - &m * &w[0];
            scale_inv += &e * e.transpose();
        }
        let scale = scale_inv
            .cholesky()
            .ok_or_else(|| Error::NonSpd("innovation scatter matrix".into()))?
            .inverse();
        let df = (self.t - 1) as f64 + (j - 1) as f64;
        Wishart::new(scale, df)
    }

    /// One systematic scan over every block.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        state.sigma2_d = self.sigma2_d_conditional(state)?.sample(rng);
        state.sigma2_p = self.sigma2_p_conditional(state)?.sample(rng);
        let speeds = self.speeds(state);
        for k in 1..=self.t {
            let draw = self.phi_conditional(state, &speeds, k)?.sample(rng);
            state.phi[k] = DVector::from_vec(draw);
        }
        if self.p() > 0 {
            state.beta = self.beta_conditional(state)?.sample(rng);
        }
        for k in 0..self.t {
            state.xi[k] = self.xi_conditional(state, k)?.sample(rng);
        }
        state.transition = self.transition_conditional(state)?.sample(rng);
        state.sigma_eta_inv = self.sigma_eta_inv_conditional(state)?.sample(rng);
        Ok(())
    }
}
