//! The hierarchical model and its Gibbs sampler.
//!
//! Observations `Z_k` are noisy views of latent level-set fields `phi_k`.
//! Each latent field is the previous one moved along its normal by the speed
//! `X beta + Psi xi_k` over the interval length, plus process noise. The
//! coefficients `xi_k` follow a vector autoregression whose transition is
//! either a full matrix or a diagonal one, chosen through
//! [`TransitionRegistry`]. All priors are conjugate, so each block is drawn
//! exactly from its full conditional.

mod chain;
mod diagnostics;
mod dist;
mod forecast;
mod model;
mod transition;

pub use chain::{run_chain, run_chain_with_progress, Block, ModelSpec, PosteriorSamples};
pub use diagnostics::{
    batch_means_ess, effective_sample_size, summarize_radius, Ess, RadiusSummary, MIN_ESS_DRAWS,
};
pub use dist::{sample_mvn, DiagonalGaussian, Gaussian, InverseGamma, MvnForm, Wishart};
pub use forecast::{forecast, interior_prediction, ForecastDraws, PredictiveState};
pub use model::{ChainState, Model};
pub use transition::{DiagonalTransition, FullTransition, TransitionModel, TransitionRegistry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior constants. Variances use inverse-gamma `(shape, rate)` pairs; the
/// innovation precision has a Wishart prior with scale
/// `(wishart_scale * (J - 1) * I)^-1` and `J - 1` degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparameters {
    pub alpha_d: f64,
    pub beta_d: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    pub c_beta: f64,
    pub c_xi: f64,
    pub c_m: f64,
    pub c_gamma: f64,
    pub wishart_scale: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha_d: 0.1,
            beta_d: 0.1,
            alpha_p: 0.1,
            beta_p: 0.1,
            c_beta: 1000.0,
            c_xi: 1000.0,
            c_m: 1000.0,
            c_gamma: 1000.0,
            wishart_scale: 1000.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha_d", self.alpha_d),
            ("beta_d", self.beta_d),
            ("alpha_p", self.alpha_p),
            ("beta_p", self.beta_p),
            ("c_beta", self.c_beta),
            ("c_xi", self.c_xi),
            ("c_m", self.c_m),
            ("c_gamma", self.c_gamma),
            ("wishart_scale", self.wishart_scale),
        ];
        match named.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            Some((name, v)) => Err(Error::InvalidParameter(format!(
                "hyperparameter {name} must be positive, got {v}"
            ))),
            None => Ok(()),
        }
    }
}
