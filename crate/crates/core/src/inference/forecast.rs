use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::chain::{ModelSpec, PosteriorSamples};
use super::dist::{sample_mvn, MvnForm};
use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Posterior predictive draws indexed `[step][draw]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDraws {
    /// Latent level-set fields.
    pub latent: Vec<Vec<ScalarField>>,
    /// Latent fields plus observation noise.
    pub data: Vec<Vec<ScalarField>>,
}

/// Parameters of one retained draw needed to step the model forward.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveState {
    pub phi: DVector<f64>,
    pub xi: DVector<f64>,
    pub beta: DVector<f64>,
    pub transition: DMatrix<f64>,
    pub sigma_eta: DMatrix<f64>,
    pub sigma2_p: f64,
    pub sigma2_d: f64,
}

impl PredictiveState {
    pub fn from_draw(spec: &ModelSpec, samples: &PosteriorSamples, l: usize) -> Result<Self> {
        let j = spec.basis.j();
        let xi_block = samples.block("xi")?;
        let xi_draw = xi_block.draw(l);
        let t = xi_block.shape[0];
        Ok(PredictiveState {
            phi: samples.vector("phi_last", l)?,
            xi: DVector::from_column_slice(&xi_draw[(t - 1) * j..t * j]),
            beta: samples.vector("beta", l)?,
            transition: spec
                .transition
                .matrix(&samples.vector(spec.transition.block(), l)?, j),
            sigma_eta: DMatrix::from_row_slice(j, j, samples.block("sigma_eta")?.draw(l)),
            sigma2_p: samples.block("sigma2_p")?.draw(l)[0],
            sigma2_d: samples.block("sigma2_d")?.draw(l)[0],
        })
    }

    /// Advances by `dt`, returning the new latent field and its noisy
    /// observation. Zero variances switch the matching noise off.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        spec: &ModelSpec,
        dt: f64,
        rng: &mut R,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let j = self.xi.len();
        let mut xi = &self.transition * &self.xi;
        if self.sigma_eta.iter().any(|&v| v != 0.0) {
            xi += sample_mvn(
                &DVector::zeros(j),
                &self.sigma_eta,
                MvnForm::Covariance,
                rng,
            )?;
        }
        let v = spec.covariates.columns() * &self.beta + spec.basis.columns() * &xi;
        let sd_p = self.sigma2_p.sqrt();
        let sd_d = self.sigma2_d.sqrt();
        let phi = DVector::from_fn(self.phi.len(), |i, _| {
            let noise = if sd_p > 0.0 {
                sd_p * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            self.phi[i] - v[i] * dt + noise
        });
        let z = phi.map(|p| {
            if sd_d > 0.0 {
                p + sd_d * rng.sample::<f64, _>(StandardNormal)
            } else {
                p
            }
        });
        self.xi = xi;
        self.phi = phi.clone();
        Ok((phi, z))
    }
}

fn check_compatible(spec: &ModelSpec, samples: &PosteriorSamples) -> Result<()> {
    samples.validate()?;
    if samples.is_empty() {
        return Err(Error::TooFewDraws { need: 1, got: 0 });
    }
    if spec.transition.name() != samples.transition {
        return Err(Error::InvalidParameter(format!(
            "samples come from the '{}' transition, the model uses '{}'",
            samples.transition,
            spec.transition.name()
        )));
    }
    spec.basis
        .grid()
        .ensure_same(&samples.grid, "basis vs samples")
}

/// Posterior predictive forecast over consecutive steps of the given lengths
/// past the last observation.
pub fn forecast(
    spec: &ModelSpec,
    samples: &PosteriorSamples,
    steps: &[f64],
    seed: u64,
) -> Result<ForecastDraws> {
    check_compatible(spec, samples)?;
    if steps.is_empty() || steps.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "forecast steps must be positive, got {steps:?}"
        )));
    }
    let grid = samples.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut latent = vec![Vec::with_capacity(samples.len()); steps.len()];
    let mut data = vec![Vec::with_capacity(samples.len()); steps.len()];
    for l in 0..samples.len() {
        let mut state = PredictiveState::from_draw(spec, samples, l)?;
        for (h, &dt) in steps.iter().enumerate() {
            let (phi, z) = state.step(spec, dt, &mut rng)?;
            latent[h].push(ScalarField::new(grid, phi.data.into())?);
            data[h].push(ScalarField::new(grid, z.data.into())?);
        }
    }
    Ok(ForecastDraws { latent, data })
}

/// Data-scale predictive draws at a held-out observation whose latent
/// field was retained during the fit.
pub fn interior_prediction(
    samples: &PosteriorSamples,
    observation: usize,
    seed: u64,
) -> Result<Vec<ScalarField>> {
    samples.validate()?;
    let slot = samples
        .kept_phi
        .iter()
        .position(|&k| k == observation)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "latent field {observation} was not retained (kept: {:?})",
                samples.kept_phi
            ))
        })?;
    let n = samples.grid.len();
    let kept = samples.block("phi_kept")?;
    let sigma2_d = samples.block("sigma2_d")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples.len())
        .map(|l| {
            let phi = &kept.draw(l)[slot * n..(slot + 1) * n];
            let sd = sigma2_d.draw(l)[0].sqrt();
            let values = phi
                .iter()
                .map(|p| p + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            ScalarField::new(samples.grid, values)
        })
        .collect()
}
