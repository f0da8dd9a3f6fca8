use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{ChainState, Model};
use super::transition::TransitionModel;
use super::Hyperparameters;
use crate::basis::{BasisMatrix, CovariateMatrix};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::series::ObservationSeries;

/// Everything needed to run one chain besides the data.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub transition: Arc<dyn TransitionModel>,
    pub basis: BasisMatrix,
    pub covariates: CovariateMatrix,
    pub hyper: Hyperparameters,
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    /// Observation indices whose latent field draws are retained, for
    /// predicting held-out times.
    pub keep_phi: Vec<usize>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.transition.check(self.basis.j())?;
        if self.n_burn >= self.n_iter {
            return Err(Error::InvalidParameter(format!(
                "burn-in ({}) must be shorter than the chain ({})",
                self.n_burn, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be positive".into()));
        }
        self.covariates
            .grid()
            .ensure_same(self.basis.grid(), "covariates vs basis")
    }

    pub fn n_kept(&self) -> usize {
        (self.n_iter - self.n_burn) / self.thin
    }
}

/// Retained draws of one named parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    /// Shape of a single draw; row-major when two-dimensional.
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Block {
    pub fn draw_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn draw(&self, l: usize) -> &[f64] {
        let m = self.draw_len();
        &self.values[l * m..(l + 1) * m]
    }

    /// Trace of one scalar coordinate across draws.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        let m = self.draw_len();
        self.values
            .iter()
            .skip(c)
            .step_by(m.max(1))
            .copied()
            .collect()
    }
}

/// Retained posterior draws.
///
/// Blocks: `sigma2_d`, `sigma2_p`, `beta` `[P]`, `xi` `[T, J]`, the
/// transition block (`gamma` `[J]` or `m_xi` `[J, J]` column-stacked),
/// `sigma_eta` `[J, J]`, `spectral_radius`, `phi_last` `[N]` and, when
/// requested, `phi_kept` `[K, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub grid: GridSpec,
    pub transition: String,
    /// 1-based iteration number of every retained draw.
    pub iterations: Vec<usize>,
    pub blocks: Vec<Block>,
    /// Spectral radius of the transition after every iteration, burn-in
    /// included.
    pub spectral_radius_trace: Vec<f64>,
    /// Observation indices stored in `phi_kept`, in order.
    pub kept_phi: Vec<usize>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks.iter().find(|b| b.name == name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no posterior block '{name}' (have {})",
                self.blocks
                    .iter()
                    .map(|b| b.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
    }

    /// Checks that every block holds exactly one draw per iteration.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for b in &self.blocks {
            if b.values.len() != b.draw_len() * self.len() {
                return Err(Error::Format(format!(
                    "block '{}' holds {} values for {} draws of shape {:?}",
                    b.name,
                    b.values.len(),
                    self.len(),
                    b.shape
                )));
            }
        }
        Ok(())
    }

    pub fn vector(&self, name: &str, l: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(self.block(name)?.draw(l)))
    }
}

struct Recorder {
    blocks: Vec<Block>,
}

impl Recorder {
    fn new(model: &Model, keep_phi: &[usize], capacity: usize) -> Self {
        let j = model.j();
        let t = model.t();
        let mut shapes = vec![
            ("sigma2_d", vec![1]),
            ("sigma2_p", vec![1]),
            ("beta", vec![model.p()]),
            ("xi", vec![t, j]),
            (
                model.transition().block(),
                model.transition().param_shape(j),
            ),
            ("sigma_eta", vec![j, j]),
            ("spectral_radius", vec![1]),
            ("phi_last", vec![model.n()]),
        ];
        if !keep_phi.is_empty() {
            shapes.push(("phi_kept", vec![keep_phi.len(), model.n()]));
        }
        let blocks = shapes
            .into_iter()
            .map(|(name, shape)| {
                let len: usize = shape.iter().product();
                Block {
                    name: name.to_string(),
                    shape,
                    values: Vec::with_capacity(len * capacity),
                }
            })
            .collect();
        Recorder { blocks }
    }

    fn push(&mut self, state: &ChainState, radius: f64, keep_phi: &[usize]) -> Result<()> {
        let j = state.sigma_eta_inv.nrows();
        let sigma_eta = state
            .sigma_eta_inv
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NonSpd("innovation precision draw".into()))?
            .inverse();
        let t = state.phi.len() - 1;
        for b in &mut self.blocks {
            match b.name.as_str() {
                "sigma2_d" => b.values.push(state.sigma2_d),
                "sigma2_p" => b.values.push(state.sigma2_p),
                "beta" => b.values.extend(state.beta.iter()),
                "xi" => state.xi.iter().for_each(|x| b.values.extend(x.iter())),
                "sigma_eta" => {
                    // Row-major; symmetric in any case.
                    for r in 0..j {
                        b.values.extend((0..j).map(|c| sigma_eta[(r, c)]));
                    }
                }
                "spectral_radius" => b.values.push(radius),
                "phi_last" => b.values.extend(state.phi[t].iter()),
                "phi_kept" => keep_phi
                    .iter()
                    .for_each(|&k| b.values.extend(state.phi[k + 1].iter())),
                _ => b.values.extend(state.transition.iter()),
            }
        }
        Ok(())
    }
}

/// Runs the Gibbs sampler and keeps every `thin`-th draw after burn-in.
pub fn run_chain(spec: &ModelSpec, data: &ObservationSeries) -> Result<PosteriorSamples> {
    run_chain_with_progress(spec, data, |_| {})
}

/// As [`run_chain`], calling `progress` with the 1-based iteration number
/// after each sweep.
pub fn run_chain_with_progress(
    spec: &ModelSpec,
    data: &ObservationSeries,
    mut progress: impl FnMut(usize),
) -> Result<PosteriorSamples> {
    spec.validate()?;
    let model = Model::new(
        data,
        &spec.basis,
        &spec.covariates,
        spec.hyper.clone(),
        spec.transition.clone(),
    )?;
    if let Some(&k) = spec.keep_phi.iter().find(|&&k| k >= model.t()) {
        return Err(Error::InvalidParameter(format!(
            "kept latent index {k} is out of range for {} observations",
            model.t()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut state = model.initial_state();
    let mut recorder = Recorder::new(&model, &spec.keep_phi, spec.n_kept());
    let mut iterations = Vec::with_capacity(spec.n_kept());
    let mut trace = Vec::with_capacity(spec.n_iter);
    let j = model.j();
    for it in 1..=spec.n_iter {
        model
            .sweep(&mut state, &mut rng)
            .map_err(|e| Error::Chain {
                iteration: it,
                source: Box::new(e),
            })?;
        let radius = spec.transition.spectral_radius(&state.transition, j);
        trace.push(radius);
        if it > spec.n_burn && (it - spec.n_burn).is_multiple_of(spec.thin) {
            recorder
                .push(&state, radius, &spec.keep_phi)
                .map_err(|e| Error::Chain {
                    iteration: it,
                    source: Box::new(e),
                })?;
            iterations.push(it);
        }
        progress(it);
    }
    Ok(PosteriorSamples {
        grid: *data.grid(),
        transition: spec.transition.name().to_string(),
        iterations,
        blocks: recorder.blocks,
        spectral_radius_trace: trace,
        kept_phi: spec.keep_phi.clone(),
    })
}
