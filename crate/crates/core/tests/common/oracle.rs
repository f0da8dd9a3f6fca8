//! Independent log joint density of the hierarchical model, written from the
//! model definition with explicit loops. Used to check every full
//! conditional through density ratios.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use firefront::basis::{BasisMatrix, CovariateMatrix};
use firefront::inference::{
    ChainState, Hyperparameters, Model, TransitionModel, TransitionRegistry,
};
use firefront::{GridSpec, ObservationSeries, ScalarField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub series: ObservationSeries,
    pub basis: BasisMatrix,
    pub covariates: CovariateMatrix,
    pub hyper: Hyperparameters,
    pub transition: Arc<dyn TransitionModel>,
    pub model: Model,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// 3x3 grid, J = 2, P = 2, four observations at uneven times. The second
/// and fourth observations are partially masked and the third is missing.
pub fn random_instance(rng: &mut ChaCha8Rng, variant: &str) -> Instance {
    let grid = GridSpec::new(3, 3, (0.0, 2.0), (0.0, 2.0)).unwrap();
    let n = grid.len();
    let mut t = 0.0;
    let times: Vec<f64> = (0..4)
        .map(|_| {
            let now = t;
            t += rng.random_range(0.5..2.5);
            now
        })
        .collect();
    let fields = (0..4)
        .map(|k| {
            let values: Vec<f64> = (0..n).map(|_| 2.0 * normal(rng)).collect();
            match k {
                0 => ScalarField::new(grid, values).unwrap(),
                2 => ScalarField::with_mask(grid, values, vec![false; n]).unwrap(),
                _ => {
                    let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
                    mask[0] = false;
                    mask[1] = true;
                    ScalarField::with_mask(grid, values, mask).unwrap()
                }
            }
        })
        .collect();
    let series = ObservationSeries::new(grid, times, fields).unwrap();
    let basis = BasisMatrix::exponential(&grid, 2, None).unwrap();
    let raw = (0..2)
        .map(|c| {
            let values = (0..n).map(|_| normal(rng)).collect();
            (format!("cov{c}"), ScalarField::new(grid, values).unwrap())
        })
        .collect();
    let covariates = CovariateMatrix::from_fields(&grid, raw).unwrap();
    let hyper = Hyperparameters {
        alpha_d: rng.random_range(0.1..3.0),
        beta_d: rng.random_range(0.1..3.0),
        alpha_p: rng.random_range(0.1..3.0),
        beta_p: rng.random_range(0.1..3.0),
        c_beta: rng.random_range(0.5..10.0),
        c_xi: rng.random_range(0.5..10.0),
        c_m: rng.random_range(0.5..10.0),
        c_gamma: rng.random_range(0.5..10.0),
        wishart_scale: rng.random_range(0.5..5.0),
    };
    let transition = TransitionRegistry::default().get(variant).unwrap();
    let model = Model::new(
        &series,
        &basis,
        &covariates,
        hyper.clone(),
        transition.clone(),
    )
    .unwrap();
    Instance {
        series,
        basis,
        covariates,
        hyper,
        transition,
        model,
    }
}

pub fn random_spd(rng: &mut ChaCha8Rng, j: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(j, j, |_, _| normal(rng));
    &a * a.transpose() + DMatrix::identity(j, j) * 0.5
}

pub fn random_state(rng: &mut ChaCha8Rng, inst: &Instance) -> ChainState {
    let n = inst.series.grid().len();
    let t = inst.series.len();
    let j = inst.basis.j();
    let mut phi = vec![DVector::from_column_slice(inst.series.fields()[0].values())];
    for _ in 0..t {
        phi.push(DVector::from_fn(n, |_, _| 2.0 * normal(rng)));
    }
    ChainState {
        phi,
        xi: (0..t)
            .map(|_| DVector::from_fn(j, |_, _| normal(rng)))
            .collect(),
        beta: DVector::from_fn(inst.covariates.p(), |_, _| normal(rng)),
        transition: DVector::from_fn(inst.transition.n_params(j), |_, _| 0.7 * normal(rng)),
        sigma_eta_inv: random_spd(rng, j),
        sigma2_d: rng.random_range(0.2..3.0),
        sigma2_p: rng.random_range(0.2..3.0),
    }
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

fn ln_inverse_gamma_kernel(x: f64, shape: f64, rate: f64) -> f64 {
    -(shape + 1.0) * x.ln() - rate / x
}

/// Transition matrix from its parameters, built without the crate's
/// strategy code.
pub fn transition_matrix(variant: &str, params: &DVector<f64>, j: usize) -> DMatrix<f64> {
    match variant {
        "full" => DMatrix::from_fn(j, j, |r, c| params[c * j + r]),
        _ => DMatrix::from_fn(j, j, |r, c| if r == c { params[r] } else { 0.0 }),
    }
}

/// Log joint density up to an additive constant that does not depend on
/// the state.
pub fn log_joint(inst: &Instance, s: &ChainState) -> f64 {
    let series = &inst.series;
    let n = series.grid().len();
    let t = series.len();
    let j = inst.basis.j();
    let h = &inst.hyper;
    let x = inst.covariates.columns();
    let psi = inst.basis.columns();
    let times = series.times();
    let mut total = 0.0;

    // Data: Z_k observes latent field k + 1 on its observed cells.
    for k in 0..t {
        let field = &series.fields()[k];
        for i in 0..n {
            if let Some(z) = field.get(i) {
                total += ln_normal(z, s.phi[k + 1][i], s.sigma2_d);
            }
        }
    }

    // Process: the step into the first latent field borrows the first gap.
    for k in 0..t {
        let dt = if k == 0 {
            times[1] - times[0]
        } else {
            times[k] - times[k - 1]
        };
        for i in 0..n {
            let mut v = 0.0;
            for p in 0..x.ncols() {
                v += x[(i, p)] * s.beta[p];
            }
            for c in 0..j {
                v += psi[(i, c)] * s.xi[k][c];
            }
            total += ln_normal(s.phi[k + 1][i], s.phi[k][i] - v * dt, s.sigma2_p);
        }
    }

    // Coefficient autoregression.
    let m = transition_matrix(inst.transition.name(), &s.transition, j);
    let lam = &s.sigma_eta_inv;
    let ln_det_lam = lam.determinant().ln();
    for k in 1..t {
        let e = &s.xi[k] - &m * &s.xi[k - 1];
        total += 0.5 * ln_det_lam - 0.5 * (e.transpose() * lam * &e)[0];
    }

    // Priors.
    total += ln_inverse_gamma_kernel(s.sigma2_d, h.alpha_d, h.beta_d);
    total += ln_inverse_gamma_kernel(s.sigma2_p, h.alpha_p, h.beta_p);
    total += s
        .beta
        .iter()
        .map(|b| ln_normal(*b, 0.0, h.c_beta))
        .sum::<f64>();
    total += s.xi[0]
        .iter()
        .map(|v| ln_normal(*v, 0.0, h.c_xi))
        .sum::<f64>();
    let c_trans = if inst.transition.name() == "full" {
        h.c_m
    } else {
        h.c_gamma
    };
    total += s
        .transition
        .iter()
        .map(|v| ln_normal(*v, 0.0, c_trans))
        .sum::<f64>();
    // Wishart kernel with scale (c (J - 1) I)^-1 and J - 1 degrees of freedom,
    // used formally.
    let df = (j - 1) as f64;
    let scale_inv = h.wishart_scale * (j - 1) as f64;
    total += 0.5 * (df - j as f64 - 1.0) * ln_det_lam - 0.5 * scale_inv * lam.trace();
    total
}

/// Blocks with a full conditional, for the given transition variant.
pub fn block_names(variant: &str) -> Vec<&'static str> {
    let trans = if variant == "full" { "m_xi" } else { "gamma" };
    vec![
        "sigma2_d",
        "sigma2_p",
        "phi_first",
        "phi_partial",
        "phi_missing",
        "phi_last",
        "beta",
        "xi_first",
        "xi_interior",
        "xi_last",
        trans,
        "sigma_eta_inv",
    ]
}

/// Draws two values `a`, `b` of one block and returns
/// `(ln p_cond(a) - ln p_cond(b), ln p_joint(a) - ln p_joint(b))`.
pub fn ratio_pair(
    inst: &Instance,
    base: &ChainState,
    block: &str,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let m = &inst.model;
    let mut sa = base.clone();
    let mut sb = base.clone();
    let cond = match block {
        "sigma2_d" | "sigma2_p" => {
            let c = if block == "sigma2_d" {
                m.sigma2_d_conditional(base).unwrap()
            } else {
                m.sigma2_p_conditional(base).unwrap()
            };
            let (a, b) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            if block == "sigma2_d" {
                sa.sigma2_d = a;
                sb.sigma2_d = b;
            } else {
                sa.sigma2_p = a;
                sb.sigma2_p = b;
            }
            c.ln_pdf(a) - c.ln_pdf(b)
        }
        "phi_first" | "phi_partial" | "phi_missing" | "phi_last" => {
            let k = match block {
                "phi_first" => 1,
                "phi_partial" => 2,
                "phi_missing" => 3,
                _ => 4,
            };
            let speeds = m.speeds(base);
            let c = m.phi_conditional(base, &speeds, k).unwrap();
            let n = base.phi[k].len();
            let a: Vec<f64> = (0..n).map(|_| 2.0 * normal(rng)).collect();
            let b: Vec<f64> = (0..n).map(|_| 2.0 * normal(rng)).collect();
            let d = c.ln_pdf(&a) - c.ln_pdf(&b);
            sa.phi[k] = DVector::from_vec(a);
            sb.phi[k] = DVector::from_vec(b);
            d
        }
        "beta" => {
            let c = m.beta_conditional(base).unwrap();
            let p = base.beta.len();
            let a = DVector::from_fn(p, |_, _| normal(rng));
            let b = DVector::from_fn(p, |_, _| normal(rng));
            let d = c.ln_pdf(&a) - c.ln_pdf(&b);
            sa.beta = a;
            sb.beta = b;
            d
        }
        "xi_first" | "xi_interior" | "xi_last" => {
            let k = match block {
                "xi_first" => 0,
                "xi_interior" => 1,
                _ => base.xi.len() - 1,
            };
            let c = m.xi_conditional(base, k).unwrap();
            let j = base.xi[k].len();
            let a = DVector::from_fn(j, |_, _| normal(rng));
            let b = DVector::from_fn(j, |_, _| normal(rng));
            let d = c.ln_pdf(&a) - c.ln_pdf(&b);
            sa.xi[k] = a;
            sb.xi[k] = b;
            d
        }
        "m_xi" | "gamma" => {
            let c = m.transition_conditional(base).unwrap();
            let q = base.transition.len();
            let a = DVector::from_fn(q, |_, _| 0.7 * normal(rng));
            let b = DVector::from_fn(q, |_, _| 0.7 * normal(rng));
            let d = c.ln_pdf(&a) - c.ln_pdf(&b);
            sa.transition = a;
            sb.transition = b;
            d
        }
        "sigma_eta_inv" => {
            let c = m.sigma_eta_inv_conditional(base).unwrap();
            let j = base.sigma_eta_inv.nrows();
            let a = random_spd(rng, j);
            let b = random_spd(rng, j);
            let d = c.ln_pdf(&a) - c.ln_pdf(&b);
            sa.sigma_eta_inv = a;
            sb.sigma_eta_inv = b;
            d
        }
        other => panic!("unknown block {other}"),
    };
    (cond, log_joint(inst, &sa) - log_joint(inst, &sb))
}

/// Worst relative discrepancy over `trials` random pairs, relative to the
/// joint difference and floored at 1.
pub fn worst_ratio_error(variant: &str, block: &str, trials: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let inst = random_instance(&mut rng, variant);
        let state = random_state(&mut rng, &inst);
        let (c, j) = ratio_pair(&inst, &state, block, &mut rng);
        worst = worst.max((c - j).abs() / j.abs().max(1.0));
    }
    worst
}

/// Gaussian blocks and their dimension.
pub fn gaussian_blocks(inst: &Instance) -> Vec<(&'static str, usize)> {
    let n = inst.series.grid().len();
    let j = inst.basis.j();
    let trans = if inst.transition.name() == "full" {
        "m_xi"
    } else {
        "gamma"
    };
    vec![
        ("phi_first", n),
        ("phi_partial", n),
        ("phi_missing", n),
        ("phi_last", n),
        ("beta", inst.covariates.p()),
        ("xi_first", j),
        ("xi_interior", j),
        ("xi_last", j),
        (trans, inst.transition.n_params(j)),
    ]
}

fn set_block(state: &mut ChainState, block: &str, value: &DVector<f64>) {
    let t = state.xi.len();
    match block {
        "phi_first" => state.phi[1] = value.clone(),
        "phi_partial" => state.phi[2] = value.clone(),
        "phi_missing" => state.phi[3] = value.clone(),
        "phi_last" => state.phi[t] = value.clone(),
        "beta" => state.beta = value.clone(),
        "xi_first" => state.xi[0] = value.clone(),
        "xi_interior" => state.xi[1] = value.clone(),
        "xi_last" => state.xi[t - 1] = value.clone(),
        _ => state.transition = value.clone(),
    }
}

/// Precision and mean of a Gaussian block read off the oracle joint, which
/// is exactly quadratic in the block: `-D` is its Hessian and `D^-1 g` the
/// stationary point, with `g` the gradient at zero. Second differences of a
/// quadratic are exact for any step, so unit steps are used.
pub fn brute_force_moments(
    inst: &Instance,
    base: &ChainState,
    block: &str,
    dim: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let f = |v: &DVector<f64>| {
        let mut s = base.clone();
        set_block(&mut s, block, v);
        log_joint(inst, &s)
    };
    let e = |i: usize| {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        v
    };
    let zero = DVector::zeros(dim);
    let f0 = f(&zero);
    let fi: Vec<f64> = (0..dim).map(|i| f(&e(i))).collect();
    let mut d = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for k in i..dim {
            let fik = f(&(e(i) + e(k)));
            let v = -(fik - fi[i] - fi[k] + f0);
            d[(i, k)] = v;
            d[(k, i)] = v;
        }
    }
    let g = DVector::from_fn(dim, |i, _| 0.5 * (fi[i] - f(&(-e(i)))));
    let mean = d
        .clone()
        .lu()
        .solve(&g)
        .expect("oracle precision is singular");
    (d, mean)
}

/// Precision and mean reported by the crate's conditional for a block.
pub fn conditional_moments(
    inst: &Instance,
    base: &ChainState,
    block: &str,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = &inst.model;
    let t = base.xi.len();
    let phi_k = match block {
        "phi_first" => Some(1),
        "phi_partial" => Some(2),
        "phi_missing" => Some(3),
        "phi_last" => Some(t),
        _ => None,
    };
    if let Some(k) = phi_k {
        let c = m.phi_conditional(base, &m.speeds(base), k).unwrap();
        return (
            DMatrix::from_diagonal(&DVector::from_vec(c.precision.clone())),
            DVector::from_vec(c.mean.clone()),
        );
    }
    let c = match block {
        "beta" => m.beta_conditional(base),
        "xi_first" => m.xi_conditional(base, 0),
        "xi_interior" => m.xi_conditional(base, 1),
        "xi_last" => m.xi_conditional(base, t - 1),
        _ => m.transition_conditional(base),
    }
    .unwrap();
    (c.precision(), c.mean().clone())
}
