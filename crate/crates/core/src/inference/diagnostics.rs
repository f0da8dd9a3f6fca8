use serde::{Deserialize, Serialize};

use super::chain::PosteriorSamples;
use crate::error::{Error, Result};

/// Minimum chain length accepted by [`batch_means_ess`].
pub const MIN_ESS_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ess {
    pub value: f64,
    /// Set when the chain never moved; `value` is then 0.
    pub degenerate: bool,
}

/// Batch-means effective sample size with batch size `floor(sqrt(L))`.
pub fn batch_means_ess(chain: &[f64]) -> Result<Ess> {
    let l = chain.len();
    if l < MIN_ESS_DRAWS {
        return Err(Error::TooFewDraws {
            need: MIN_ESS_DRAWS,
            got: l,
        });
    }
    let mean = chain.iter().sum::<f64>() / l as f64;
    let var = chain.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (l - 1) as f64;
    if var == 0.0 || chain.iter().all(|&x| x == chain[0]) {
        return Ok(Ess {
            value: 0.0,
            degenerate: true,
        });
    }
    let b = (l as f64).sqrt().floor() as usize;
    let a = l / b;
    let used = &chain[..a * b];
    let grand = used.iter().sum::<f64>() / used.len() as f64;
    let batch_var = used
        .chunks(b)
        .map(|c| (c.iter().sum::<f64>() / b as f64 - grand).powi(2))
        .sum::<f64>()
        * b as f64
        / (a - 1) as f64;
    Ok(Ess {
        value: l as f64 * var / batch_var,
        degenerate: false,
    })
}

/// ESS of every scalar coordinate of a block.
pub fn effective_sample_size(samples: &PosteriorSamples, block: &str) -> Result<Vec<Ess>> {
    let b = samples.block(block)?;
    (0..b.draw_len())
        .map(|c| batch_means_ess(&b.coordinate(c)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSummary {
    pub mean: f64,
    pub max: f64,
    /// Share of iterations with a transition outside the unit circle.
    pub fraction_above_one: f64,
}

pub fn summarize_radius(trace: &[f64]) -> Option<RadiusSummary> {
    if trace.is_empty() {
        return None;
    }
    let n = trace.len() as f64;
    Some(RadiusSummary {
        mean: trace.iter().sum::<f64>() / n,
        max: trace.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fraction_above_one: trace.iter().filter(|&&r| r > 1.0).count() as f64 / n,
    })
}
