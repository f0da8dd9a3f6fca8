use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluation::quantile_sorted;
use crate::inference::{
    batch_means_ess, summarize_radius, PosteriorSamples, RadiusSummary, MIN_ESS_DRAWS,
};

/// Posterior mean, standard deviation and 95% equal-tailed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn interval_summary(name: &str, draws: &[f64]) -> IntervalSummary {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = if draws.len() > 1 {
        (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    IntervalSummary {
        name: name.to_string(),
        mean,
        sd,
        lower: quantile_sorted(&sorted, 0.025),
        upper: quantile_sorted(&sorted, 0.975),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssEntry {
    pub parameter: String,
    pub ess: f64,
    pub degenerate: bool,
}

/// What is needed to rerun a command and get the same artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproducibility {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    /// Wall-clock time of the run; the only field that differs between
    /// otherwise identical runs.
    pub created: String,
}

/// Summary of one fit in the layout of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub transition: String,
    pub draws: usize,
    pub coefficients: Vec<IntervalSummary>,
    pub variances: Vec<IntervalSummary>,
    pub transition_parameters: Vec<IntervalSummary>,
    /// Over retained draws.
    pub spectral_radius: Option<RadiusSummary>,
    /// Over every iteration, burn-in included.
    pub spectral_radius_all: Option<RadiusSummary>,
    /// Empty when fewer than the minimum number of draws were kept.
    pub ess: Vec<EssEntry>,
    pub training_times: Vec<f64>,
    pub held_out: Vec<usize>,
    pub held_out_times: Vec<f64>,
    pub reproducibility: Reproducibility,
}

impl FitReport {
    pub fn from_samples(
        samples: &PosteriorSamples,
        covariate_names: &[String],
        transition_block: &str,
        training_times: Vec<f64>,
        held_out: Vec<usize>,
        reproducibility: Reproducibility,
    ) -> Result<Self> {
        samples.validate()?;
        let beta = samples.block("beta")?;
        let coefficients = (0..beta.draw_len())
            .map(|c| {
                let name = covariate_names
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| format!("beta[{c}]"));
                interval_summary(&name, &beta.coordinate(c))
            })
            .collect();
        let variances = ["sigma2_d", "sigma2_p"]
            .iter()
            .map(|&n| Ok(interval_summary(n, &samples.block(n)?.coordinate(0))))
            .collect::<Result<Vec<_>>>()?;
        let trans = samples.block(transition_block)?;
        let transition_parameters = (0..trans.draw_len())
            .map(|c| interval_summary(&format!("{transition_block}[{c}]"), &trans.coordinate(c)))
            .collect();
        let mut ess = Vec::new();
        if samples.len() >= MIN_ESS_DRAWS {
            for (block, label) in [
                ("beta", "beta"),
                ("sigma2_d", "sigma2_d"),
                ("sigma2_p", "sigma2_p"),
                (transition_block, transition_block),
            ] {
                let b = samples.block(block)?;
                for c in 0..b.draw_len() {
                    let e = batch_means_ess(&b.coordinate(c))?;
                    let parameter = match (block, covariate_names.get(c)) {
                        ("beta", Some(n)) => n.clone(),
                        _ if b.draw_len() == 1 => label.to_string(),
                        _ => format!("{label}[{c}]"),
                    };
                    ess.push(EssEntry {
                        parameter,
                        ess: e.value,
                        degenerate: e.degenerate,
                    });
                }
            }
        }
        let held_out_times = held_out
            .iter()
            .filter_map(|&k| training_times.get(k).copied())
            .collect();
        Ok(FitReport {
            transition: samples.transition.clone(),
            draws: samples.len(),
            coefficients,
            variances,
            transition_parameters,
            spectral_radius: summarize_radius(&samples.block("spectral_radius")?.coordinate(0)),
            spectral_radius_all: summarize_radius(&samples.spectral_radius_trace),
            ess,
            training_times,
            held_out,
            held_out_times,
            reproducibility,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_of_a_uniform_grid() {
        let draws: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let s = interval_summary("u", &draws);
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.lower - 0.025).abs() < 1e-12 && (s.upper - 0.975).abs() < 1e-12);
    }
}
