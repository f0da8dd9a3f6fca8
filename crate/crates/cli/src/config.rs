//! The run configuration document.
//!
//! One TOML or JSON file holds a section per command. Unknown keys are
//! rejected and `schema_version` must match [`SCHEMA_VERSION`].

use std::path::{Path, PathBuf};

use firefront::inference::Hyperparameters;
use firefront::levelset::{EvolutionConfig, MergingCircles, VShape};
use firefront::GridSpec;
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Default seed for every command that draws random numbers.
    pub seed: Option<u64>,
    pub rasterize: Option<RasterizeConfig>,
    pub covariates: Option<CovariatesConfig>,
    pub simulate: Option<SimulateConfig>,
    pub fit: Option<FitConfig>,
    pub forecast: Option<ForecastConfig>,
    pub evaluate: Option<EvaluateConfig>,
    pub report: Option<ReportConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryEntry {
    pub file: PathBuf,
    /// ISO-8601; overrides the time stored in the file.
    pub time: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterizeConfig {
    pub grid: GridSpec,
    pub boundaries: Vec<BoundaryEntry>,
    /// Series directory.
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterEntry {
    pub name: String,
    /// Field file, `.json` or `.csv`.
    pub file: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariatesConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub rasters: Vec<RasterEntry>,
    /// Elevation raster; adds `slope` and `aspect` columns first.
    pub dem: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: String,
    pub grid: Option<GridSpec>,
    pub evolution: Option<EvolutionConfig>,
    /// Geometry override for the merging-circles scenario.
    pub merging_circles: Option<MergingCircles>,
    /// Geometry override for the vshape scenario.
    pub vshape: Option<VShape>,
    #[serde(default)]
    pub noise_sd: f64,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

fn default_transition() -> String {
    "diagonal".into()
}
fn default_n_iter() -> usize {
    30_000
}
fn default_n_burn() -> usize {
    20_000
}
fn one() -> usize {
    1
}
fn default_chunk() -> usize {
    firefront::io::DEFAULT_CHUNK_DRAWS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub series: PathBuf,
    pub covariates: Option<PathBuf>,
    /// Precomputed basis; otherwise an exponential-correlation basis is built.
    pub basis: Option<PathBuf>,
    #[serde(default = "default_transition")]
    pub transition: String,
    pub j: usize,
    /// Correlation range; defaults to a third of the larger grid extent.
    pub range: Option<f64>,
    #[serde(default)]
    pub hyper: Hyperparameters,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_n_burn")]
    pub n_burn: usize,
    #[serde(default = "one")]
    pub thin: usize,
    pub seed: Option<u64>,
    /// Fit only the first this many observations.
    pub train_first: Option<usize>,
    /// Observation indices masked out of the fit; their latent fields are
    /// retained for interior prediction.
    #[serde(default)]
    pub hold_out: Vec<usize>,
    /// Independent chains with seeds `seed, seed + 1, ...`.
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default = "default_chunk")]
    pub chunk_draws: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum TruthSpec {
    Field { field: PathBuf },
    Series { series: PathBuf, index: usize },
}

fn default_level() -> f64 {
    0.95
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastConfig {
    /// Output directory of `fit`.
    pub fit: PathBuf,
    /// Step lengths in hours past the last training observation. Defaults
    /// to one step of the last training interval.
    #[serde(default)]
    pub steps: Vec<f64>,
    /// Predict this held-out observation instead of forecasting ahead.
    pub interior: Option<usize>,
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    pub seed: Option<u64>,
    /// Write every data-scale draw for later `evaluate` runs.
    #[serde(default)]
    pub save_draws: bool,
    #[serde(default = "yes")]
    pub svg: bool,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// A draw stack written by `forecast` with `save_draws`.
    pub draws: PathBuf,
    pub truth: TruthSpec,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Output directory of `fit`.
    pub fit: PathBuf,
    /// Output directory of `forecast`.
    pub forecast: Option<PathBuf>,
    /// Markdown file; the table is always printed.
    pub out: Option<PathBuf>,
}

/// A parsed configuration plus what is needed to resolve its paths.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    pub config_dir: PathBuf,
    pub out_dir: Option<PathBuf>,
}

pub fn load(path: &Path, out_dir: Option<PathBuf>) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::config(format!("{} is not UTF-8", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config: RunConfig = if is_json {
        serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    };
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            config.schema_version
        )));
    }
    let config_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded {
        config,
        bytes,
        config_dir,
        out_dir,
    })
}

impl Loaded {
    /// Relative outputs go under `--out-dir` when given, else next to the
    /// config.
    pub fn output(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.out_dir.as_deref().unwrap_or(&self.config_dir).join(p)
    }

    /// Relative inputs are looked up under `--out-dir` first, so artifacts of
    /// earlier commands are found, then next to the config.
    pub fn input(&self, p: &Path) -> Result<PathBuf, CliError> {
        if p.is_absolute() {
            return exists(p.to_path_buf());
        }
        if let Some(out) = &self.out_dir {
            let candidate = out.join(p);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
        exists(self.config_dir.join(p))
    }
}

fn exists(p: PathBuf) -> Result<PathBuf, CliError> {
    if p.exists() {
        Ok(p)
    } else {
        Err(CliError::data(format!("input not found: {}", p.display())))
    }
}

pub fn section<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::config(format!("the config has no [{name}] section")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn unknown_keys_and_versions_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.toml", "schema_version = 1\nbogus = 3\n");
        assert_eq!(load(&p, None).unwrap_err().code, 2);
        let p = write(dir.path(), "b.toml", "schema_version = 9\n");
        assert!(load(&p, None)
            .unwrap_err()
            .message
            .contains("schema_version"));
        let p = write(
            dir.path(),
            "c.toml",
            "schema_version = 1\n[fit]\nseries = 's'\nj = 6\nout = 'o'\nhyper = { alpha_d = 1.0, typo = 2.0 }\n",
        );
        assert_eq!(load(&p, None).unwrap_err().code, 2);
    }

    #[test]
    fn defaults_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.json",
            r#"{"schema_version": 1, "fit": {"series": "s", "j": 6, "out": "o"}}"#,
        );
        let l = load(&p, None).unwrap();
        let fit = section(&l.config.fit, "fit").unwrap();
        assert_eq!((fit.n_iter, fit.n_burn, fit.thin), (30_000, 20_000, 1));
        assert_eq!(fit.transition, "diagonal");
        assert_eq!(fit.hyper, Hyperparameters::default());
        assert!(section(&l.config.forecast, "forecast").is_err());
    }

    #[test]
    fn truth_spec_forms() {
        let t: TruthSpec = toml::from_str("field = 'a.json'").unwrap();
        assert!(matches!(t, TruthSpec::Field { .. }));
        let t: TruthSpec = toml::from_str("series = 's'\nindex = 26").unwrap();
        assert!(matches!(t, TruthSpec::Series { index: 26, .. }));
    }
}
