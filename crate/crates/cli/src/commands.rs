use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use firefront::basis::{BasisMatrix, CovariateMatrix};
use firefront::evaluation::{
    boundary_coverage, credible_band, mean_threat_score, render_svg, CredibleBand, Layer,
    ScoreReport,
};
use firefront::grid::{
    bilinear_resample, extract_zero_contour, signed_distance_field, slope_aspect,
};
use firefront::inference::{
    forecast, interior_prediction, run_chain_with_progress, Hyperparameters, ModelSpec,
    PosteriorSamples, TransitionRegistry,
};
use firefront::io::{
    read_basis, read_boundary, read_covariates, read_field, read_field_csv, read_polygon_file,
    read_samples, read_series, write_basis, write_covariates, write_field, write_report,
    write_samples, write_series, ColumnProvenance, FitReport, Reproducibility,
};
use firefront::levelset::{add_observation_noise, Scenario, ScenarioRegistry};
use firefront::{GridSpec, ObservationSeries, ScalarField};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{section, Loaded, TruthSpec};
use crate::error::CliError;

type CliResult<T> = Result<T, CliError>;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub loaded: Loaded,
    pub seed_override: Option<u64>,
    pub threads: usize,
}

impl Context {
    fn seed(&self, section_seed: Option<u64>) -> u64 {
        self.seed_override
            .or(section_seed)
            .or(self.loaded.config.seed)
            .unwrap_or(0)
    }

    fn reproducibility(&self, seed: u64) -> Reproducibility {
        let digest = Sha256::digest(&self.loaded.bytes);
        Reproducibility {
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }

    fn write_record(&self, dir: &Path, command: &str, seed: u64) -> CliResult<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            command: &'a str,
            #[serde(flatten)]
            reproducibility: Reproducibility,
        }
        let record = Record {
            command,
            reproducibility: self.reproducibility(seed),
        };
        Ok(write_report(
            &dir.join(format!("run_{command}.json")),
            &record,
        )?)
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    p.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Parses an ISO-8601 instant; a missing offset means UTC.
pub fn parse_time(text: &str) -> CliResult<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
        .map(|t| t.and_utc())
        .ok_or_else(|| CliError::data(format!("cannot parse time '{text}' as ISO-8601")))
}

fn read_any_field(path: &Path) -> CliResult<ScalarField> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv {
        read_field_csv(path)?
    } else {
        read_field(path)?
    })
}

pub fn rasterize(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.loaded.config.rasterize, "rasterize")?;
    cfg.grid.validate()?;
    if cfg.boundaries.len() < 3 {
        return Err(CliError::data(format!(
            "need at least 3 boundary files, got {}",
            cfg.boundaries.len()
        )));
    }
    let mut stamped = Vec::with_capacity(cfg.boundaries.len());
    for entry in &cfg.boundaries {
        let path = ctx.loaded.input(&entry.file)?;
        let file = read_polygon_file(&path)?;
        let text = entry.time.clone().or(file.time).ok_or_else(|| {
            CliError::data(format!(
                "{}: no time in the file or the config",
                path.display()
            ))
        })?;
        stamped.push((path, parse_time(&text)?));
    }
    let origin = stamped[0].1;
    let mut times = Vec::with_capacity(stamped.len());
    let mut fields = Vec::with_capacity(stamped.len());
    for (path, t) in &stamped {
        let hours = (*t - origin).num_milliseconds() as f64 / 3.6e6;
        let boundary = read_boundary(path, hours)?;
        fields.push(
            signed_distance_field(&boundary, &cfg.grid)
                .map_err(|e| CliError::from(e.in_file(path)))?,
        );
        times.push(hours);
    }
    let series = ObservationSeries::new(cfg.grid, times, fields)?;
    let out = ctx.loaded.output(&cfg.out);
    write_series(
        &out,
        &series,
        Some(origin.to_rfc3339_opts(SecondsFormat::Secs, true)),
    )?;
    info!("wrote {} fields to {}", series.len(), out.display());
    ctx.write_record(&out, "rasterize", 0)
}

pub fn covariates(ctx: &Context) -> CliResult<()> {
    let cfg = section(&ctx.loaded.config.covariates, "covariates")?;
    cfg.grid.validate()?;
    let mut named = Vec::new();
    let mut provenance = Vec::new();
    let mut add = |name: &str, source: &Path, steps: &[&str], field: ScalarField| {
        let observed: Vec<f64> = field.observed().map(|(_, v)| v).collect();
        let n = observed.len() as f64;
        let mean = observed.iter().sum::<f64>() / n;
        let sd = (observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        provenance.push(ColumnProvenance {
            name: name.to_string(),
            source: source.display().to_string(),
            steps: steps.iter().map(|s| s.to_string()).collect(),
            raw_mean: mean,
            raw_sd: sd,
            missing_cells: field.grid().len() - observed.len(),
        });
        named.push((name.to_string(), field));
    };
    if let Some(dem) = &cfg.dem {
        let path = ctx.loaded.input(dem)?;
        let raw = read_any_field(&path)?;
        let resampled =
            bilinear_resample(&raw, &cfg.grid).map_err(|e| CliError::from(e.in_file(&path)))?;
        let (slope, aspect) =
            slope_aspect(&resampled).map_err(|e| CliError::from(e.in_file(&path)))?;
        add("slope", &path, &["bilinear", "slope", "standardize"], slope);
        add(
            "aspect",
            &path,
            &["bilinear", "aspect", "standardize"],
            aspect,
        );
    }
    for r in &cfg.rasters {
        let path = ctx.loaded.input(&r.file)?;
        let raw = read_any_field(&path)?;
        let resampled =
            bilinear_resample(&raw, &cfg.grid).map_err(|e| CliError::from(e.in_file(&path)))?;
        add(
            &r.name,
            &path,
            &["bilinear", "standardize", "missing_to_zero"],
            resampled,
        );
    }
    if named.is_empty() {
        return Err(CliError::config("no rasters and no DEM given"));
    }
    let x = CovariateMatrix::from_fields(&cfg.grid, named)?;
    let out = ctx.loaded.output(&cfg.out);
    write_covariates(&out, &x, &provenance)?;
    info!(
        "wrote {} covariates ({}) to {}",
        x.p(),
        x.names().join(", "),
        out.display()
    );
    ctx.write_record(&parent_dir(&out), "covariates", 0)
}

pub fn simulate(ctx: &Context, preset: Option<&str>) -> CliResult<ObservationSeries> {
    let cfg = section(&ctx.loaded.config.simulate, "simulate")?;
    let mut registry = ScenarioRegistry::default();
    if let Some(c) = &cfg.merging_circles {
        registry.register(Box::new(c.clone()));
    }
    if let Some(v) = &cfg.vshape {
        registry.register(Box::new(v.clone()));
    }
    let name = preset.unwrap_or(&cfg.scenario);
    let scenario: &dyn Scenario = registry.get(name)?;
    let grid = cfg.grid.unwrap_or_else(|| scenario.default_grid());
    let evolution = cfg
        .evolution
        .clone()
        .unwrap_or_else(|| scenario.default_config());
    let seed = ctx.seed(cfg.seed);
    let series = scenario.generate(&grid, &evolution)?;
    let series = add_observation_noise(&series, cfg.noise_sd, seed)?;
    let out = ctx.loaded.output(&cfg.out);
    write_series(&out, &series, None)?;
    info!(
        "simulated {} observations of '{name}' into {}",
        series.len(),
        out.display()
    );
    ctx.write_record(&out, "simulate", seed)?;
    Ok(series)
}

/// Model description stored next to a fit's samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub transition: String,
    pub j: usize,
    pub hyper: Hyperparameters,
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    /// Hours since the first observation, for every training observation.
    pub training_times: Vec<f64>,
    pub origin: Option<String>,
    pub held_out: Vec<usize>,
}

const FIT_RECORD: &str = "fit.json";

pub fn fit(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = section(&ctx.loaded.config.fit, "fit")?;
    let (series, manifest) = read_series(&ctx.loaded.input(&cfg.series)?)?;
    let grid = *series.grid();
    let covariates = match &cfg.covariates {
        Some(p) => read_covariates(&ctx.loaded.input(p)?)?.0,
        None => CovariateMatrix::empty(&grid),
    };
    covariates
        .grid()
        .ensure_same(&grid, "covariates vs series")?;
    let basis = match &cfg.basis {
        Some(p) => read_basis(&ctx.loaded.input(p)?)?,
        None => BasisMatrix::exponential(&grid, cfg.j, cfg.range)?,
    };
    if basis.j() != cfg.j {
        return Err(CliError::config(format!(
            "basis has J = {}, config asks for {}",
            basis.j(),
            cfg.j
        )));
    }
    basis.grid().ensure_same(&grid, "basis vs series")?;
    let mut training = match cfg.train_first {
        Some(n) => series.truncated(n)?,
        None => series,
    };
    if !cfg.hold_out.is_empty() {
        training = training.with_held_out(&cfg.hold_out)?;
    }
    let transition = TransitionRegistry::default().get(&cfg.transition)?;
    if cfg.chains == 0 {
        return Err(CliError::config("chains must be at least 1"));
    }
    let base_seed = ctx.seed(cfg.seed);
    let spec_for = |seed| ModelSpec {
        transition: Arc::clone(&transition),
        basis: basis.clone(),
        covariates: covariates.clone(),
        hyper: cfg.hyper.clone(),
        n_iter: cfg.n_iter,
        n_burn: cfg.n_burn,
        thin: cfg.thin,
        seed,
        keep_phi: cfg.hold_out.clone(),
    };
    spec_for(base_seed).validate()?;
    let out = ctx.loaded.output(&cfg.out);
    let dirs: Vec<PathBuf> = if cfg.chains == 1 {
        vec![out.clone()]
    } else {
        (0..cfg.chains)
            .map(|c| out.join(format!("chain_{c:02}")))
            .collect()
    };

    let run_one = |c: usize| -> CliResult<PosteriorSamples> {
        let spec = spec_for(base_seed + c as u64);
        let step = (spec.n_iter / 10).max(1);
        let samples = run_chain_with_progress(&spec, &training, |it| {
            if it % step == 0 {
                info!("chain {c}: iteration {it}/{}", spec.n_iter);
            }
        })?;
        Ok(samples)
    };
    let threads = ctx.threads.max(1);
    let mut results: Vec<Option<CliResult<PosteriorSamples>>> =
        (0..cfg.chains).map(|_| None).collect();
    for batch in (0..cfg.chains).collect::<Vec<_>>().chunks(threads) {
        let done: Vec<(usize, CliResult<PosteriorSamples>)> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&c| (c, s.spawn(move || run_one(c))))
                .collect();
            handles
                .into_iter()
                .map(|(c, h)| {
                    (
                        c,
                        h.join()
                            .unwrap_or_else(|_| Err(CliError::data("chain thread panicked"))),
                    )
                })
                .collect()
        });
        for (c, r) in done {
            results[c] = Some(r);
        }
    }

    for (c, (dir, result)) in dirs.iter().zip(results).enumerate() {
        let samples = result.expect("every chain ran")?;
        let seed = base_seed + c as u64;
        write_samples(&dir.join("samples"), &samples, cfg.chunk_draws)?;
        write_basis(&dir.join("basis.json"), &basis)?;
        write_covariates(&dir.join("covariates.json"), &covariates, &[])?;
        let record = FitRecord {
            transition: transition.name().to_string(),
            j: basis.j(),
            hyper: cfg.hyper.clone(),
            n_iter: cfg.n_iter,
            n_burn: cfg.n_burn,
            thin: cfg.thin,
            seed,
            training_times: training.times().to_vec(),
            origin: manifest.origin.clone(),
            held_out: cfg.hold_out.clone(),
        };
        write_report(&dir.join(FIT_RECORD), &record)?;
        let report = FitReport::from_samples(
            &samples,
            covariates.names(),
            transition.block(),
            training.times().to_vec(),
            cfg.hold_out.clone(),
            ctx.reproducibility(seed),
        )?;
        if let Some(r) = &report.spectral_radius {
            if r.fraction_above_one > 0.0 {
                warn!(
                    "chain {c}: {:.1}% of retained transitions have spectral radius above 1 (max {:.3})",
                    100.0 * r.fraction_above_one,
                    r.max
                );
            }
        }
        write_report(&dir.join("fit_report.json"), &report)?;
        ctx.write_record(dir, "fit", seed)?;
        info!("wrote {} draws to {}", samples.len(), dir.display());
    }
    Ok(dirs)
}

/// A fit directory loaded back into memory.
pub struct LoadedFit {
    pub record: FitRecord,
    pub spec: ModelSpec,
    pub samples: PosteriorSamples,
}

pub fn load_fit(dir: &Path) -> CliResult<LoadedFit> {
    let path = dir.join(FIT_RECORD);
    let text =
        std::fs::read(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let record: FitRecord = serde_json::from_slice(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let basis = read_basis(&dir.join("basis.json"))?;
    let (covariates, _) = read_covariates(&dir.join("covariates.json"))?;
    let samples = read_samples(&dir.join("samples"))?;
    let spec = ModelSpec {
        transition: TransitionRegistry::default().get(&record.transition)?,
        basis,
        covariates,
        hyper: record.hyper.clone(),
        n_iter: record.n_iter,
        n_burn: record.n_burn,
        thin: record.thin,
        seed: record.seed,
        keep_phi: record.held_out.clone(),
    };
    Ok(LoadedFit {
        record,
        spec,
        samples,
    })
}

fn read_truth(ctx: &Context, truth: &TruthSpec) -> CliResult<ScalarField> {
    match truth {
        TruthSpec::Field { field } => read_any_field(&ctx.loaded.input(field)?),
        TruthSpec::Series { series, index } => {
            let (s, _) = read_series(&ctx.loaded.input(series)?)?;
            s.fields().get(*index).cloned().ok_or_else(|| {
                CliError::data(format!(
                    "truth index {index} is out of range for {} observations",
                    s.len()
                ))
            })
        }
    }
}

/// Scores and band summaries for one set of predictive draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    /// Hours since the first observation.
    pub time: f64,
    pub draws: usize,
    pub level: f64,
    pub tau: f64,
    pub mean_ts: Option<f64>,
    pub ts_sd: Option<f64>,
    pub ts_min: Option<f64>,
    pub ts_max: Option<f64>,
    pub boundary_coverage: Option<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastReport {
    pub mode: String,
    pub steps: Vec<StepReport>,
    pub reproducibility: Reproducibility,
}

fn summarize_scores(score: &ScoreReport) -> (f64, f64, f64) {
    let n = score.per_draw.len() as f64;
    let sd = if n > 1.0 {
        (score
            .per_draw
            .iter()
            .map(|t| (t - score.mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    let min = score.per_draw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = score
        .per_draw
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (sd, min, max)
}

/// Scores `draws` against an optional truth and writes the band fields,
/// the score table and an SVG into `out` with names prefixed by `stem`.
#[allow(clippy::too_many_arguments)]
fn assess(
    out: &Path,
    stem: &str,
    time: f64,
    draws: &[ScalarField],
    truth: Option<&ScalarField>,
    tau: f64,
    level: f64,
    svg: bool,
) -> CliResult<StepReport> {
    let band: CredibleBand = credible_band(draws, level)?;
    let mut files = Vec::new();
    for (name, field) in [
        ("mean", &band.mean),
        ("lower", &band.lower),
        ("upper", &band.upper),
    ] {
        let file = format!("{stem}_{name}.json");
        write_field(&out.join(&file), field)?;
        files.push(file);
    }
    let mut report = StepReport {
        time,
        draws: draws.len(),
        level,
        tau,
        mean_ts: None,
        ts_sd: None,
        ts_min: None,
        ts_max: None,
        boundary_coverage: None,
        files,
    };
    let truth_boundary = truth.and_then(|t| extract_zero_contour(t).ok());
    if let Some(t) = truth {
        let score = mean_threat_score(draws, t, tau)?;
        let (sd, min, max) = summarize_scores(&score);
        report.mean_ts = Some(score.mean);
        report.ts_sd = Some(sd);
        report.ts_min = Some(min);
        report.ts_max = Some(max);
        let file = format!("{stem}_scores.json");
        write_report(&out.join(&file), &score)?;
        report.files.push(file);
        if let Some(b) = &truth_boundary {
            report.boundary_coverage = Some(boundary_coverage(&band.lower, &band.upper, b)?);
        }
        info!(
            "{stem}: mean threat score {:.4} over {} draws",
            score.mean,
            draws.len()
        );
    }
    if svg {
        let contours: Vec<(&str, &str, bool, Option<_>)> = vec![
            ("truth", "black", false, truth_boundary.clone()),
            (
                "posterior mean",
                "#1f77b4",
                false,
                extract_zero_contour(&band.mean).ok(),
            ),
            (
                "band lower",
                "#d62728",
                true,
                extract_zero_contour(&band.lower).ok(),
            ),
            (
                "band upper",
                "#2ca02c",
                true,
                extract_zero_contour(&band.upper).ok(),
            ),
        ];
        let layers: Vec<Layer<'_>> = contours
            .iter()
            .filter_map(|(label, color, dashed, b)| {
                b.as_ref().map(|boundary| Layer {
                    label,
                    color,
                    dashed: *dashed,
                    boundary,
                })
            })
            .collect();
        let file = format!("{stem}.svg");
        let text = render_svg(draws[0].grid(), &layers, 480.0);
        std::fs::write(out.join(&file), text)
            .map_err(|e| CliError::data(format!("{file}: {e}")))?;
        report.files.push(file);
    }
    Ok(report)
}

/// A stack of fields sharing one grid: JSON header plus raw values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrawStack {
    format: String,
    grid: GridSpec,
    count: usize,
    time: f64,
    values: String,
}

fn write_draws(out: &Path, stem: &str, time: f64, draws: &[ScalarField]) -> CliResult<String> {
    let bin = format!("{stem}_draws.bin");
    let bytes: Vec<u8> = draws
        .iter()
        .flat_map(|d| d.values().iter().flat_map(|v| v.to_le_bytes()))
        .collect();
    std::fs::write(out.join(&bin), bytes).map_err(|e| CliError::data(format!("{bin}: {e}")))?;
    let header = format!("{stem}_draws.json");
    write_report(
        &out.join(&header),
        &DrawStack {
            format: "firefront.draws".into(),
            grid: *draws[0].grid(),
            count: draws.len(),
            time,
            values: bin,
        },
    )?;
    Ok(header)
}

fn read_draws(path: &Path) -> CliResult<(f64, Vec<ScalarField>)> {
    let text =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let h: DrawStack = serde_json::from_slice(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let bin = parent_dir(path).join(&h.values);
    let bytes =
        std::fs::read(&bin).map_err(|e| CliError::data(format!("{}: {e}", bin.display())))?;
    let n = h.grid.len();
    if bytes.len() != 8 * n * h.count {
        return Err(CliError::data(format!(
            "{}: expected {} draws of {n} cells",
            bin.display(),
            h.count
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    let draws = values
        .chunks(n)
        .map(|c| ScalarField::new(h.grid, c.to_vec()))
        .collect::<firefront::Result<Vec<_>>>()?;
    Ok((h.time, draws))
}

pub fn run_forecast(ctx: &Context) -> CliResult<ForecastReport> {
    let cfg = section(&ctx.loaded.config.forecast, "forecast")?;
    let fit = load_fit(&ctx.loaded.input(&cfg.fit)?)?;
    let truth = cfg.truth.as_ref().map(|t| read_truth(ctx, t)).transpose()?;
    if let Some(t) = &truth {
        t.grid().ensure_same(&fit.samples.grid, "truth vs fit")?;
    }
    let seed = ctx.seed(cfg.seed);
    let out = ctx.loaded.output(&cfg.out);
    std::fs::create_dir_all(&out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    let times = &fit.record.training_times;
    let mut steps = Vec::new();
    let mode;
    if let Some(k) = cfg.interior {
        mode = "interior";
        let draws = interior_prediction(&fit.samples, k, seed)?;
        let time = *times.get(k).ok_or_else(|| {
            CliError::config(format!("interior index {k} is outside the training window"))
        })?;
        let stem = format!("interior_{k:03}");
        let mut report = assess(
            &out,
            &stem,
            time,
            &draws,
            truth.as_ref(),
            cfg.tau,
            cfg.level,
            cfg.svg,
        )?;
        if cfg.save_draws {
            report.files.push(write_draws(&out, &stem, time, &draws)?);
        }
        steps.push(report);
    } else {
        mode = "ahead";
        let lengths = if cfg.steps.is_empty() {
            let n = times.len();
            vec![times[n - 1] - times[n - 2]]
        } else {
            cfg.steps.clone()
        };
        let draws = forecast(&fit.spec, &fit.samples, &lengths, seed)?;
        let mut time = *times.last().expect("training window is non-empty");
        for (h, (len, data)) in lengths.iter().zip(&draws.data).enumerate() {
            time += len;
            let stem = format!("step_{:02}", h + 1);
            // Truth, when given, is compared with the first step only.
            let t = if h == 0 { truth.as_ref() } else { None };
            let mut report = assess(&out, &stem, time, data, t, cfg.tau, cfg.level, cfg.svg)?;
            if cfg.save_draws {
                report.files.push(write_draws(&out, &stem, time, data)?);
            }
            steps.push(report);
        }
    }
    let report = ForecastReport {
        mode: mode.into(),
        steps,
        reproducibility: ctx.reproducibility(seed),
    };
    write_report(&out.join("forecast_report.json"), &report)?;
    ctx.write_record(&out, "forecast", seed)?;
    Ok(report)
}

pub fn evaluate(ctx: &Context) -> CliResult<StepReport> {
    let cfg = section(&ctx.loaded.config.evaluate, "evaluate")?;
    let (time, draws) = read_draws(&ctx.loaded.input(&cfg.draws)?)?;
    let truth = read_truth(ctx, &cfg.truth)?;
    truth
        .grid()
        .ensure_same(draws[0].grid(), "truth vs draws")?;
    let out = ctx.loaded.output(&cfg.out);
    std::fs::create_dir_all(&out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    let report = assess(
        &out,
        "evaluation",
        time,
        &draws,
        Some(&truth),
        cfg.tau,
        cfg.level,
        true,
    )?;
    write_report(&out.join("evaluation_report.json"), &report)?;
    ctx.write_record(&out, "evaluate", 0)?;
    Ok(report)
}

fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Markdown tables of a fit and, optionally, its forecast.
pub fn render_report(fit: &FitReport, forecast: Option<&ForecastReport>) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "# Fit summary\n\ntransition: {}, retained draws: {}\n\n",
        fit.transition, fit.draws
    ));
    s.push_str("| parameter | posterior mean | 95% interval |\n|---|---:|---|\n");
    for c in fit.coefficients.iter().chain(&fit.variances) {
        s.push_str(&format!(
            "| {} | {:.4} | ({:.4}, {:.4}) |\n",
            c.name, c.mean, c.lower, c.upper
        ));
    }
    if let Some(r) = &fit.spectral_radius {
        s.push_str(&format!(
            "\nspectral radius of the transition: mean {:.3}, max {:.3}, share above 1: {:.3}\n",
            r.mean, r.max, r.fraction_above_one
        ));
    }
    if !fit.ess.is_empty() {
        s.push_str("\n| parameter | ESS |\n|---|---:|\n");
        for e in &fit.ess {
            let flag = if e.degenerate { " (constant)" } else { "" };
            s.push_str(&format!("| {} | {:.0}{flag} |\n", e.parameter, e.ess));
        }
    }
    if !fit.held_out.is_empty() {
        s.push_str(&format!(
            "\nheld out observations: {:?} at hours {:?}\n",
            fit.held_out, fit.held_out_times
        ));
    }
    if let Some(f) = forecast {
        s.push_str(&format!(
            "\n# Forecast ({})\n\n| hours | draws | mean TS | coverage |\n|---:|---:|---:|---:|\n",
            f.mode
        ));
        for step in &f.steps {
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "| {:.2} | {} | {} | {} |\n",
                step.time,
                step.draws,
                opt(step.mean_ts),
                opt(step.boundary_coverage)
            ));
        }
    }
    s
}

pub fn report(ctx: &Context) -> CliResult<String> {
    let cfg = section(&ctx.loaded.config.report, "report")?;
    let fit: FitReport = read_json_file(&ctx.loaded.input(&cfg.fit)?.join("fit_report.json"))?;
    let forecast = match &cfg.forecast {
        Some(p) => Some(read_json_file::<ForecastReport>(
            &ctx.loaded.input(p)?.join("forecast_report.json"),
        )?),
        None => None,
    };
    let text = render_report(&fit, forecast.as_ref());
    if let Some(out) = &cfg.out {
        let out = ctx.loaded.output(out);
        if let Some(dir) = out.parent() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(&out, &text)
            .map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    }
    Ok(text)
}
