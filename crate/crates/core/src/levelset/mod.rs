//! Forward-Euler evolution of signed distance fields along their normals,
//! redistancing, and synthetic dataset generation.

mod scenario;

pub use scenario::{
    generate_merging_circles, generate_vshape, MergingCircles, Scenario, ScenarioRegistry, VShape,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::raster::gradient_at;
use crate::grid::{extract_zero_contour, signed_distance_field, ScalarField};
use crate::series::ObservationSeries;

/// Normal speed used while generating a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedSpec {
    /// The same speed in every cell.
    Constant { value: f64 },
    /// `max(0, base + bias * <n, direction>)` with `n` the unit normal of the
    /// current field.
    DirectionalBias {
        base: f64,
        bias: f64,
        #[serde(default = "north")]
        direction: [f64; 2],
    },
    /// One externally supplied speed field per step.
    #[serde(skip)]
    Fields(Vec<ScalarField>),
}

fn north() -> [f64; 2] {
    [0.0, 1.0]
}

impl SpeedSpec {
    /// Speed field for `step` given the current level-set field.
    pub fn speed(&self, field: &ScalarField, step: usize) -> Result<ScalarField> {
        let grid = *field.grid();
        match self {
            SpeedSpec::Constant { value } => ScalarField::constant(grid, *value),
            SpeedSpec::DirectionalBias {
                base,
                bias,
                direction,
            } => {
                let norm = direction[0].hypot(direction[1]);
                if norm == 0.0 {
                    return Err(Error::InvalidParameter("zero bias direction".into()));
                }
                let d = [direction[0] / norm, direction[1] / norm];
                let values = (0..grid.len())
                    .map(|i| {
                        let (ix, iy) = grid.coords(i);
                        let (gx, gy) = gradient_at(field, ix, iy);
                        let g = gx.hypot(gy);
                        if g < 1e-8 {
                            base.max(0.0)
                        } else {
                            (base + bias * (gx * d[0] + gy * d[1]) / g).max(0.0)
                        }
                    })
                    .collect();
                ScalarField::new(grid, values)
            }
            SpeedSpec::Fields(fields) => {
                let f = fields.get(step).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "no speed field supplied for step {step} ({} given)",
                        fields.len()
                    ))
                })?;
                f.grid().ensure_same(&grid, "speed field")?;
                Ok(f.clone())
            }
        }
    }

    fn is_identically_zero(&self) -> bool {
        matches!(self, SpeedSpec::Constant { value } if *value == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Redistance after every this many steps; 0 never redistances.
    pub redistance_every: usize,
    pub speed: SpeedSpec,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be positive".into()));
        }
        if self.redistance_every > self.n_steps {
            return Err(Error::InvalidParameter(format!(
                "redistance_every ({}) exceeds n_steps ({})",
                self.redistance_every, self.n_steps
            )));
        }
        Ok(())
    }
}

/// One explicit step `field - speed * dt`, cell by cell.
pub fn evolve_normal(field: &ScalarField, speed: &ScalarField, dt: f64) -> Result<ScalarField> {
    field.grid().ensure_same(speed.grid(), "evolve_normal")?;
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be >= 0, got {dt}"
        )));
    }
    let values = field
        .values()
        .iter()
        .zip(speed.values())
        .map(|(&phi, &v)| phi - v * dt)
        .collect();
    match field.mask() {
        Some(mask) => ScalarField::with_mask(*field.grid(), values, mask.to_vec()),
        None => ScalarField::new(*field.grid(), values),
    }
}

/// Rebuilds an exact signed distance field from the zero contour of `field`.
pub fn redistance(field: &ScalarField) -> Result<ScalarField> {
    let contour = extract_zero_contour(field)?;
    signed_distance_field(&contour, field.grid())
}

/// Evolves `initial` for `config.n_steps` steps, returning all
/// `n_steps + 1` fields including the initial one.
pub fn evolve_series(initial: &ScalarField, config: &EvolutionConfig) -> Result<Vec<ScalarField>> {
    config.validate()?;
    let mut fields = Vec::with_capacity(config.n_steps + 1);
    fields.push(initial.clone());
    let mut current = initial.clone();
    for step in 0..config.n_steps {
        if config.speed.is_identically_zero() {
            fields.push(current.clone());
            continue;
        }
        let speed = config.speed.speed(&current, step)?;
        current = evolve_normal(&current, &speed, config.dt)?;
        if config.redistance_every > 0 && (step + 1) % config.redistance_every == 0 {
            current = redistance(&current)?;
        }
        fields.push(current.clone());
    }
    Ok(fields)
}

/// Adds i.i.d. `N(0, sigma_d^2)` noise to every observed cell of every field.
pub fn add_observation_noise(
    series: &ObservationSeries,
    sigma_d: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if !(sigma_d >= 0.0) || !sigma_d.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma_d must be >= 0, got {sigma_d}"
        )));
    }
    if sigma_d == 0.0 {
        return Ok(series.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma_d).expect("validated sigma");
    series.map_fields(|_, f| {
        let values = f
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if f.is_observed(i) {
                    v + noise.sample(&mut rng)
                } else {
                    v
                }
            })
            .collect();
        match f.mask() {
            Some(m) => ScalarField::with_mask(*f.grid(), values, m.to_vec()),
            None => ScalarField::new(*f.grid(), values),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient_norm, GridSpec};

    fn circle_field(r: f64) -> ScalarField {
        let g = GridSpec::new(41, 41, (-3.0, 3.0), (-3.0, 3.0)).unwrap();
        ScalarField::from_fn(g, |x, y| x.hypot(y) - r).unwrap()
    }

    #[test]
    fn constant_speed_grows_circle() {
        let phi = circle_field(1.0);
        let speed = ScalarField::constant(*phi.grid(), 1.0).unwrap();
        let next = evolve_normal(&phi, &speed, 0.1).unwrap();
        let expected = circle_field(1.1);
        for (a, b) in next.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_speed_or_zero_dt_is_identity() {
        let phi = circle_field(1.0);
        let zero = ScalarField::constant(*phi.grid(), 0.0).unwrap();
        assert_eq!(evolve_normal(&phi, &zero, 0.5).unwrap(), phi);
        let one = ScalarField::constant(*phi.grid(), 1.0).unwrap();
        assert_eq!(evolve_normal(&phi, &one, 0.0).unwrap(), phi);
        let other =
            ScalarField::constant(GridSpec::new(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap(), 1.0)
                .unwrap();
        assert!(evolve_normal(&phi, &other, 0.1).is_err());
    }

    #[test]
    fn redistance_restores_unit_slope() {
        let phi = circle_field(1.5);
        let h = phi.grid().cell_size();
        let scaled = phi.map(|v| 3.0 * v);
        let fixed = redistance(&scaled).unwrap();
        for (a, b) in fixed.values().iter().zip(phi.values()) {
            assert!((a - b).abs() <= 2.0 * h);
        }
        let same = redistance(&phi).unwrap();
        for (a, b) in same.values().iter().zip(phi.values()) {
            assert!((a - b).abs() <= 2.0 * h);
        }
        let gn = gradient_norm(&fixed).unwrap();
        let g = fixed.grid();
        for i in 0..g.len() {
            let (ix, iy) = g.coords(i);
            let [x, y] = g.center(i);
            let r = x.hypot(y);
            let safe = ix > 0 && iy > 0 && ix + 1 < g.nx && iy + 1 < g.ny && r > 2.0 * h;
            if safe {
                assert!(
                    (gn.values()[i] - 1.0).abs() <= 0.1,
                    "cell {i}: {}",
                    gn.values()[i]
                );
            }
        }
        let positive = ScalarField::constant(*phi.grid(), 1.0).unwrap();
        assert!(redistance(&positive).is_err());
    }

    #[test]
    fn noise_is_seeded_and_has_the_right_variance() {
        let g = GridSpec::new(30, 30, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let f = ScalarField::constant(g, 0.0).unwrap();
        let times: Vec<f64> = (0..20).map(|t| t as f64).collect();
        let s = ObservationSeries::new(g, times, vec![f; 20]).unwrap();
        assert_eq!(add_observation_noise(&s, 0.0, 1).unwrap(), s);
        let a = add_observation_noise(&s, 0.3, 7).unwrap();
        assert_eq!(a, add_observation_noise(&s, 0.3, 7).unwrap());
        let vals: Vec<f64> = a
            .fields()
            .iter()
            .flat_map(|f| f.values().to_vec())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Sample variance has standard error sigma^2 * sqrt(2 / (n - 1)).
        let se = 0.09 * (2.0 / (n - 1.0)).sqrt();
        assert!((var - 0.09).abs() < 3.0 * se, "var {var}");
    }
}
