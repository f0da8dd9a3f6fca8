//! Synthetic boundary-evolution scenarios, selectable by name.

use serde::{Deserialize, Serialize};

use super::{evolve_series, EvolutionConfig, SpeedSpec};
use crate::error::{Error, Result};
use crate::grid::{signed_distance_field, BoundarySet, GridSpec, Point, ScalarField};
use crate::series::ObservationSeries;

/// A generator of synthetic observation series.
pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn default_grid(&self) -> GridSpec;
    fn default_config(&self) -> EvolutionConfig;
    /// Initial signed distance field on `grid`.
    fn initial_field(&self, grid: &GridSpec) -> Result<ScalarField>;
    fn check_config(&self, config: &EvolutionConfig) -> Result<()>;

    /// Evolves the initial field; observation `k` is stamped at `k * dt`.
    fn generate(&self, grid: &GridSpec, config: &EvolutionConfig) -> Result<ObservationSeries> {
        self.check_config(config)?;
        let initial = self.initial_field(grid)?;
        let fields = evolve_series(&initial, config)?;
        let times = (0..fields.len()).map(|k| k as f64 * config.dt).collect();
        ObservationSeries::new(*grid, times, fields)
    }
}

/// Two circles growing at a constant speed until they merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergingCircles {
    pub centers: [Point; 2],
    pub radii: [f64; 2],
}

impl Default for MergingCircles {
    fn default() -> Self {
        MergingCircles {
            centers: [[-3.0, 3.0], [3.0, 3.0]],
            radii: [0.8, 0.8],
        }
    }
}

impl Scenario for MergingCircles {
    fn name(&self) -> &'static str {
        "merging-circles"
    }

    fn description(&self) -> &'static str {
        "two circles spreading outward at constant speed and merging at the last step"
    }

    fn default_grid(&self) -> GridSpec {
        GridSpec {
            nx: 30,
            ny: 30,
            x_min: -7.0,
            x_max: 7.0,
            y_min: -1.0,
            y_max: 7.0,
        }
    }

    fn default_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: 1.0,
            n_steps: 26,
            redistance_every: 1,
            speed: SpeedSpec::Constant { value: 0.08 },
        }
    }

    fn initial_field(&self, grid: &GridSpec) -> Result<ScalarField> {
        let [c0, c1] = self.centers;
        let [r0, r1] = self.radii;
        if !(r0 > 0.0 && r1 > 0.0) {
            return Err(Error::InvalidParameter(
                "circle radii must be positive".into(),
            ));
        }
        if (c0[0] - c1[0]).hypot(c0[1] - c1[1]) <= r0 + r1 {
            return Err(Error::InvalidParameter(
                "circles overlap initially; they must merge during the series".into(),
            ));
        }
        ScalarField::from_fn(*grid, |x, y| {
            let d0 = (x - c0[0]).hypot(y - c0[1]) - r0;
            let d1 = (x - c1[0]).hypot(y - c1[1]) - r1;
            d0.min(d1)
        })
    }

    fn check_config(&self, config: &EvolutionConfig) -> Result<()> {
        match config.speed {
            SpeedSpec::Constant { .. } => Ok(()),
            _ => Err(Error::InvalidParameter(
                "merging-circles needs a constant speed".into(),
            )),
        }
    }
}

/// A V-shaped front whose notch fills as it spreads toward a preferred
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VShape {
    /// Lowest point of the outer edge of the V.
    pub apex: Point,
    /// Height of the arm tips above the apex; arms rise at 45 degrees.
    pub arm_height: f64,
    /// Arm thickness measured perpendicular to the arm.
    pub thickness: f64,
}

impl Default for VShape {
    fn default() -> Self {
        VShape {
            apex: [0.0, 0.5],
            arm_height: 5.5,
            thickness: 1.2,
        }
    }
}

impl VShape {
    pub fn polygon(&self) -> Vec<Point> {
        let [ax, ay] = self.apex;
        let h = self.arm_height;
        let s = std::f64::consts::SQRT_2;
        // Perpendicular offset of the inner edge of each 45-degree arm.
        let lift = self.thickness * s;
        let off = self.thickness / s;
        vec![
            [ax, ay],
            [ax + h, ay + h],
            [ax + h - off, ay + h + off],
            [ax, ay + lift],
            [ax - h + off, ay + h + off],
            [ax - h, ay + h],
        ]
    }
}

impl Scenario for VShape {
    fn name(&self) -> &'static str {
        "vshape"
    }

    fn description(&self) -> &'static str {
        "V-shaped front spreading north and filling its notch"
    }

    fn default_grid(&self) -> GridSpec {
        GridSpec {
            nx: 31,
            ny: 31,
            x_min: -10.0,
            x_max: 10.0,
            y_min: -1.0,
            y_max: 10.0,
        }
    }

    fn default_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: 1.0,
            n_steps: 14,
            redistance_every: 1,
            speed: SpeedSpec::DirectionalBias {
                base: 0.05,
                bias: 0.15,
                direction: [0.0, 1.0],
            },
        }
    }

    fn initial_field(&self, grid: &GridSpec) -> Result<ScalarField> {
        if !(self.arm_height > self.thickness && self.thickness > 0.0) {
            return Err(Error::InvalidParameter(
                "V arms must be taller than they are thick".into(),
            ));
        }
        let ring = BoundarySet::new(vec![self.polygon()], 0.0)?;
        signed_distance_field(&ring, grid)
    }

    fn check_config(&self, config: &EvolutionConfig) -> Result<()> {
        match config.speed {
            SpeedSpec::DirectionalBias { .. } => Ok(()),
            _ => Err(Error::InvalidParameter(
                "vshape needs the directional-bias speed preset".into(),
            )),
        }
    }
}

/// Named scenario lookup.
pub struct ScenarioRegistry {
    entries: Vec<Box<dyn Scenario>>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut registry = ScenarioRegistry::empty();
        registry.register(Box::new(MergingCircles::default()));
        registry.register(Box::new(VShape::default()));
        registry
    }
}

impl ScenarioRegistry {
    pub fn empty() -> Self {
        ScenarioRegistry {
            entries: Vec::new(),
        }
    }

    /// Adds a scenario, replacing any existing one with the same name.
    pub fn register(&mut self, scenario: Box<dyn Scenario>) {
        self.entries.retain(|s| s.name() != scenario.name());
        self.entries.push(scenario);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scenario> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "scenario",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

pub fn generate_merging_circles(
    grid: &GridSpec,
    config: &EvolutionConfig,
) -> Result<ObservationSeries> {
    MergingCircles::default().generate(grid, config)
}

pub fn generate_vshape(grid: &GridSpec, config: &EvolutionConfig) -> Result<ObservationSeries> {
    VShape::default().generate(grid, config)
}
