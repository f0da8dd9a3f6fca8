//! Rectangular grids, scalar fields on them, and the geometry that turns
//! boundary polygons into signed distance fields and back.
//!
//! Cells are addressed in row-major order with `y` varying slowest, so the
//! flat index of cell `(ix, iy)` is `iy * nx + ix`. Cell centers include both
//! extents: the first center sits at `x_min` and the last at `x_max`.

mod boundary;
mod contour;
pub(crate) mod raster;
mod sdf;

pub use boundary::{point_in_region, BoundarySet, Point};
pub use contour::extract_zero_contour;
pub use raster::{bilinear_resample, gradient_norm, slope_aspect, standardize};
pub use sdf::{point_segment_distance, signed_distance_field};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        let grid = GridSpec {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidGrid(format!(
                "extent [{}, {}] x [{}, {}] is empty or not finite",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    /// Number of cells, `nx * ny`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Characteristic cell size `h = max(dx, dy)`.
    pub fn cell_size(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn x(&self, ix: usize) -> f64 {
        if ix + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + ix as f64 * self.dx()
        }
    }

    pub fn y(&self, iy: usize) -> f64 {
        if iy + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + iy as f64 * self.dy()
        }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn center(&self, index: usize) -> Point {
        let (ix, iy) = self.coords(index);
        [self.x(ix), self.y(iy)]
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.center(i))
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {}x{} over [{}, {}]x[{}, {}] vs {}x{} over [{}, {}]x[{}, {}]",
                self.nx,
                self.ny,
                self.x_min,
                self.x_max,
                self.y_min,
                self.y_max,
                other.nx,
                other.ny,
                other.x_min,
                other.x_max,
                other.y_min,
                other.y_max
            )));
        }
        Ok(())
    }
}

/// Values on a [`GridSpec`], with an optional observation mask.
///
/// Masked-out cells hold `NaN`; numeric operations consult the mask and
/// never read them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            mask: None,
        })
    }

    /// Builds a masked field. Values under `false` mask entries are replaced
    /// by the sentinel; a mask with no `false` entry is dropped.
    pub fn with_mask(grid: GridSpec, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, grid has {} cells",
                mask.len(),
                grid.len()
            )));
        }
        if mask.iter().all(|&m| m) {
            return ScalarField::new(grid, values);
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = f64::NAN;
            }
        }
        let mut field = ScalarField::new(grid, values)?;
        field.mask = Some(mask);
        Ok(field)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        ScalarField::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        grid.validate()?;
        let values = grid.centers().map(|[x, y]| f(x, y)).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_observed(&self, index: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[index])
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.is_none()
    }

    pub fn observed_count(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.values.len(), |m| m.iter().filter(|&&b| b).count())
    }

    /// Value at `index`, or `None` when the cell is masked out.
    pub fn get(&self, index: usize) -> Option<f64> {
        self.is_observed(index).then(|| self.values[index])
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Observed `(index, value)` pairs.
    pub fn observed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.is_observed(*i))
            .map(|(i, &v)| (i, v))
    }

    /// Applies `f` to observed values; the mask is kept.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.is_observed(i) { f(v) } else { v })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Drops the mask, writing `fill` into the previously masked cells.
    pub fn filled(&self, fill: f64) -> ScalarField {
        let values = (0..self.values.len())
            .map(|i| self.get(i).unwrap_or(fill))
            .collect();
        ScalarField {
            grid: self.grid,
            values,
            mask: None,
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.observed().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_hit_both_extents_exactly() {
        let g = GridSpec::new(30, 30, (-7.0, 7.0), (-1.0, 7.0)).unwrap();
        assert_eq!(g.x(0), -7.0);
        assert_eq!(g.x(29), 7.0);
        assert_eq!(g.y(29), 7.0);
        assert_eq!(g.center(g.index(3, 4)), [g.x(3), g.y(4)]);
        assert_eq!(g.coords(g.index(3, 4)), (3, 4));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(GridSpec::new(1, 5, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(GridSpec::new(5, 5, (1.0, 1.0), (0.0, 1.0)).is_err());
        assert!(GridSpec::new(5, 5, (0.0, f64::NAN), (0.0, 1.0)).is_err());
    }

    #[test]
    fn mask_hides_values() {
        let g = GridSpec::new(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let f = ScalarField::with_mask(g, vec![1.0, 2.0, 3.0, 4.0], vec![true, false, true, true])
            .unwrap();
        assert_eq!(f.get(1), None);
        assert!(f.values()[1].is_nan());
        assert_eq!(f.observed_count(), 3);
        assert_eq!(f.filled(0.0).values(), &[1.0, 0.0, 3.0, 4.0]);
        let full = ScalarField::with_mask(g, vec![0.0; 4], vec![true; 4]).unwrap();
        assert!(full.is_fully_observed());
    }
}
