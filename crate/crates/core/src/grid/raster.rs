//! Raster operations used for covariate preprocessing and for checking the
//! unit-gradient property of signed distance fields.

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

/// Per-cell `|grad f|`: central differences inside, one-sided on the border.
pub fn gradient_norm(field: &ScalarField) -> Result<ScalarField> {
    let g = *field.grid();
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::InvalidGrid(
            "gradient needs at least 3 cells per axis".into(),
        ));
    }
    let values = (0..g.len())
        .map(|i| {
            let (ix, iy) = g.coords(i);
            let (gx, gy) = gradient_at(field, ix, iy);
            gx.hypot(gy)
        })
        .collect();
    ScalarField::new(g, values)
}

/// Finite-difference gradient at a cell (central inside, one-sided on the
/// border).
pub(crate) fn gradient_at(field: &ScalarField, ix: usize, iy: usize) -> (f64, f64) {
    let g = field.grid();
    let diff = |lo: usize, hi: usize, step: f64, f: &dyn Fn(usize) -> f64| {
        (f(hi) - f(lo)) / ((hi - lo) as f64 * step)
    };
    let (x_lo, x_hi) = (ix.saturating_sub(1), (ix + 1).min(g.nx - 1));
    let (y_lo, y_hi) = (iy.saturating_sub(1), (iy + 1).min(g.ny - 1));
    let gx = diff(x_lo, x_hi, g.dx(), &|j| field.at(j, iy));
    let gy = diff(y_lo, y_hi, g.dy(), &|j| field.at(ix, j));
    (gx, gy)
}

/// Bilinear interpolation of a fully observed field at an arbitrary point in
/// its extent.
pub(crate) fn interpolate(field: &ScalarField, p: [f64; 2]) -> f64 {
    let (i, j, tx, ty) = locate(field.grid(), p);
    let v = |a: usize, b: usize| field.at(a, b);
    let g = field.grid();
    let (i1, j1) = ((i + 1).min(g.nx - 1), (j + 1).min(g.ny - 1));
    (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i1, j))
        + ty * ((1.0 - tx) * v(i, j1) + tx * v(i1, j1))
}

/// Lower-left node and fractional offsets of `p`, clamped into the grid.
fn locate(g: &GridSpec, p: [f64; 2]) -> (usize, usize, f64, f64) {
    let axis = |v: f64, lo: f64, step: f64, n: usize| {
        let f = ((v - lo) / step).clamp(0.0, (n - 1) as f64);
        let i = (f.floor() as usize).min(n - 2);
        (i, f - i as f64)
    };
    let (i, tx) = axis(p[0], g.x_min, g.dx(), g.nx);
    let (j, ty) = axis(p[1], g.y_min, g.dy(), g.ny);
    (i, j, tx, ty)
}

/// Resamples `src` onto `dst` by bilinear interpolation between the four
/// surrounding source centers.
///
/// A destination cell that draws non-zero weight from a masked source cell
/// is masked in the output.
pub fn bilinear_resample(src: &ScalarField, dst: &GridSpec) -> Result<ScalarField> {
    dst.validate()?;
    let s = *src.grid();
    // Relative slack absorbs the rounding in center coordinates.
    let eps = 1e-12 * (s.x_max - s.x_min).abs().max(s.y_max - s.y_min).max(1.0);
    if dst.x_min < s.x_min - eps
        || dst.x_max > s.x_max + eps
        || dst.y_min < s.y_min - eps
        || dst.y_max > s.y_max + eps
    {
        return Err(Error::ExtentOutside);
    }
    if src.grid() == dst {
        return Ok(src.clone());
    }
    let mut values = Vec::with_capacity(dst.len());
    let mut mask = Vec::with_capacity(dst.len());
    for p in dst.centers() {
        let (i, j, tx, ty) = locate(&s, p);
        let corners = [
            (i, j, (1.0 - tx) * (1.0 - ty)),
            (i + 1, j, tx * (1.0 - ty)),
            (i, j + 1, (1.0 - tx) * ty),
            (i + 1, j + 1, tx * ty),
        ];
        let mut value = 0.0;
        let mut observed = true;
        for (a, b, w) in corners {
            if w == 0.0 {
                continue;
            }
            match src.get(s.index(a, b)) {
                Some(v) => value += w * v,
                None => observed = false,
            }
        }
        values.push(value);
        mask.push(observed);
    }
    ScalarField::with_mask(*dst, values, mask)
}

/// Slope and aspect (both in degrees) from a DEM using Horn's
/// eight-neighbour gradient.
///
/// Aspect is the compass direction of steepest descent: 0 north, 90 east,
/// 180 south, 270 west. Flat cells get aspect 0. Border cells replicate
/// their nearest interior neighbours.
pub fn slope_aspect(dem: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let g = *dem.grid();
    if !dem.is_fully_observed() {
        return Err(Error::MaskedInput("DEM must be fully observed".into()));
    }
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::InvalidGrid(
            "slope/aspect need at least 3 cells per axis".into(),
        ));
    }
    let z = |ix: isize, iy: isize| {
        let cx = ix.clamp(0, g.nx as isize - 1) as usize;
        let cy = iy.clamp(0, g.ny as isize - 1) as usize;
        dem.at(cx, cy)
    };
    let mut slope = Vec::with_capacity(g.len());
    let mut aspect = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let (ix, iy) = g.coords(i);
        let (x, y) = (ix as isize, iy as isize);
        // North row is iy + 1.
        let (nw, n, ne) = (z(x - 1, y + 1), z(x, y + 1), z(x + 1, y + 1));
        let (w, e) = (z(x - 1, y), z(x + 1, y));
        let (sw, s, se) = (z(x - 1, y - 1), z(x, y - 1), z(x + 1, y - 1));
        let dzdx = ((ne + 2.0 * e + se) - (nw + 2.0 * w + sw)) / (8.0 * g.dx());
        let dzdy = ((nw + 2.0 * n + ne) - (sw + 2.0 * s + se)) / (8.0 * g.dy());
        let norm = dzdx.hypot(dzdy);
        slope.push(norm.atan().to_degrees());
        if norm < 1e-12 {
            aspect.push(0.0);
        } else {
            let a = (-dzdx).atan2(-dzdy).to_degrees();
            aspect.push(if a < 0.0 { a + 360.0 } else { a });
        }
    }
    Ok((ScalarField::new(g, slope)?, ScalarField::new(g, aspect)?))
}

/// `(value - mean) / sd` over observed cells, with the `n - 1` denominator.
/// Masked cells become `0` and the returned field is fully observed.
pub fn standardize(field: &ScalarField) -> Result<ScalarField> {
    let observed: Vec<f64> = field.observed().map(|(_, v)| v).collect();
    if observed.len() < 2 {
        return Err(Error::ConstantCovariate(None));
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::ConstantCovariate(None));
    }
    let values = (0..field.grid().len())
        .map(|i| field.get(i).map_or(0.0, |v| (v - mean) / sd))
        .collect();
    ScalarField::new(*field.grid(), values)
}
