//! Forecast scoring and posterior uncertainty summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::raster::interpolate;
use crate::grid::{BoundarySet, GridSpec, ScalarField};

/// Cell counts of the event contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Contingency {
    /// Event in both forecast and truth.
    pub a11: usize,
    /// Event forecast only.
    pub a10: usize,
    /// Event in truth only.
    pub a01: usize,
    /// Event in neither.
    pub a00: usize,
}

impl Contingency {
    pub fn threat_score(&self) -> Result<f64> {
        let denom = self.a11 + self.a10 + self.a01;
        if denom == 0 {
            return Err(Error::NoEventCells);
        }
        Ok(self.a11 as f64 / denom as f64)
    }
}

/// Threat score of `pred` against `truth`, where a cell is an event when its
/// value is at most `tau`. Cells masked in either field are skipped.
pub fn threat_score(
    pred: &ScalarField,
    truth: &ScalarField,
    tau: f64,
) -> Result<(f64, Contingency)> {
    pred.grid().ensure_same(truth.grid(), "forecast vs truth")?;
    let mut c = Contingency::default();
    for i in 0..pred.grid().len() {
        let (Some(p), Some(t)) = (pred.get(i), truth.get(i)) else {
            continue;
        };
        match (p <= tau, t <= tau) {
            (true, true) => c.a11 += 1,
            (true, false) => c.a10 += 1,
            (false, true) => c.a01 += 1,
            (false, false) => c.a00 += 1,
        }
    }
    Ok((c.threat_score()?, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tau: f64,
    pub mean: f64,
    pub per_draw: Vec<f64>,
    pub counts: Vec<Contingency>,
}

/// Average of the per-draw threat scores.
pub fn mean_threat_score(
    draws: &[ScalarField],
    truth: &ScalarField,
    tau: f64,
) -> Result<ScoreReport> {
    if draws.is_empty() {
        return Err(Error::TooFewDraws { need: 1, got: 0 });
    }
    let (per_draw, counts): (Vec<f64>, Vec<Contingency>) = draws
        .iter()
        .map(|d| threat_score(d, truth, tau))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let mean = per_draw.iter().sum::<f64>() / per_draw.len() as f64;
    Ok(ScoreReport {
        tau,
        mean,
        per_draw,
        counts,
    })
}

/// Linear interpolation between order statistics of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    pub level: f64,
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub mean: ScalarField,
}

/// Per-cell equal-tailed interval and mean over the draws.
pub fn credible_band(draws: &[ScalarField], level: f64) -> Result<CredibleBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    // Enough draws that each tail holds at least one of them.
    let need = (1.0 / (1.0 - level) - 1e-9).ceil() as usize;
    if draws.len() < need {
        return Err(Error::TooFewDraws {
            need,
            got: draws.len(),
        });
    }
    let grid = *draws[0].grid();
    for d in draws {
        d.grid().ensure_same(&grid, "credible band draws")?;
    }
    let tail = 0.5 * (1.0 - level);
    let n = grid.len();
    let (mut lower, mut upper, mut mean) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut column = Vec::with_capacity(draws.len());
    for i in 0..n {
        column.clear();
        column.extend(draws.iter().map(|d| d.values()[i]));
        column.sort_by(f64::total_cmp);
        lower[i] = quantile_sorted(&column, tail);
        upper[i] = quantile_sorted(&column, 1.0 - tail);
        mean[i] = column.iter().sum::<f64>() / column.len() as f64;
    }
    Ok(CredibleBand {
        level,
        lower: ScalarField::new(grid, lower)?,
        upper: ScalarField::new(grid, upper)?,
        mean: ScalarField::new(grid, mean)?,
    })
}

/// Share of boundary vertices at which the interpolated band brackets zero.
pub fn boundary_coverage(
    lower: &ScalarField,
    upper: &ScalarField,
    truth: &BoundarySet,
) -> Result<f64> {
    lower.grid().ensure_same(upper.grid(), "band bounds")?;
    if !lower.is_fully_observed() || !upper.is_fully_observed() {
        return Err(Error::MaskedInput("credible band".into()));
    }
    let (mut hit, mut total) = (0usize, 0usize);
    for p in truth.vertices() {
        total += 1;
        if interpolate(lower, p) <= 0.0 && interpolate(upper, p) >= 0.0 {
            hit += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoBoundary);
    }
    Ok(hit as f64 / total as f64)
}

/// A boundary drawn as one SVG layer.
#[derive(Debug, Clone)]
pub struct Layer<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub boundary: &'a BoundarySet,
}

/// Renders boundary layers over the grid extent, `y` pointing up.
pub fn render_svg(grid: &GridSpec, layers: &[Layer<'_>], width_px: f64) -> String {
    let w = grid.x_max - grid.x_min;
    let h = grid.y_max - grid.y_min;
    let scale = width_px / w;
    let height_px = h * scale;
    let legend = 18.0 * layers.len() as f64 + 8.0;
    let map = |p: [f64; 2]| ((p[0] - grid.x_min) * scale, (grid.y_max - p[1]) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        width_px,
        height_px + legend,
        width_px,
        height_px + legend
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{width_px:.2}" height="{height_px:.2}" fill="#fafafa" stroke="#999"/>"##
    );
    for layer in layers {
        let dash = if layer.dashed {
            r#" stroke-dasharray="4 3""#
        } else {
            ""
        };
        for ring in &layer.boundary.rings {
            let pts: Vec<String> = ring
                .iter()
                .map(|&p| {
                    let (x, y) = map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                layer.color,
                pts.join(" ")
            );
        }
    }
    for (k, layer) in layers.iter().enumerate() {
        let y = height_px + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="8" y1="{:.1}" x2="28" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="34" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            y - 4.0,
            y - 4.0,
            layer.color,
            y,
            layer.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(3, 2, (0.0, 2.0), (0.0, 1.0)).unwrap()
    }

    fn field(v: &[f64]) -> ScalarField {
        ScalarField::new(grid(), v.to_vec()).unwrap()
    }

    #[test]
    fn hand_counted_table() {
        // Forecast events at cells {0, 1}, truth events at {1, 2}.
        let pred = field(&[-1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
        let truth = field(&[1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
        let (ts, c) = threat_score(&pred, &truth, 0.0).unwrap();
        assert_eq!((c.a11, c.a10, c.a01, c.a00), (1, 1, 1, 3));
        assert!((ts - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_and_disjoint() {
        let a = field(&[-1.0, 0.0, 1.0, 2.0, -3.0, 4.0]);
        assert_eq!(threat_score(&a, &a, 0.0).unwrap().0, 1.0);
        let b = field(&[1.0, 1.0, -1.0, 1.0, 1.0, 1.0]);
        let c = field(&[-1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(threat_score(&b, &c, 0.0).unwrap().0, 0.0);
        let none = field(&[1.0; 6]);
        assert!(matches!(
            threat_score(&none, &none, 0.0),
            Err(Error::NoEventCells)
        ));
    }

    #[test]
    fn mean_of_two_draws() {
        let truth = field(&[-1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
        let half = field(&[-1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let r = mean_threat_score(&[half, truth.clone()], &truth, 0.0).unwrap();
        assert_eq!(r.per_draw, vec![0.5, 1.0]);
        assert!((r.mean - 0.75).abs() < 1e-15);
        assert!(mean_threat_score(&[], &truth, 0.0).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn constant_draws_collapse_the_band() {
        let draws = vec![field(&[0.5; 6]); 20];
        let band = credible_band(&draws, 0.95).unwrap();
        assert_eq!(band.lower, band.upper);
        assert_eq!(band.lower, band.mean);
        assert!(credible_band(&draws[..19], 0.95).is_err());
    }

    #[test]
    fn coverage_extremes() {
        let g = GridSpec::new(5, 5, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let square = BoundarySet::new(
            vec![vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]],
            0.0,
        )
        .unwrap();
        let lo = ScalarField::constant(g, -1.0).unwrap();
        let hi = ScalarField::constant(g, 1.0).unwrap();
        assert_eq!(boundary_coverage(&lo, &hi, &square).unwrap(), 1.0);
        let pos = ScalarField::constant(g, 0.5).unwrap();
        assert_eq!(boundary_coverage(&pos, &hi, &square).unwrap(), 0.0);
    }

    #[test]
    fn svg_contains_every_layer() {
        let g = GridSpec::new(5, 5, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let b = BoundarySet::new(vec![vec![[-1.0, -1.0], [1.0, -1.0], [0.0, 1.0]]], 0.0).unwrap();
        let svg = render_svg(
            &g,
            &[
                Layer {
                    label: "truth",
                    color: "black",
                    dashed: false,
                    boundary: &b,
                },
                Layer {
                    label: "forecast",
                    color: "red",
                    dashed: true,
                    boundary: &b,
                },
            ],
            400.0,
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("forecast") && svg.ends_with("</svg>\n"));
    }
}
