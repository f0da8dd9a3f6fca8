use super::boundary::{on_edge_tolerance, point_in_region, BoundarySet, Point};
use super::{GridSpec, ScalarField};
use crate::error::Result;

/// Euclidean distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        ((px * ex + py * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - t * ex).hypot(py - t * ey)
}

/// Exact signed distance from every cell center to the boundary rings.
///
/// The magnitude is the minimum point-to-segment distance over all ring
/// segments; the sign is negative inside (even-odd rule).
pub fn signed_distance_field(boundary: &BoundarySet, grid: &GridSpec) -> Result<ScalarField> {
    grid.validate()?;
    boundary.validate()?;
    let segments: Vec<(Point, Point)> = boundary.segments().collect();
    let tol = on_edge_tolerance(boundary);
    let values = grid
        .centers()
        .map(|p| {
            let d = segments
                .iter()
                .map(|&(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min);
            if d <= tol {
                0.0
            } else if point_in_region(p, boundary) {
                -d
            } else {
                d
            }
        })
        .collect();
    ScalarField::new(*grid, values)
}
