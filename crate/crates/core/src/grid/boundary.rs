use serde::{Deserialize, Serialize};

use super::sdf::point_segment_distance;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Closed polygonal rings describing a region at one point in time.
///
/// Rings may be disjoint or nested; membership follows the even-odd rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySet {
    pub rings: Vec<Vec<Point>>,
    /// Hours since the start of the series.
    #[serde(default)]
    pub timestamp: f64,
}

impl BoundarySet {
    /// Validates the rings, closing any ring whose last vertex differs from
    /// its first.
    pub fn new(rings: Vec<Vec<Point>>, timestamp: f64) -> Result<Self> {
        let mut set = BoundarySet { rings, timestamp };
        for ring in &mut set.rings {
            if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
                if first != last {
                    ring.push(first);
                }
            }
        }
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rings.is_empty() {
            return Err(Error::NoBoundary);
        }
        for (index, ring) in self.rings.iter().enumerate() {
            let degenerate = |reason: &str| Error::DegenerateRing {
                ring: index,
                reason: reason.to_string(),
            };
            if ring.len() < 4 {
                return Err(degenerate("fewer than 3 vertices"));
            }
            if ring.first() != ring.last() {
                return Err(degenerate("ring is not closed"));
            }
            if ring.iter().flatten().any(|v| !v.is_finite()) {
                return Err(degenerate("non-finite vertex"));
            }
            let perimeter: f64 = segments(ring).map(|(a, b)| dist(a, b)).sum();
            if perimeter <= 0.0 {
                return Err(degenerate("zero-length perimeter"));
            }
        }
        Ok(())
    }

    /// Every ring segment `(start, end)` across all rings.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings.iter().flat_map(|r| segments(r))
    }

    /// Vertices without the duplicated closing vertex of each ring.
    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.rings
            .iter()
            .flat_map(|r| r[..r.len().saturating_sub(1)].iter().copied())
    }

    /// Area enclosed under the even-odd rule, assuming rings do not cross.
    pub fn area(&self) -> f64 {
        // Nested rings alternate between filled and hole, so signed depth
        // decides whether a ring adds or removes its area.
        self.rings
            .iter()
            .enumerate()
            .map(|(i, ring)| {
                let a = shoelace(ring).abs();
                let probe = ring[0];
                let depth = self
                    .rings
                    .iter()
                    .enumerate()
                    .filter(|(j, other)| *j != i && crossings(probe, other) % 2 == 1)
                    .count();
                if depth % 2 == 0 {
                    a
                } else {
                    -a
                }
            })
            .sum()
    }
}

pub(crate) fn segments(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    ring.windows(2).map(|w| (w[0], w[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn shoelace(ring: &[Point]) -> f64 {
    segments(ring)
        .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
        .sum::<f64>()
        / 2.0
}

/// Number of ring edges crossed by a ray from `p` toward `+x`.
fn crossings(p: Point, ring: &[Point]) -> usize {
    segments(ring)
        .filter(|(a, b)| {
            if (a[1] > p[1]) == (b[1] > p[1]) {
                return false;
            }
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            p[0] < x
        })
        .count()
}

/// Tolerance for treating a point as lying on a ring edge.
pub(crate) fn on_edge_tolerance(set: &BoundarySet) -> f64 {
    let scale = set
        .rings
        .iter()
        .flatten()
        .flatten()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    1e-12 * scale
}

/// Even-odd membership test. Points on an edge count as inside.
pub fn point_in_region(point: Point, boundary: &BoundarySet) -> bool {
    let tol = on_edge_tolerance(boundary);
    if boundary
        .segments()
        .any(|(a, b)| point_segment_distance(point, a, b) <= tol)
    {
        return true;
    }
    let total: usize = boundary.rings.iter().map(|r| crossings(point, r)).sum();
    total % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn circle(cx: f64, cy: f64, r: f64, n: usize) -> Vec<Point> {
        (0..=n)
            .map(|k| {
                let t = std::f64::consts::TAU * (k % n) as f64 / n as f64;
                [cx + r * t.cos(), cy + r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn unit_circle_membership() {
        let b = BoundarySet::new(vec![circle(0.0, 0.0, 1.0, 360)], 0.0).unwrap();
        assert!(point_in_region([0.0, 0.0], &b));
        assert!(!point_in_region([5.0, 5.0], &b));
    }

    #[test]
    fn annulus_hole_is_outside() {
        let b = BoundarySet::new(
            vec![circle(0.0, 0.0, 2.0, 64), circle(0.0, 0.0, 1.0, 64)],
            0.0,
        )
        .unwrap();
        assert!(!point_in_region([0.0, 0.0], &b));
        assert!(point_in_region([1.5, 0.0], &b));
        assert!(!point_in_region([3.0, 0.0], &b));
        let outer = std::f64::consts::PI * 4.0;
        assert!((b.area() - outer * 0.75).abs() < 0.05);
    }

    #[test]
    fn edge_points_are_inside() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let b = BoundarySet::new(vec![square], 0.0).unwrap();
        assert!(point_in_region([1.0, 0.5], &b));
        assert!(point_in_region([0.5, 0.0], &b));
        assert!(point_in_region([0.0, 0.0], &b));
        assert_eq!(b.rings[0].len(), 5);
        assert_eq!(b.vertices().count(), 4);
    }

    #[test]
    fn degenerate_rings_are_rejected() {
        assert!(matches!(
            BoundarySet::new(vec![], 0.0),
            Err(Error::NoBoundary)
        ));
        let flat = vec![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(
            BoundarySet::new(vec![flat], 0.0),
            Err(Error::DegenerateRing { ring: 0, .. })
        ));
        let two = vec![[0.0, 0.0], [1.0, 0.0]];
        assert!(BoundarySet::new(vec![two], 0.0).is_err());
    }
}
