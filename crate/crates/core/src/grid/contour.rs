//! Marching-squares extraction of the zero level set.
//!
//! Grid nodes are the cell centers. The node lattice is padded with a ring
//! of virtual exterior nodes so every contour closes; crossings on an edge to
//! a virtual node are clipped onto the real node, which keeps rings inside the
//! grid extent. A node is inside when its value is `<= 0`. Saddle cells are
//! resolved by the mean of the four corners.

use std::collections::HashMap;

use super::boundary::{BoundarySet, Point};
use super::ScalarField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes `(ix, iy)` and `(ix + 1, iy)`.
    Horizontal(i64, i64),
    /// Between nodes `(ix, iy)` and `(ix, iy + 1)`.
    Vertical(i64, i64),
}

struct Lattice<'a> {
    field: &'a ScalarField,
    nx: i64,
    ny: i64,
}

impl Lattice<'_> {
    fn is_real(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && ix < self.nx && iy < self.ny
    }

    fn value(&self, ix: i64, iy: i64) -> Option<f64> {
        self.is_real(ix, iy)
            .then(|| self.field.at(ix as usize, iy as usize))
    }

    fn inside(&self, ix: i64, iy: i64) -> bool {
        self.value(ix, iy).is_some_and(|v| v <= 0.0)
    }

    fn position(&self, ix: i64, iy: i64) -> Point {
        let g = self.field.grid();
        [g.x(ix as usize), g.y(iy as usize)]
    }

    fn crossing(&self, edge: Edge) -> Point {
        let (a, b) = match edge {
            Edge::Horizontal(ix, iy) => ((ix, iy), (ix + 1, iy)),
            Edge::Vertical(ix, iy) => ((ix, iy), (ix, iy + 1)),
        };
        match (self.value(a.0, a.1), self.value(b.0, b.1)) {
            (Some(va), Some(vb)) => {
                let pa = self.position(a.0, a.1);
                let pb = self.position(b.0, b.1);
                let t = if va == vb { 0.5 } else { va / (va - vb) };
                [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
            }
            (Some(_), None) => self.position(a.0, a.1),
            (None, Some(_)) => self.position(b.0, b.1),
            (None, None) => unreachable!("edge between two virtual nodes never crosses"),
        }
    }

    fn saddle_connected(&self, ix: i64, iy: i64) -> bool {
        let corners = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
        // Virtual nodes are never part of a saddle (they are outside and a
        // saddle needs two diagonal inside nodes), so all four are real.
        let mean = corners
            .iter()
            .map(|&(x, y)| self.value(x, y).unwrap_or(f64::INFINITY))
            .sum::<f64>()
            / 4.0;
        mean <= 0.0
    }

    /// Oriented segments `(from, to)` of one cell, interior on the left.
    fn cell_segments(&self, ix: i64, iy: i64, out: &mut Vec<(Edge, Edge)>) {
        let bl = self.inside(ix, iy) as u8;
        let br = self.inside(ix + 1, iy) as u8;
        let tr = self.inside(ix + 1, iy + 1) as u8;
        let tl = self.inside(ix, iy + 1) as u8;
        let case = bl | br << 1 | tr << 2 | tl << 3;

        let bottom = Edge::Horizontal(ix, iy);
        let right = Edge::Vertical(ix + 1, iy);
        let top = Edge::Horizontal(ix, iy + 1);
        let left = Edge::Vertical(ix, iy);

        match case {
            0 | 15 => {}
            1 => out.push((bottom, left)),
            2 => out.push((right, bottom)),
            3 => out.push((right, left)),
            4 => out.push((top, right)),
            5 => {
                if self.saddle_connected(ix, iy) {
                    out.push((bottom, right));
                    out.push((top, left));
                } else {
                    out.push((bottom, left));
                    out.push((top, right));
                }
            }
            6 => out.push((top, bottom)),
            7 => out.push((top, left)),
            8 => out.push((left, top)),
            9 => out.push((bottom, top)),
            10 => {
                if self.saddle_connected(ix, iy) {
                    out.push((left, bottom));
                    out.push((right, top));
                } else {
                    out.push((right, bottom));
                    out.push((left, top));
                }
            }
            11 => out.push((right, top)),
            12 => out.push((left, right)),
            13 => out.push((bottom, right)),
            14 => out.push((left, bottom)),
            _ => unreachable!(),
        }
    }
}

/// Traces the 0-level of `field` into closed rings (interior on the left,
/// i.e. counter-clockwise outer rings).
pub fn extract_zero_contour(field: &ScalarField) -> Result<BoundarySet> {
    if !field.is_fully_observed() {
        return Err(Error::MaskedInput(
            "contour extraction needs a fully observed field".into(),
        ));
    }
    let (lo, hi) = field.min_max().ok_or(Error::NoZeroLevelSet)?;
    if lo > 0.0 || hi <= 0.0 {
        return Err(Error::NoZeroLevelSet);
    }
    let grid = field.grid();
    let lattice = Lattice {
        field,
        nx: grid.nx as i64,
        ny: grid.ny as i64,
    };

    let mut segments = Vec::new();
    for iy in -1..lattice.ny {
        for ix in -1..lattice.nx {
            lattice.cell_segments(ix, iy, &mut segments);
        }
    }

    let mut next: HashMap<Edge, Edge> = HashMap::with_capacity(segments.len());
    for &(from, to) in &segments {
        next.insert(from, to);
    }

    let mut rings = Vec::new();
    // Walk segments in creation order so output is deterministic.
    for &(start, _) in &segments {
        if !next.contains_key(&start) {
            continue;
        }
        let mut ring: Vec<Point> = Vec::new();
        let mut edge = start;
        while let Some(to) = next.remove(&edge) {
            let p = lattice.crossing(edge);
            if ring.last() != Some(&p) {
                ring.push(p);
            }
            edge = to;
        }
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() >= 3 {
            let first = ring[0];
            ring.push(first);
            rings.push(ring);
        }
    }
    if rings.is_empty() {
        return Err(Error::NoZeroLevelSet);
    }
    BoundarySet::new(rings, 0.0)
}
