//! The dual graph: cells as vertices, an edge between cells that share a
//! face.

use std::collections::{BTreeMap, BTreeSet};

use crate::sieve::Sieve;
use crate::Point;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DualGraph {
    vertices: Vec<Point>,
    edges: BTreeSet<(Point, Point)>,
}

impl DualGraph {
    /// Cells, ascending.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Edges `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: Point, b: Point) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Neighbors of `c`, ascending.
    pub fn neighbors(&self, c: Point) -> impl Iterator<Item = Point> + '_ {
        let mut out: Vec<Point> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == c {
                    Some(b)
                } else if b == c {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.into_iter()
    }

    fn insert(&mut self, a: Point, b: Point) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }
}

fn cells<A>(sieve: &Sieve<A>) -> Vec<Point> {
    sieve
        .points()
        .filter(|&p| sieve.support(p).is_empty() && !sieve.cone(p).is_empty())
        .collect()
}

/// Dual edges between cells sharing at least `dim` vertices.
///
/// Vertices of a cell come from its closure, cells around a vertex from its
/// star, so this works on interpolated and cells-and-vertices sieves alike.
pub fn build_dual<A>(sieve: &Sieve<A>, dim: usize) -> DualGraph {
    let threshold = dim.max(1);
    let mut dual = DualGraph {
        vertices: cells(sieve),
        edges: BTreeSet::new(),
    };
    for &c in &dual.vertices.clone() {
        let mut shared: BTreeMap<Point, usize> = BTreeMap::new();
        for v in sieve
            .closure(c)
            .into_iter()
            .filter(|&v| sieve.cone(v).is_empty())
        {
            for d in sieve.star(v) {
                if d > c && sieve.support(d).is_empty() {
                    *shared.entry(d).or_default() += 1;
                }
            }
        }
        for (d, n) in shared {
            if n >= threshold {
                dual.insert(c, d);
            }
        }
    }
    dual
}

/// The dual read off the reversed sieve: there, cells sit at depth 0 and
/// every depth-1 point with exactly two points in its cone joins two cells.
/// Only meaningful for interpolated sieves.
pub fn dual_via_reversed<A: Clone>(sieve: &Sieve<A>) -> DualGraph {
    let reversed = sieve.reversed();
    let mut dual = DualGraph {
        vertices: cells(sieve),
        edges: BTreeSet::new(),
    };
    let Ok(strata) = reversed.stratify() else {
        return dual;
    };
    for f in strata.depth_stratum(1) {
        if let [a, b] = reversed.cone(f) {
            dual.insert(*a, *b);
        }
    }
    dual
}
