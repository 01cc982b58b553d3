//! Small meshes used throughout the tests, the acceptance suite and the CLI
//! examples.
//!
//! * the doublet: two triangles sharing edge 4, fully interpolated, with
//!   cells 0-1, edges 2-6 and vertices 7-10;
//! * tri8: a 2x2 grid of squares, each cut into two triangles, stored as
//!   cells 0-7 and vertices 8-16 only;
//! * two_hex: two hexahedra side by side, cells 0-1 and vertices 2-13.

use crate::meshops::{Mesh, PartitionAssignment};
use crate::sieve::Sieve;
use crate::toolkit::interpolate;
use crate::{Point, Rank};

/// `(edge, [vertex, vertex])` for edges 2-6.
const DOUBLET_EDGES: [(u64, [u64; 2]); 5] = [
    (2, [8, 9]),
    (3, [9, 7]),
    (4, [7, 8]),
    (5, [7, 10]),
    (6, [10, 8]),
];

const DOUBLET_CELLS: [(u64, [u64; 3]); 2] = [(0, [2, 3, 4]), (1, [4, 5, 6])];

pub const DOUBLET_COORDINATES: [(u64, [f64; 2]); 4] = [
    (7, [0.0, 0.0]),
    (8, [1.0, 1.0]),
    (9, [1.0, 0.0]),
    (10, [0.0, 1.0]),
];

/// The doublet as a cells-and-vertices mesh file. Interpolating it and
/// renumbering by stratum gives [`doublet`] back.
pub const DOUBLET_MESH: &str = "\
dim 2 2
cells 2 3
1 2 0
1 0 3
vertices 4
0 0
1 1
1 0
0 1
";

pub fn doublet_sieve() -> Sieve {
    let mut s = Sieve::new();
    for (cell, cone) in DOUBLET_CELLS {
        for e in cone {
            s.add_arrow(Point(e), Point(cell)).expect("proper arrow");
        }
    }
    for (edge, cone) in DOUBLET_EDGES {
        for v in cone {
            s.add_arrow(Point(v), Point(edge)).expect("proper arrow");
        }
    }
    s
}

/// The doublet sieve with its coordinates.
pub fn doublet() -> Mesh {
    let mut mesh = Mesh::from_cells(
        2,
        2,
        [],
        DOUBLET_COORDINATES
            .iter()
            .map(|(v, x)| (Point(*v), x.as_slice())),
    )
    .expect("fixture coordinates");
    mesh.sieve = doublet_sieve();
    mesh
}

/// Vertex at grid position `(i, j)` of tri8.
pub fn tri8_vertex(i: u64, j: u64) -> Point {
    Point(8 + 3 * j + i)
}

const TRI8_CELLS: [[(u64, u64); 3]; 8] = [
    [(0, 0), (1, 0), (1, 1)],
    [(0, 0), (1, 1), (0, 1)],
    [(1, 0), (2, 0), (2, 1)],
    [(1, 0), (2, 1), (1, 1)],
    [(0, 1), (1, 2), (0, 2)],
    [(0, 1), (1, 1), (1, 2)],
    [(1, 1), (2, 1), (2, 2)],
    [(1, 1), (2, 2), (1, 2)],
];

pub fn tri8() -> Mesh {
    let cells: Vec<(Point, Vec<Point>)> = TRI8_CELLS
        .iter()
        .enumerate()
        .map(|(c, corners)| {
            let cone = corners.iter().map(|&(i, j)| tri8_vertex(i, j)).collect();
            (Point(c as u64), cone)
        })
        .collect();
    let coords: Vec<(Point, [f64; 2])> = (0..3)
        .flat_map(|j| (0..3).map(move |i| (tri8_vertex(i, j), [i as f64, j as f64])))
        .collect();
    Mesh::from_cells(
        2,
        2,
        cells.iter().map(|(c, cone)| (*c, cone.as_slice())),
        coords.iter().map(|(v, x)| (*v, x.as_slice())),
    )
    .expect("fixture mesh")
}

/// tri8 in the mesh file format.
pub const TRI8_MESH: &str = "\
dim 2 2
cells 8 3
0 1 4
0 4 3
1 2 5
1 5 4
3 7 6
3 4 7
4 5 8
4 8 7
vertices 9
0 0
1 0
2 0
0 1
1 1
2 1
0 2
1 2
2 2
";

/// Triangles (0, 1, 2, 4) to rank 0 and (3, 5, 6, 7) to rank 1.
pub fn tri8_split_assignment() -> PartitionAssignment {
    PartitionAssignment::from_ranks(&TRI8_SPLIT_RANKS)
}

/// Triangles (4, 5, 6, 7) to rank 0 and (0, 1, 2, 3) to rank 1.
pub fn tri8_initial_assignment() -> PartitionAssignment {
    PartitionAssignment::from_ranks(&TRI8_INITIAL_RANKS)
}

const TRI8_SPLIT_RANKS: [Rank; 8] = [0, 0, 0, 1, 0, 1, 1, 1];
const TRI8_INITIAL_RANKS: [Rank; 8] = [1, 1, 1, 1, 0, 0, 0, 0];

/// Vertex at lattice position `(i, j, k)` of two_hex.
pub fn two_hex_vertex(i: u64, j: u64, k: u64) -> Point {
    Point(2 + i + 3 * j + 6 * k)
}

/// Two unit hexahedra along x, as cells and vertices. Each cell lists its
/// bottom face counterclockwise, then the top face above it.
pub fn two_hex() -> Mesh {
    let hex = |x: u64| -> Vec<Point> {
        let quad = [(x, 0), (x + 1, 0), (x + 1, 1), (x, 1)];
        (0..2)
            .flat_map(|k| quad.iter().map(move |&(i, j)| two_hex_vertex(i, j, k)))
            .collect()
    };
    let cells = [(Point(0), hex(0)), (Point(1), hex(1))];
    let coords: Vec<(Point, [f64; 3])> = (0..2)
        .flat_map(|k| {
            (0..2).flat_map(move |j| {
                (0..3).map(move |i| (two_hex_vertex(i, j, k), [i as f64, j as f64, k as f64]))
            })
        })
        .collect();
    Mesh::from_cells(
        3,
        3,
        cells.iter().map(|(c, cone)| (*c, cone.as_slice())),
        coords.iter().map(|(v, x)| (*v, x.as_slice())),
    )
    .expect("fixture mesh")
}

/// [`two_hex`] with its 11 faces and 20 edges.
pub fn two_hex_interpolated() -> Mesh {
    interpolate(&two_hex()).expect("hexahedra interpolate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doublet_shape() {
        let s = doublet_sieve();
        assert_eq!(s.num_points(), 11);
        assert_eq!(s.num_arrows(), 16);
        assert_eq!(doublet().coordinates().total_size(), 8);
    }

    #[test]
    fn tri8_shape() {
        let m = tri8();
        assert_eq!(m.cells().len(), 8);
        assert_eq!(m.vertices().len(), 9);
        assert_eq!(
            m.coordinates().restrict_point(Point(16)).unwrap(),
            &[2.0, 2.0]
        );
    }

    #[test]
    fn two_hex_shape() {
        let m = two_hex_interpolated();
        let strata = m.sieve.stratify().unwrap();
        let sizes: Vec<usize> = (0..4).map(|d| strata.depth_stratum(d).len()).collect();
        assert_eq!(sizes, [12, 20, 11, 2]);
    }
}
