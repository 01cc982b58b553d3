//! Materializing edges and faces, and renumbering points by stratum.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::meshops::Mesh;
use crate::sieve::{Sieve, SieveError};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpolateError {
    #[error("cell {cell} has {arity} vertices, which is no known {dim}-dimensional shape")]
    UnknownShape {
        cell: Point,
        dim: usize,
        arity: usize,
    },
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

/// Local faces of a cell as positions in its vertex list. In 2D the faces
/// are the edges.
fn local_faces(dim: usize, arity: usize) -> Option<&'static [&'static [usize]]> {
    Some(match (dim, arity) {
        (2, 3) => &[&[0, 1], &[1, 2], &[2, 0]],
        (2, 4) => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
        (3, 4) => &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]],
        (3, 8) => &[
            &[0, 1, 2, 3],
            &[4, 5, 6, 7],
            &[0, 1, 5, 4],
            &[1, 2, 6, 5],
            &[2, 3, 7, 6],
            &[3, 0, 4, 7],
        ],
        _ => return None,
    })
}

/// Numbers vertex tuples by first appearance, identifying tuples with the
/// same vertex set.
struct Numbering {
    next: u64,
    ids: HashMap<Vec<Point>, Point>,
    /// `(id, vertices in first-seen order)`.
    created: Vec<(Point, Vec<Point>)>,
}

impl Numbering {
    fn id(&mut self, vertices: Vec<Point>) -> Point {
        let mut key = vertices.clone();
        key.sort_unstable();
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = Point(self.next);
        self.next += 1;
        self.ids.insert(key, id);
        self.created.push((id, vertices));
        id
    }
}

/// Adds the edges (and in 3D the faces) missing from a cells-and-vertices
/// mesh.
///
/// New points get ids above the current maximum, in order of first
/// appearance: cells are walked in id order and each cell's faces in its
/// local order; in 3D all faces are numbered before any edge. A cell's cone
/// becomes its faces, a face's cone its edges, an edge's cone its two
/// vertices. Meshes that already have intermediate points, and 1D or 0D
/// meshes, are returned as they are.
pub fn interpolate(mesh: &Mesh) -> Result<Mesh, InterpolateError> {
    let sieve = &mesh.sieve;
    let cells = mesh.cells();
    let dim = mesh.topological_dim;
    let interpolated = cells
        .iter()
        .any(|&c| sieve.cone(c).iter().any(|&q| !sieve.cone(q).is_empty()));
    if dim < 2 || interpolated || cells.is_empty() {
        return Ok(mesh.clone());
    }
    let next = sieve.points().last().map_or(0, |p| p.0 + 1);
    let mut faces = Numbering {
        next,
        ids: HashMap::new(),
        created: Vec::new(),
    };
    let mut cell_cones = Vec::with_capacity(cells.len());
    for &c in &cells {
        let corners = sieve.cone(c);
        let shape = local_faces(dim, corners.len()).ok_or(InterpolateError::UnknownShape {
            cell: c,
            dim,
            arity: corners.len(),
        })?;
        let cone: Vec<Point> = shape
            .iter()
            .map(|f| faces.id(f.iter().map(|&i| corners[i]).collect()))
            .collect();
        cell_cones.push((c, cone));
    }
    let mut out = Sieve::new();
    for p in sieve.points() {
        out.add_point(p);
    }
    for (c, cone) in &cell_cones {
        for &f in cone {
            out.add_arrow(f, *c)?;
        }
    }
    if dim == 2 {
        for (e, ends) in &faces.created {
            for &v in ends {
                out.add_arrow(v, *e)?;
            }
        }
    } else {
        let mut edges = Numbering {
            next: faces.next,
            ids: HashMap::new(),
            created: Vec::new(),
        };
        for (f, corners) in &faces.created {
            for (i, &a) in corners.iter().enumerate() {
                let b = corners[(i + 1) % corners.len()];
                out.add_arrow(edges.id(vec![a, b]), *f)?;
            }
        }
        for (e, ends) in &edges.created {
            for &v in ends {
                out.add_arrow(v, *e)?;
            }
        }
    }
    Ok(Mesh {
        sieve: out,
        ..mesh.clone()
    })
}

/// Renames every point through `map` (points missing from it keep their id),
/// keeping cone order and arrow order.
pub fn relabel(mesh: &Mesh, map: &BTreeMap<Point, Point>) -> Result<Mesh, SieveError> {
    let rename = |p: Point| map.get(&p).copied().unwrap_or(p);
    let mut sieve = Sieve::new();
    for p in mesh.sieve.points() {
        sieve.add_point(rename(p));
    }
    for (s, t, _) in mesh.sieve.arrows() {
        sieve.add_arrow(rename(s), rename(t))?;
    }
    Ok(Mesh {
        topological_dim: mesh.topological_dim,
        embedding_dim: mesh.embedding_dim,
        sieve,
        sections: mesh
            .sections
            .iter()
            .map(|(name, s)| (name.clone(), s.relabeled(map)))
            .collect(),
    })
}

/// Renumbers points consecutively from 0, highest depth first (cells, then
/// faces and edges, then vertices), keeping the old id order within each
/// stratum. Returns the renumbered mesh and the old-to-new map.
pub fn relabel_strata(mesh: &Mesh) -> Result<(Mesh, BTreeMap<Point, Point>), SieveError> {
    let strata = mesh.sieve.stratify()?;
    let mut order: Vec<Point> = mesh.sieve.points().collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(strata.depth(p)), p));
    let map: BTreeMap<Point, Point> = order
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, Point(i as u64)))
        .collect();
    Ok((relabel(mesh, &map)?, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::toolkit::read_mesh;

    #[test]
    fn doublet_file_reproduces_the_fixture() {
        let raw = read_mesh(fixtures::DOUBLET_MESH).unwrap();
        let interpolated = interpolate(&raw).unwrap();
        assert_eq!(interpolated.sieve.num_points(), 11);
        let (relabeled, _) = relabel_strata(&interpolated).unwrap();
        assert_eq!(relabeled, fixtures::doublet());
    }

    #[test]
    fn idempotent() {
        for mesh in [fixtures::tri8(), fixtures::two_hex()] {
            let once = interpolate(&mesh).unwrap();
            assert_eq!(interpolate(&once).unwrap(), once);
        }
        let d = fixtures::doublet();
        assert_eq!(interpolate(&d).unwrap(), d);
    }

    #[test]
    fn two_hex_counts() {
        let m = interpolate(&fixtures::two_hex()).unwrap();
        let strata = m.sieve.stratify().unwrap();
        assert_eq!(strata.depth_stratum(2).len(), 11);
        assert_eq!(strata.depth_stratum(1).len(), 20);
        // faces 14.. then edges 25..
        assert_eq!(strata.depth_stratum(2).first(), Some(&Point(14)));
        assert_eq!(strata.depth_stratum(1).first(), Some(&Point(25)));
        assert!(m
            .sieve
            .cone(Point(0))
            .iter()
            .all(|f| m.sieve.cone(*f).len() == 4));
        // the shared face: 4th face of cell 0, 6th of cell 1
        assert_eq!(m.sieve.cone(Point(0))[3], m.sieve.cone(Point(1))[5]);
    }

    #[test]
    fn tri8_edges() {
        let m = interpolate(&fixtures::tri8()).unwrap();
        // 16 edges on a 2x2 grid of squares with diagonals
        assert_eq!(m.sieve.num_points(), 17 + 16);
        assert_eq!(
            m.sieve.cone(Point(0)),
            crate::points(&[17, 18, 19]).as_slice()
        );
        assert_eq!(m.sieve.cone(Point(17)), crate::points(&[8, 9]).as_slice());
    }

    #[test]
    fn tetrahedron() {
        let corners = crate::points(&[1, 2, 3, 4]);
        let xs = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let mesh = Mesh::from_cells(
            3,
            3,
            [(Point(0), corners.as_slice())],
            corners.iter().zip(&xs).map(|(&v, x)| (v, x.as_slice())),
        )
        .unwrap();
        let m = interpolate(&mesh).unwrap();
        let strata = m.sieve.stratify().unwrap();
        assert_eq!(strata.depth_stratum(2).len(), 4);
        assert_eq!(strata.depth_stratum(1).len(), 6);
    }

    #[test]
    fn unknown_shape() {
        let corners = crate::points(&[1, 2, 3, 4, 5]);
        let mesh = Mesh::from_cells(2, 2, [(Point(0), corners.as_slice())], []).unwrap();
        assert_eq!(
            interpolate(&mesh),
            Err(InterpolateError::UnknownShape {
                cell: Point(0),
                dim: 2,
                arity: 5
            })
        );
    }

    #[test]
    fn relabel_keeps_strata_order() {
        let m = interpolate(&fixtures::tri8()).unwrap();
        let (r, map) = relabel_strata(&m).unwrap();
        assert_eq!(map[&Point(8)], Point(24));
        assert_eq!(map[&Point(17)], Point(8));
        assert_eq!(r.sieve.num_arrows(), m.sieve.num_arrows());
        assert_eq!(
            r.coordinates().restrict_point(Point(24)).unwrap(),
            m.coordinates().restrict_point(Point(8)).unwrap()
        );
    }
}
