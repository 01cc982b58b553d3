//! Gluing a distributed mesh back into one serial mesh.

use std::collections::{BTreeMap, BTreeSet};

use super::{DistributedMesh, Mesh, MeshError};
use crate::overlap::{check_mirror, Direction, Overlap};
use crate::section::{Section, UpdateMode};
use crate::{Point, Rank};

/// Merges all local meshes by point id.
///
/// Before merging it checks that both overlaps of every rank mirror each
/// other across the group and that the sharing overlap links exactly the
/// ranks holding each point. Every copy of a point must carry the same cone
/// and the same section values.
pub fn assemble(dm: &DistributedMesh) -> Result<Mesh, MeshError> {
    let Some(first) = dm.ranks.first() else {
        return Err(MeshError::NoParts);
    };
    for (i, local) in dm.ranks.iter().enumerate() {
        if local.rank != i {
            return Err(MeshError::Inconsistent(format!(
                "rank {i} is labeled {}",
                local.rank
            )));
        }
        let same = local.mesh.topological_dim == first.mesh.topological_dim
            && local.mesh.embedding_dim == first.mesh.embedding_dim
            && local.mesh.sections.keys().eq(first.mesh.sections.keys());
        if !same {
            return Err(MeshError::Inconsistent(format!(
                "rank {i} disagrees with rank 0 on dimensions or section names"
            )));
        }
    }
    let sharing: Vec<Overlap> = dm.ranks.iter().map(|l| l.overlap.clone()).collect();
    check_mirror(&sharing)?;
    let migration: Vec<Overlap> = dm.ranks.iter().map(|l| l.migration.clone()).collect();
    check_mirror(&migration)?;

    let mut holders: BTreeMap<Point, Vec<Rank>> = BTreeMap::new();
    for local in &dm.ranks {
        for p in local.mesh.sieve.points() {
            holders.entry(p).or_default().push(local.rank);
        }
    }
    check_sharing(dm, &holders)?;

    let mut mesh = Mesh::new(first.mesh.topological_dim, first.mesh.embedding_dim);
    for (&p, ranks) in &holders {
        let cone = dm.ranks[ranks[0]].mesh.sieve.cone(p);
        for &r in &ranks[1..] {
            let other = dm.ranks[r].mesh.sieve.cone(p);
            if other != cone {
                return Err(MeshError::Inconsistent(format!(
                    "cone of point {p} is {cone:?} on rank {} but {other:?} on rank {r}",
                    ranks[0]
                )));
            }
        }
        mesh.sieve.add_point(p);
        for &q in cone {
            mesh.sieve.add_arrow(q, p)?;
        }
    }

    for name in first.mesh.sections.keys() {
        let mut values: BTreeMap<Point, (Rank, &[f64])> = BTreeMap::new();
        for local in &dm.ranks {
            let section = &local.mesh.sections[name];
            for p in section.points() {
                let here = section.restrict_point(p)?;
                match values.get(&p) {
                    Some(&(r, there)) if there != here => {
                        return Err(MeshError::Inconsistent(format!(
                            "section '{name}' differs over point {p} between ranks {r} and {}",
                            local.rank
                        )))
                    }
                    Some(_) => {}
                    None => {
                        values.insert(p, (local.rank, here));
                    }
                }
            }
        }
        let mut section = Section::with_layout(values.iter().map(|(&p, (_, v))| (p, v.len())));
        for (&p, (_, v)) in &values {
            section.update(p, v, UpdateMode::Replace)?;
        }
        mesh.sections.insert(name.clone(), section);
    }
    Ok(mesh)
}

fn check_sharing(
    dm: &DistributedMesh,
    holders: &BTreeMap<Point, Vec<Rank>>,
) -> Result<(), MeshError> {
    for local in &dm.ranks {
        let mut linked: BTreeSet<(Point, Rank)> = BTreeSet::new();
        for link in local.overlap.links(Direction::Send) {
            if link.remote != link.local {
                return Err(MeshError::Inconsistent(format!(
                    "rank {} links point {} to a different point {} on rank {}",
                    local.rank, link.local, link.remote, link.rank
                )));
            }
            linked.insert((link.local, link.rank));
        }
        let expected: BTreeSet<(Point, Rank)> = local
            .mesh
            .sieve
            .points()
            .flat_map(|p| {
                holders[&p]
                    .iter()
                    .filter(|&&r| r != local.rank)
                    .map(move |&r| (p, r))
            })
            .collect();
        if let Some((p, r)) = expected.symmetric_difference(&linked).next() {
            return Err(MeshError::Inconsistent(format!(
                "rank {} has a wrong sharing link for point {p} and rank {r}",
                local.rank
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::meshops::{distribute, PartitionAssignment};

    #[test]
    fn single_rank_round_trip() {
        let mesh = fixtures::doublet();
        let dm = distribute(&mesh, &PartitionAssignment::from_ranks(&[0, 0]), 1).unwrap();
        assert_eq!(assemble(&dm).unwrap(), mesh);
    }

    #[test]
    fn tri8_round_trip() {
        let mesh = fixtures::tri8();
        let dm = distribute(&mesh, &fixtures::tri8_split_assignment(), 2).unwrap();
        assert_eq!(assemble(&dm).unwrap(), mesh);
    }

    #[test]
    fn corrupted_cone_is_detected() {
        let mesh = fixtures::doublet();
        let mut dm = distribute(&mesh, &PartitionAssignment::from_ranks(&[0, 1]), 2).unwrap();
        dm.ranks[1].mesh.sieve.remove_arrow(Point(7), Point(4));
        assert!(matches!(assemble(&dm), Err(MeshError::Inconsistent(_))));
    }

    #[test]
    fn corrupted_coordinates_are_detected() {
        let mesh = fixtures::doublet();
        let mut dm = distribute(&mesh, &PartitionAssignment::from_ranks(&[0, 1]), 2).unwrap();
        let coords = dm.ranks[1].mesh.sections.get_mut("coordinates").unwrap();
        coords
            .update(Point(7), &[0.5, 0.0], UpdateMode::Replace)
            .unwrap();
        assert!(matches!(assemble(&dm), Err(MeshError::Inconsistent(_))));
    }

    #[test]
    fn missing_sharing_link_is_detected() {
        let mesh = fixtures::doublet();
        let mut dm = distribute(&mesh, &PartitionAssignment::from_ranks(&[0, 1]), 2).unwrap();
        for local in dm.ranks.iter_mut() {
            local.overlap = Overlap::new(local.rank, 2);
        }
        assert!(matches!(assemble(&dm), Err(MeshError::Inconsistent(_))));
    }
}
