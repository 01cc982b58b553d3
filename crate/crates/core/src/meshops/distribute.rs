//! Distribution and redistribution of a mesh over a process group.
//!
//! Both run [`migrate_rank`] on every rank. Each rank computes the point sets
//! of the partitions it feeds, keeps its own, and then completes, in order:
//! the partition section over a partition overlap, the cone section over the
//! resulting sieve overlap, and every named section. Distribution uses a
//! partition overlap rooted at rank 0; redistribution one where every rank
//! sends to and receives from every other. Nothing else differs.
//!
//! Point ids are global and kept as they are.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use super::partition::partition_points;
use super::{DistributedMesh, LocalMesh, Mesh, MeshError, PartitionAssignment};
use crate::comm::{run_group, Communicator};
use crate::completion::{complete_section, cone_sections, partition_sections, Atlased, Fuse};
use crate::overlap::{all_to_all_overlap, broadcast_overlap, Delta, Direction, Overlap};
use crate::section::{Restrict, Section, SectionError, Sizer, UpdateMode};
use crate::sieve::Sieve;
use crate::{Point, Rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pattern {
    Scatter,
    AllToAll,
}

/// Scatters `serial`, held by rank 0, over `size` ranks.
///
/// The assignment must cover every point of one stratum (all cells, or all
/// faces, ...) and nothing else. It is checked before any communication.
pub fn distribute(
    serial: &Mesh,
    assignment: &PartitionAssignment,
    size: usize,
) -> Result<DistributedMesh, MeshError> {
    validate_assignment(&serial.sieve, assignment, size)?;
    let none = PartitionAssignment::new();
    let run = run_group(size, |comm| {
        if comm.rank() == 0 {
            migrate_rank(comm, Some(serial), assignment, Pattern::Scatter)
        } else {
            migrate_rank(comm, None, &none, Pattern::Scatter)
        }
    })?;
    Ok(DistributedMesh {
        ranks: run.results,
        transcript: run.transcript,
    })
}

/// Moves an already distributed mesh to a new assignment of the elements the
/// ranks currently own.
pub fn redistribute(
    current: &DistributedMesh,
    assignment: &PartitionAssignment,
) -> Result<DistributedMesh, MeshError> {
    let size = current.size();
    if size == 0 {
        return Err(MeshError::NoParts);
    }
    let owned: BTreeSet<Point> = current
        .ranks
        .iter()
        .flat_map(|l| l.owned.iter().copied())
        .collect();
    if let Some(e) = owned.iter().find(|&&e| assignment.get(e).is_none()) {
        return Err(MeshError::Unassigned(*e));
    }
    for (e, rank) in assignment.iter() {
        if !owned.contains(&e) {
            return Err(MeshError::UnknownElement(e));
        }
        if rank >= size {
            return Err(MeshError::RankOutOfRange {
                point: e,
                rank,
                size,
            });
        }
    }
    let local: Vec<PartitionAssignment> = current
        .ranks
        .iter()
        .map(|l| assignment.restricted(&l.owned))
        .collect();
    let run = run_group(size, |comm| {
        let me = comm.rank();
        migrate_rank(
            comm,
            Some(&current.ranks[me].mesh),
            &local[me],
            Pattern::AllToAll,
        )
    })?;
    Ok(DistributedMesh {
        ranks: run.results,
        transcript: run.transcript,
    })
}

fn validate_assignment<A>(
    sieve: &Sieve<A>,
    assignment: &PartitionAssignment,
    size: usize,
) -> Result<(), MeshError> {
    if size == 0 {
        return Err(MeshError::NoParts);
    }
    for (e, rank) in assignment.iter() {
        if !sieve.contains(e) {
            return Err(MeshError::UnknownElement(e));
        }
        if rank >= size {
            return Err(MeshError::RankOutOfRange {
                point: e,
                rank,
                size,
            });
        }
    }
    let strata = sieve.stratify()?;
    let level = |p: Point| (strata.height(p), strata.depth(p));
    let Some(first) = assignment.elements().next() else {
        // nothing assigned: only a mesh without cells may be distributed
        return match sieve
            .points()
            .find(|&p| !sieve.cone(p).is_empty() && sieve.support(p).is_empty())
        {
            Some(cell) => Err(MeshError::Unassigned(cell)),
            None => Ok(()),
        };
    };
    if let Some(e) = assignment.elements().find(|&e| level(e) != level(first)) {
        return Err(MeshError::MixedStrata(first, e));
    }
    match sieve
        .points()
        .find(|&p| level(p) == level(first) && assignment.get(p).is_none())
    {
        Some(p) => Err(MeshError::Unassigned(p)),
        None => Ok(()),
    }
}

/// The same bytes over every partition point.
struct Broadcast(Vec<u8>);

impl Sizer for Broadcast {
    fn size(&self, _p: Point) -> usize {
        self.0.len()
    }
}

impl Restrict<u8> for Broadcast {
    fn restrict(&self, _p: Point) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Metadata {
    topological_dim: usize,
    embedding_dim: usize,
    sections: Vec<String>,
}

impl Metadata {
    fn of(mesh: &Mesh) -> Self {
        Self {
            topological_dim: mesh.topological_dim,
            embedding_dim: mesh.embedding_dim,
            sections: mesh.sections.keys().cloned().collect(),
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut lines = vec![format!("{} {}", self.topological_dim, self.embedding_dim)];
        lines.extend(self.sections.iter().cloned());
        lines.join("\n").into_bytes()
    }

    fn decode(bytes: &[u8]) -> Result<Self, MeshError> {
        let bad = || MeshError::Inconsistent("malformed mesh metadata".into());
        let text = std::str::from_utf8(bytes).map_err(|_| bad())?;
        let mut lines = text.split('\n');
        let dims: Vec<usize> = lines
            .next()
            .ok_or_else(bad)?
            .split(' ')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [topological_dim, embedding_dim] = dims[..] else {
            return Err(bad());
        };
        Ok(Self {
            topological_dim,
            embedding_dim,
            sections: lines.map(str::to_string).collect(),
        })
    }
}

/// One rank's part of (re)distribution.
///
/// `input` is the mesh this rank currently holds (`None` for nothing) and
/// `assignment` maps the elements it owns to their new ranks.
fn migrate_rank<C: Communicator + ?Sized>(
    comm: &mut C,
    input: Option<&Mesh>,
    assignment: &PartitionAssignment,
    pattern: Pattern,
) -> Result<LocalMesh, MeshError> {
    let (me, size) = (comm.rank(), comm.size());
    let placeholder = Mesh::new(0, 0);
    let source = input.unwrap_or(&placeholder);

    // 1. point sets of every partition fed from here
    let point_sets = partition_points(&source.sieve, assignment, size);
    let owned_sets: Vec<Vec<Point>> = (0..size).map(|r| assignment.elements_of(r)).collect();

    // 2. local copy of what stays
    let kept = &point_sets[me];
    let mut sieve = source.sieve.induced(kept);
    let mut owned: BTreeSet<Point> = owned_sets[me].iter().copied().collect();

    // 3. partition overlap
    let partition_overlap = match pattern {
        Pattern::Scatter => broadcast_overlap(me, size, 0),
        Pattern::AllToAll => all_to_all_overlap(me, size),
    };

    // 4. partition section completion
    let (sizes, parts) = partition_sections(&point_sets);
    let incoming = complete_section(comm, "partition", &partition_overlap, &sizes, &parts)?;
    let (sizes, elements) = partition_sections(&owned_sets);
    let received_owned = complete_section(comm, "owned", &partition_overlap, &sizes, &elements)?;
    owned.extend(received_owned.iter().flat_map(|(_, e)| e.iter().copied()));

    let mine = input.map(Metadata::of);
    let outgoing = Broadcast(mine.as_ref().map(Metadata::encode).unwrap_or_default());
    let received_meta =
        complete_section(comm, "metadata", &partition_overlap, &outgoing, &outgoing)?;
    let mut metadata = mine;
    for (link, bytes) in received_meta.iter() {
        let theirs = Metadata::decode(bytes)?;
        match &metadata {
            Some(m) if *m != theirs => {
                return Err(MeshError::Inconsistent(format!(
                    "rank {} disagrees with rank {me} on mesh dimensions or section names",
                    link.rank
                )))
            }
            Some(_) => {}
            None => metadata = Some(theirs),
        }
    }
    let metadata = metadata.unwrap_or_else(|| Metadata::of(&placeholder));

    // 5. sieve overlap from the partition point sets
    let mut migration = Overlap::new(me, size);
    for (rank, set) in point_sets.iter().enumerate().filter(|&(r, _)| r != me) {
        for &p in set {
            migration.add_link(p, rank, p, Direction::Send)?;
        }
    }
    for (link, set) in incoming.iter() {
        for &p in set {
            migration.add_link(p, link.rank, p, Direction::Recv)?;
            sieve.add_point(p);
        }
    }

    // 6. cone completion, fused by insertion
    let (sizes, cones) = cone_sections(&source.sieve);
    let received_cones = complete_section(comm, "cones", &migration, &sizes, &cones)?;
    sieve.fuse(&received_cones, Delta::Insert)?;

    // every named section, laid out from its own atlas
    let mut sections = BTreeMap::new();
    let mut blank = Section::new();
    blank.allocate();
    for name in &metadata.sections {
        let data = source.sections.get(name).unwrap_or(&blank);
        let label = format!("section:{name}");
        let received = complete_section(comm, &label, &migration, &data.atlas_sizer(), data)?;
        let mut dims: BTreeMap<Point, usize> = kept
            .iter()
            .map(|&p| (p, data.fiber_dimension(p)))
            .filter(|&(_, n)| n > 0)
            .collect();
        for (link, values) in received.iter().filter(|(_, v)| !v.is_empty()) {
            let dim = dims.entry(link.local).or_insert(values.len());
            if *dim != values.len() {
                return Err(SectionError::Dimension {
                    point: link.local,
                    expected: *dim,
                    actual: values.len(),
                }
                .into());
            }
        }
        let mut section = Section::with_layout(dims);
        for &p in kept {
            let values = data.restrict_point(p)?;
            if !values.is_empty() {
                section.update(p, values, UpdateMode::Replace)?;
            }
        }
        section.fuse(&received, Delta::Insert)?;
        sections.insert(name.clone(), section);
    }

    let overlap = sharing_overlap(comm, sieve.points().collect())?;
    Ok(LocalMesh {
        rank: me,
        mesh: Mesh {
            topological_dim: metadata.topological_dim,
            embedding_dim: metadata.embedding_dim,
            sieve,
            sections,
        },
        overlap,
        migration,
        owned: owned.into_iter().collect(),
    })
}

/// Links every local point to its copies on other ranks.
///
/// Each point is reported to a rendezvous rank (`id mod size`), which learns
/// every holder of the point and tells each holder about the others. Both
/// rounds are plain completions over the all-to-all partition overlap.
fn sharing_overlap<C: Communicator + ?Sized>(
    comm: &mut C,
    local: Vec<Point>,
) -> Result<Overlap, MeshError> {
    let (me, size) = (comm.rank(), comm.size());
    let all = all_to_all_overlap(me, size);
    let mut buckets = vec![Vec::new(); size];
    for p in local {
        buckets[(p.0 % size as u64) as usize].push(p);
    }
    let (sizes, points) = partition_sections(&buckets);
    let reported = complete_section(comm, "share/points", &all, &sizes, &points)?;

    let mut holders: BTreeMap<Point, BTreeSet<Rank>> = BTreeMap::new();
    for &p in &buckets[me] {
        holders.entry(p).or_default().insert(me);
    }
    for (link, set) in reported.iter() {
        for &p in set {
            holders.entry(p).or_default().insert(link.rank);
        }
    }
    // per holder: runs of [point, holder count, holders...]
    let mut replies = vec![Vec::new(); size];
    for (&p, ranks) in holders.iter().filter(|(_, r)| r.len() > 1) {
        for &r in ranks {
            replies[r].push(p);
            replies[r].push(Point(ranks.len() as u64));
            replies[r].extend(ranks.iter().map(|&h| Point(h as u64)));
        }
    }
    let (sizes, runs) = partition_sections(&replies);
    let answered = complete_section(comm, "share/holders", &all, &sizes, &runs)?;

    let mut overlap = Overlap::new(me, size);
    let own = std::iter::once(replies[me].as_slice());
    for run in own.chain(answered.iter().map(|(_, v)| v)) {
        let mut rest = run;
        while let [p, n, tail @ ..] = rest {
            let (ranks, next) = tail.split_at(n.0 as usize);
            for h in ranks.iter().map(|h| h.0 as Rank).filter(|&h| h != me) {
                overlap.add_link(*p, h, *p, Direction::Send)?;
                overlap.add_link(*p, h, *p, Direction::Recv)?;
            }
            rest = next;
        }
    }
    Ok(overlap)
}
