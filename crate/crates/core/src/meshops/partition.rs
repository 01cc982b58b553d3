//! Partition assignments and the point sets they induce.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use super::dual::DualGraph;
use super::MeshError;
use crate::sieve::Sieve;
use crate::{Point, Rank};

/// Which partition each partitioned element goes to. The elements may be
/// cells, faces or edges; they only need to share a stratum.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionAssignment {
    parts: BTreeMap<Point, Rank>,
}

impl PartitionAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Point, Rank)>) -> Self {
        Self {
            parts: pairs.into_iter().collect(),
        }
    }

    /// Element `i` (as `Point(i)`) goes to `ranks[i]`.
    pub fn from_ranks(ranks: &[Rank]) -> Self {
        Self::from_pairs(ranks.iter().enumerate().map(|(i, &r)| (Point(i as u64), r)))
    }

    pub fn assign(&mut self, element: Point, rank: Rank) {
        self.parts.insert(element, rank);
    }

    pub fn get(&self, element: Point) -> Option<Rank> {
        self.parts.get(&element).copied()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, Rank)> + '_ {
        self.parts.iter().map(|(&p, &r)| (p, r))
    }

    pub fn elements(&self) -> impl Iterator<Item = Point> + '_ {
        self.parts.keys().copied()
    }

    /// Elements of partition `rank`, ascending.
    pub fn elements_of(&self, rank: Rank) -> Vec<Point> {
        self.iter()
            .filter(|&(_, r)| r == rank)
            .map(|(p, _)| p)
            .collect()
    }

    /// The assignment restricted to `elements`.
    pub fn restricted(&self, elements: &[Point]) -> Self {
        Self::from_pairs(elements.iter().filter_map(|&e| self.get(e).map(|r| (e, r))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Contiguous runs of ascending element ids.
    #[default]
    Block,
    /// Breadth-first growth over the dual graph from the lowest unassigned
    /// element.
    GreedyBfs,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block" => Ok(Method::Block),
            "greedy" | "greedy-bfs" | "bfs" => Ok(Method::GreedyBfs),
            _ => Err(format!(
                "unknown partition method '{s}' (expected block or greedy-bfs)"
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Block => "block",
            Method::GreedyBfs => "greedy-bfs",
        })
    }
}

/// Partition sizes: `n / parts`, plus one for the first `n % parts`.
fn quotas(n: usize, parts: usize) -> impl Iterator<Item = usize> {
    (0..parts).map(move |i| n / parts + usize::from(i < n % parts))
}

fn check_parts(n: usize, parts: usize) -> Result<(), MeshError> {
    if parts == 0 {
        return Err(MeshError::NoParts);
    }
    if parts > n.max(1) {
        return Err(MeshError::TooManyParts { parts, elements: n });
    }
    Ok(())
}

/// Splits `elements` (in the given order) into `parts` contiguous runs.
pub fn block_assignment(
    elements: &[Point],
    parts: usize,
) -> Result<PartitionAssignment, MeshError> {
    check_parts(elements.len(), parts)?;
    let mut out = PartitionAssignment::new();
    let mut rest = elements.iter();
    for (rank, quota) in quotas(elements.len(), parts).enumerate() {
        for &e in rest.by_ref().take(quota) {
            out.assign(e, rank);
        }
    }
    Ok(out)
}

/// Partitions the dual graph's vertices into `parts` pieces.
pub fn partition(
    dual: &DualGraph,
    parts: usize,
    method: Method,
) -> Result<PartitionAssignment, MeshError> {
    let cells = dual.vertices();
    match method {
        Method::Block => block_assignment(cells, parts),
        Method::GreedyBfs => {
            check_parts(cells.len(), parts)?;
            let mut out = PartitionAssignment::new();
            let mut unassigned: BTreeSet<Point> = cells.iter().copied().collect();
            for (rank, quota) in quotas(cells.len(), parts).enumerate() {
                let mut filled = 0;
                let mut queue = VecDeque::new();
                while filled < quota {
                    let next = match queue.pop_front() {
                        Some(c) => c,
                        None => *unassigned.first().expect("quotas sum to the cell count"),
                    };
                    if !unassigned.remove(&next) {
                        continue;
                    }
                    out.assign(next, rank);
                    filled += 1;
                    queue.extend(dual.neighbors(next).filter(|n| unassigned.contains(n)));
                }
            }
            Ok(out)
        }
    }
}

/// The points each partition needs: for every assigned element `e`,
/// `{e} ∪ closure(e) ∪ star(e) ∪ closure(star(e))`. Each set is sorted.
///
/// For a cell partition this is the cells and their closures. For a face or
/// edge partition the cells around each element come along too, as ghosts.
pub fn partition_points<A>(
    sieve: &Sieve<A>,
    assignment: &PartitionAssignment,
    parts: usize,
) -> Vec<Vec<Point>> {
    let mut sets = vec![BTreeSet::new(); parts];
    for (e, rank) in assignment.iter() {
        let Some(set) = sets.get_mut(rank) else {
            continue;
        };
        set.extend(sieve.closure_inclusive(e));
        for s in sieve.star(e) {
            set.extend(sieve.closure_inclusive(s));
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}
