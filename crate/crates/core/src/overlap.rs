//! Identification of points across ranks.
//!
//! Each rank owns one [`Overlap`] holding two link sets: `send` links name the
//! local points whose data this rank pushes to other ranks, `recv` links the
//! local points that receive data from them. A link `(p, r, q)` pairs local
//! point `p` with point `q` on rank `r`. After any collective construction the
//! send links of one rank mirror the receive links of its peers.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::{Point, Rank};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverlapError {
    #[error("rank {rank} cannot link to itself")]
    SelfLink { rank: Rank },
    #[error("rank {rank} is outside a group of {size}")]
    RankOutOfRange { rank: Rank, size: usize },
    #[error("overlap list has {found} entries for a group of {size}")]
    GroupSize { found: usize, size: usize },
    #[error(
        "{direction:?} link ({local} -> rank {remote_rank}, {remote}) on rank {rank} has no mirror"
    )]
    Unmirrored {
        rank: Rank,
        direction: Direction,
        local: Point,
        remote_rank: Rank,
        remote: Point,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Send,
    Recv,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Send => Direction::Recv,
            Direction::Recv => Direction::Send,
        }
    }
}

/// Local point `local` is identified with point `remote` on rank `rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OverlapLink {
    pub local: Point,
    pub rank: Rank,
    pub remote: Point,
}

/// Policy for fusing received values into local storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delta {
    /// Union for cones, overwrite for section values.
    #[default]
    Insert,
    /// Drop what is there and take the received values.
    Replace,
    /// Elementwise accumulation.
    Add,
}

/// Send and receive links of one rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    rank: Rank,
    size: usize,
    // keyed (remote rank, remote point, local point)
    send: BTreeSet<(Rank, Point, Point)>,
    recv: BTreeSet<(Rank, Point, Point)>,
}

impl Overlap {
    pub fn new(rank: Rank, size: usize) -> Self {
        Self {
            rank,
            size,
            send: BTreeSet::new(),
            recv: BTreeSet::new(),
        }
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn add_link(
        &mut self,
        local: Point,
        rank: Rank,
        remote: Point,
        direction: Direction,
    ) -> Result<(), OverlapError> {
        if rank == self.rank {
            return Err(OverlapError::SelfLink { rank });
        }
        if rank >= self.size {
            return Err(OverlapError::RankOutOfRange {
                rank,
                size: self.size,
            });
        }
        self.side_mut(direction).insert((rank, remote, local));
        Ok(())
    }

    fn side(&self, direction: Direction) -> &BTreeSet<(Rank, Point, Point)> {
        match direction {
            Direction::Send => &self.send,
            Direction::Recv => &self.recv,
        }
    }

    fn side_mut(&mut self, direction: Direction) -> &mut BTreeSet<(Rank, Point, Point)> {
        match direction {
            Direction::Send => &mut self.send,
            Direction::Recv => &mut self.recv,
        }
    }

    /// Links to `rank` sorted by remote point.
    pub fn links_to(&self, rank: Rank, direction: Direction) -> Vec<OverlapLink> {
        self.side(direction)
            .range((rank, Point(0), Point(0))..=(rank, Point(u64::MAX), Point(u64::MAX)))
            .map(|&(rank, remote, local)| OverlapLink {
                local,
                rank,
                remote,
            })
            .collect()
    }

    /// All links of one side, sorted by (remote rank, remote point).
    pub fn links(&self, direction: Direction) -> impl Iterator<Item = OverlapLink> + '_ {
        self.side(direction)
            .iter()
            .map(|&(rank, remote, local)| OverlapLink {
                local,
                rank,
                remote,
            })
    }

    /// Ranks with at least one link on the given side, ascending.
    pub fn neighbors(&self, direction: Direction) -> Vec<Rank> {
        let mut out: Vec<Rank> = self.side(direction).iter().map(|l| l.0).collect();
        out.dedup();
        out
    }

    pub fn is_empty(&self) -> bool {
        self.send.is_empty() && self.recv.is_empty()
    }

    pub fn len(&self, direction: Direction) -> usize {
        self.side(direction).len()
    }

    /// Local points appearing on either side.
    pub fn local_points(&self) -> BTreeSet<Point> {
        self.send.iter().chain(&self.recv).map(|l| l.2).collect()
    }
}

/// Checks that every send link `(p, r, q)` on rank `a` is matched by the
/// receive link `(q, a, p)` on rank `r`, and vice versa.
pub fn check_mirror(overlaps: &[Overlap]) -> Result<(), OverlapError> {
    let size = overlaps.len();
    for ov in overlaps {
        if ov.size != size {
            return Err(OverlapError::GroupSize {
                found: size,
                size: ov.size,
            });
        }
        for direction in [Direction::Send, Direction::Recv] {
            for link in ov.links(direction) {
                let peer = &overlaps[link.rank];
                let mirrored =
                    peer.side(direction.opposite())
                        .contains(&(ov.rank, link.local, link.remote));
                if !mirrored {
                    return Err(OverlapError::Unmirrored {
                        rank: ov.rank,
                        direction,
                        local: link.local,
                        remote_rank: link.rank,
                        remote: link.remote,
                    });
                }
            }
        }
    }
    Ok(())
}

/// The partition overlap used to scatter a serial mesh held by `root`: the root
/// sends partition point `r` to rank `r`, every other rank receives its own
/// partition point from the root.
pub fn broadcast_overlap(rank: Rank, size: usize, root: Rank) -> Overlap {
    let mut ov = Overlap::new(rank, size);
    if rank == root {
        for r in (0..size).filter(|&r| r != root) {
            ov.add_link(Point(r as u64), r, Point(r as u64), Direction::Send)
                .expect("peer rank in range");
        }
    } else {
        ov.add_link(
            Point(rank as u64),
            root,
            Point(rank as u64),
            Direction::Recv,
        )
        .expect("root in range");
    }
    ov
}

/// The partition overlap used when every rank may hold part of the mesh:
/// each rank sends partition point `r` to every other rank `r` and receives
/// its own partition point from everyone.
pub fn all_to_all_overlap(rank: Rank, size: usize) -> Overlap {
    let mut ov = Overlap::new(rank, size);
    for r in (0..size).filter(|&r| r != rank) {
        ov.add_link(Point(r as u64), r, Point(r as u64), Direction::Send)
            .expect("peer rank in range");
        ov.add_link(Point(rank as u64), r, Point(rank as u64), Direction::Recv)
            .expect("peer rank in range");
    }
    ov
}
