//! Mesh-level algorithms built on sieves, sections and completion.
//!
//! A [`Mesh`] is a sieve plus named real-valued sections. Distribution takes
//! a serial mesh on rank 0 and a [`PartitionAssignment`], and produces one
//! [`LocalMesh`] per rank; redistribution does the same from an already
//! distributed mesh. Both run the same per-rank program, see
//! [`distribute`](distribute::distribute).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::comm::{CommError, Transcript};
use crate::completion::CompletionError;
use crate::overlap::{Overlap, OverlapError};
use crate::section::{Section, SectionError};
use crate::sieve::{Sequence, Sieve, SieveError};
use crate::{Point, Rank};

pub mod assemble;
pub mod distribute;
pub mod dual;
pub mod partition;

pub use assemble::assemble;
pub use distribute::{distribute, redistribute};
pub use dual::{build_dual, dual_via_reversed, DualGraph};
pub use partition::{block_assignment, partition, partition_points, Method, PartitionAssignment};

/// Name of the vertex coordinate section.
pub const COORDINATES: &str = "coordinates";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Overlap(#[from] OverlapError),
    #[error("no partitions requested")]
    NoParts,
    #[error("{parts} partitions requested for {elements} elements")]
    TooManyParts { parts: usize, elements: usize },
    #[error("point {0} is not assigned to a partition")]
    Unassigned(Point),
    #[error("assigned point {0} is not in the mesh")]
    UnknownElement(Point),
    #[error("point {point} assigned to rank {rank}, but the group has {size} ranks")]
    RankOutOfRange {
        point: Point,
        rank: Rank,
        size: usize,
    },
    #[error("assigned points {0} and {1} lie in different strata")]
    MixedStrata(Point, Point),
    #[error("expected {expected} ranks, got {actual}")]
    GroupSize { expected: usize, actual: usize },
    #[error("inconsistent mesh data: {0}")]
    Inconsistent(String),
}

/// A sieve with its named sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub topological_dim: usize,
    pub embedding_dim: usize,
    pub sieve: Sieve,
    pub sections: BTreeMap<String, Section<f64>>,
}

impl Mesh {
    /// An empty mesh with an empty coordinate section.
    pub fn new(topological_dim: usize, embedding_dim: usize) -> Self {
        let mut coordinates = Section::new();
        coordinates.allocate();
        Self {
            topological_dim,
            embedding_dim,
            sieve: Sieve::new(),
            sections: BTreeMap::from([(COORDINATES.to_string(), coordinates)]),
        }
    }

    /// Builds a cells-and-vertices mesh: each cell's cone is its vertex list.
    pub fn from_cells<'a, C, V>(
        topological_dim: usize,
        embedding_dim: usize,
        cells: C,
        vertices: V,
    ) -> Result<Self, MeshError>
    where
        C: IntoIterator<Item = (Point, &'a [Point])>,
        V: IntoIterator<Item = (Point, &'a [f64])>,
    {
        let mut mesh = Self::new(topological_dim, embedding_dim);
        let mut coordinates = Section::new();
        let mut values = Vec::new();
        for (v, x) in vertices {
            mesh.sieve.add_point(v);
            coordinates.set_fiber_dimension(v, x.len())?;
            values.push((v, x));
        }
        coordinates.allocate();
        for (v, x) in values {
            coordinates.update(v, x, crate::section::UpdateMode::Replace)?;
        }
        for (c, cone) in cells {
            mesh.sieve.add_point(c);
            for &v in cone {
                mesh.sieve.add_arrow(v, c)?;
            }
        }
        mesh.sections.insert(COORDINATES.to_string(), coordinates);
        Ok(mesh)
    }

    pub fn coordinates(&self) -> &Section<f64> {
        &self.sections[COORDINATES]
    }

    pub fn section(&self, name: &str) -> Option<&Section<f64>> {
        self.sections.get(name)
    }

    /// Points that cover nothing but are covered by something, ascending.
    pub fn cells(&self) -> Sequence {
        self.sieve
            .points()
            .filter(|&p| self.sieve.support(p).is_empty() && !self.sieve.cone(p).is_empty())
            .collect()
    }

    /// Points with an empty cone, ascending.
    pub fn vertices(&self) -> Sequence {
        self.sieve
            .points()
            .filter(|&p| self.sieve.cone(p).is_empty())
            .collect()
    }
}

/// One rank's piece of a distributed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMesh {
    pub rank: Rank,
    pub mesh: Mesh,
    /// Symmetric links between every point held here and its copies on other
    /// ranks. Point ids are global, so each link names the same id twice.
    pub overlap: Overlap,
    /// The sieve overlap that delivered this piece: send links to the ranks
    /// this rank fed, receive links from the ranks that fed it.
    pub migration: Overlap,
    /// Partitioned elements assigned to this rank, ascending.
    pub owned: Vec<Point>,
}

#[derive(Debug, Clone)]
pub struct DistributedMesh {
    pub ranks: Vec<LocalMesh>,
    pub transcript: Transcript,
}

impl DistributedMesh {
    pub fn size(&self) -> usize {
        self.ranks.len()
    }
}
