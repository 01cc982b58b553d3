//! Arrow-centric mesh topology.
//!
//! A [`Sieve`](sieve::Sieve) stores the covering relation of a mesh as arrows
//! between opaque points. [`Section`](section::Section)s lay data out over those
//! points, [`Overlap`](overlap::Overlap)s relate points living on different
//! ranks, and [`complete_section`](completion::complete_section) is the single
//! collective used to move sections (including sieve cones) across an overlap.
//! Mesh distribution and redistribution in [`meshops`] are built from nothing
//! but these pieces, so they work for any dimension, cell shape or partitioned
//! element type.

pub mod comm;
pub mod completion;
pub mod fixtures;
pub mod meshops;
pub mod overlap;
pub mod section;
pub mod sieve;
pub mod toolkit;

mod point;

pub use point::{points, Point, Rank};
