//! Mesh text I/O, interpolation of edges and faces, renumbering, and DOT
//! export.

pub mod dot;
pub mod interpolate;
pub mod io;

pub use dot::{overlap_dot, sieve_dot};
pub use interpolate::{interpolate, relabel, relabel_strata, InterpolateError};
pub use io::{read_assignment, read_mesh, write_assignment, write_mesh, ParseError, WriteError};
