use std::fmt;

/// Index of a simulated process.
pub type Rank = usize;

/// An opaque topological entity.
///
/// Points carry no dimension or shape; anything of that sort is derived from
/// the arrows of the sieve they live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Point(pub u64);

impl Point {
    pub const fn id(self) -> u64 {
        self.0
    }
}

impl From<u64> for Point {
    fn from(id: u64) -> Self {
        Point(id)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for building point lists in tests and fixtures.
pub fn points(ids: &[u64]) -> Vec<Point> {
    ids.iter().copied().map(Point).collect()
}
