//! Data laid out over points.
//!
//! A [`Section`] pairs an atlas (per-point offset and fiber dimension) with one
//! contiguous storage vector. The value type is a parameter, so the same type
//! holds vertex coordinates (`f64`) and point-valued data such as partitions
//! and cones (`Point`).

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt::Debug;

use thiserror::Error;

use crate::sieve::Sieve;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SectionError {
    #[error("section is not allocated")]
    NotAllocated,
    #[error("section is already allocated; fiber dimensions are frozen")]
    AlreadyAllocated,
    #[error("point {point} has fiber dimension {expected}, got {actual} values")]
    Dimension {
        point: Point,
        expected: usize,
        actual: usize,
    },
    #[error("point {0} has no storage in this section")]
    UnknownPoint(Point),
    #[error("values of this section cannot be added")]
    NotAdditive,
}

/// Values storable in a section.
pub trait SectionValue: Clone + Default + PartialEq + Debug {
    /// `self += rhs`, for additive fusion.
    fn accumulate(&mut self, rhs: &Self) -> Result<(), SectionError>;
}

macro_rules! additive {
    ($($t:ty),*) => {$(
        impl SectionValue for $t {
            fn accumulate(&mut self, rhs: &Self) -> Result<(), SectionError> {
                *self += *rhs;
                Ok(())
            }
        }
    )*};
}

additive!(f64, f32, i64, u64, usize, u8);

impl SectionValue for Point {
    fn accumulate(&mut self, _rhs: &Self) -> Result<(), SectionError> {
        Err(SectionError::NotAdditive)
    }
}

/// How [`Section::update`] combines new values with stored ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    Replace,
    Add,
}

/// Read access shared by sections and section adapters.
pub trait Restrict<V: Clone> {
    /// Values over `p`; empty for points outside the domain.
    fn restrict(&self, p: Point) -> Cow<'_, [V]>;
}

/// Number of values a section-like object holds over each point.
pub trait Sizer {
    fn size(&self, p: Point) -> usize;

    /// `Some(n)` when every point has exactly `n` values. Completion skips the
    /// size exchange for such sizers.
    fn uniform(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fiber {
    pub offset: usize,
    pub dim: usize,
}

/// Contiguous point-indexed storage.
///
/// Fiber dimensions are set first, then [`allocate`](Self::allocate) assigns
/// offsets in ascending point order and zero-fills storage. Points with
/// dimension 0 are legal and hold nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Section<V> {
    atlas: BTreeMap<Point, Fiber>,
    storage: Vec<V>,
    allocated: bool,
}

impl<V> Default for Section<V> {
    fn default() -> Self {
        Self {
            atlas: BTreeMap::new(),
            storage: Vec::new(),
            allocated: false,
        }
    }
}

impl<V: SectionValue> Section<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds and allocates a section from `(point, fiber dimension)` pairs.
    pub fn with_layout<I>(dims: I) -> Self
    where
        I: IntoIterator<Item = (Point, usize)>,
    {
        let mut s = Self::new();
        for (p, n) in dims {
            s.set_fiber_dimension(p, n).expect("fresh section");
        }
        s.allocate();
        s
    }

    pub fn set_fiber_dimension(&mut self, p: Point, n: usize) -> Result<(), SectionError> {
        if self.allocated {
            return Err(SectionError::AlreadyAllocated);
        }
        if n == 0 {
            self.atlas.remove(&p);
        } else {
            self.atlas.insert(p, Fiber { offset: 0, dim: n });
        }
        Ok(())
    }

    /// Lays out offsets in ascending point id order and zero-fills storage.
    /// Calling it again is a no-op.
    pub fn allocate(&mut self) {
        if self.allocated {
            return;
        }
        let mut offset = 0;
        for fiber in self.atlas.values_mut() {
            fiber.offset = offset;
            offset += fiber.dim;
        }
        self.storage = vec![V::default(); offset];
        self.allocated = true;
    }

    pub fn is_allocated(&self) -> bool {
        self.allocated
    }

    pub fn fiber_dimension(&self, p: Point) -> usize {
        self.atlas.get(&p).map_or(0, |f| f.dim)
    }

    pub fn fiber(&self, p: Point) -> Option<Fiber> {
        self.atlas.get(&p).copied()
    }

    /// Points with a nonzero fiber, ascending.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.atlas.keys().copied()
    }

    pub fn atlas(&self) -> impl Iterator<Item = (Point, Fiber)> + '_ {
        self.atlas.iter().map(|(&p, &f)| (p, f))
    }

    /// Sum of all fiber dimensions.
    pub fn total_size(&self) -> usize {
        self.atlas.values().map(|f| f.dim).sum()
    }

    pub fn storage(&self) -> &[V] {
        &self.storage
    }

    /// The values over `p` as a view into storage; empty for points without
    /// a fiber.
    pub fn restrict_point(&self, p: Point) -> Result<&[V], SectionError> {
        if !self.allocated {
            return Err(SectionError::NotAllocated);
        }
        Ok(match self.atlas.get(&p) {
            Some(f) => &self.storage[f.offset..f.offset + f.dim],
            None => &[],
        })
    }

    pub fn update(&mut self, p: Point, values: &[V], mode: UpdateMode) -> Result<(), SectionError> {
        if !self.allocated {
            return Err(SectionError::NotAllocated);
        }
        let fiber = *self.atlas.get(&p).ok_or(SectionError::UnknownPoint(p))?;
        if values.len() != fiber.dim {
            return Err(SectionError::Dimension {
                point: p,
                expected: fiber.dim,
                actual: values.len(),
            });
        }
        let slot = &mut self.storage[fiber.offset..fiber.offset + fiber.dim];
        match mode {
            UpdateMode::Replace => slot.clone_from_slice(values),
            UpdateMode::Add => {
                for (s, v) in slot.iter_mut().zip(values) {
                    s.accumulate(v)?;
                }
            }
        }
        Ok(())
    }

    /// The section restricted to `keep`, with the same values.
    pub fn subsection(&self, keep: impl IntoIterator<Item = Point>) -> Section<V> {
        let dims: Vec<(Point, usize)> = keep
            .into_iter()
            .map(|p| (p, self.fiber_dimension(p)))
            .collect();
        let mut out = Section::with_layout(dims);
        for p in out.points().collect::<Vec<_>>() {
            let values = self.restrict_point(p).unwrap_or(&[]).to_vec();
            out.update(p, &values, UpdateMode::Replace)
                .expect("layout copied from source");
        }
        out
    }

    /// Renames every point through `map`; points missing from `map` keep their
    /// name.
    pub fn relabeled(&self, map: &BTreeMap<Point, Point>) -> Section<V> {
        let rename = |p: Point| map.get(&p).copied().unwrap_or(p);
        let mut out = Section::with_layout(self.atlas().map(|(p, f)| (rename(p), f.dim)));
        for (p, _) in self.atlas() {
            let values = self.restrict_point(p).unwrap_or(&[]).to_vec();
            out.update(rename(p), &values, UpdateMode::Replace)
                .expect("relabeling is a bijection");
        }
        out
    }
}

impl<V: SectionValue> Restrict<V> for Section<V> {
    fn restrict(&self, p: Point) -> Cow<'_, [V]> {
        Cow::Borrowed(self.restrict_point(p).unwrap_or(&[]))
    }
}

/// A section with the same single value over every point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSection<V> {
    value: V,
}

impl<V> ConstantSection<V> {
    pub fn new(value: V) -> Self {
        Self { value }
    }

    pub fn value(&self) -> &V {
        &self.value
    }
}

impl<V: Clone> Restrict<V> for ConstantSection<V> {
    fn restrict(&self, _p: Point) -> Cow<'_, [V]> {
        Cow::Borrowed(std::slice::from_ref(&self.value))
    }
}

impl Sizer for ConstantSection<usize> {
    fn size(&self, _p: Point) -> usize {
        self.value
    }

    fn uniform(&self) -> Option<usize> {
        Some(self.value)
    }
}

/// Values over `p` followed by the values over each point of `closure(p)`,
/// in closure order.
pub fn restrict_closure<A, V, S>(sieve: &Sieve<A>, section: &S, p: Point) -> Vec<V>
where
    V: Clone,
    S: Restrict<V> + ?Sized,
{
    let mut out = Vec::new();
    for q in sieve.closure_inclusive(p) {
        out.extend_from_slice(&section.restrict(q));
    }
    out
}

/// Star counterpart of [`restrict_closure`].
pub fn restrict_star<A, V, S>(sieve: &Sieve<A>, section: &S, p: Point) -> Vec<V>
where
    V: Clone,
    S: Restrict<V> + ?Sized,
{
    let mut out = Vec::new();
    for q in sieve.star_inclusive(p) {
        out.extend_from_slice(&section.restrict(q));
    }
    out
}
