//! The covering relation: a bidirectional multivalued map of arrows.
//!
//! An arrow `s -> t` says that `s` covers `t`: `s` is in `cone(t)` and `t` is
//! in `support(s)`. For a triangle mesh the vertices cover the edges and the
//! edges cover the cells, so `cone(cell)` is its edges and `support(vertex)`
//! the edges meeting at it.
//!
//! All traversals are deterministic. `cone` and `support` report arrows in
//! insertion order, `closure` and `star` in breadth-first first-visit order,
//! and `meet`, `join`, `base`, `cap` and `points` are sorted by id.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use thiserror::Error;

use crate::Point;

/// Ordered, duplicate-free list of points.
pub type Sequence = Vec<Point>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SieveError {
    #[error("point {0} cannot cover itself")]
    SelfArrow(Point),
    #[error("covering relation has a cycle through point {0}")]
    Cycle(Point),
}

/// A set of labeled arrows over opaque points.
///
/// At most one arrow is stored per `(source, target)` pair; adding it again
/// replaces the payload and keeps the arrow's position. Acyclicity is only
/// checked by [`Sieve::stratify`].
#[derive(Debug, Clone)]
pub struct Sieve<A = ()> {
    points: BTreeSet<Point>,
    arrows: IndexMap<(Point, Point), A>,
    cones: HashMap<Point, Vec<Point>>,
    supports: HashMap<Point, Vec<Point>>,
}

impl<A> Default for Sieve<A> {
    fn default() -> Self {
        Self {
            points: BTreeSet::new(),
            arrows: IndexMap::new(),
            cones: HashMap::new(),
            supports: HashMap::new(),
        }
    }
}

impl<A> Sieve<A> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a point without any arrows. Points touched by arrows are
    /// registered automatically.
    pub fn add_point(&mut self, p: Point) {
        self.points.insert(p);
    }

    /// Inserts `source -> target` carrying `payload`, replacing the payload of
    /// an existing arrow.
    pub fn add_arrow_with(
        &mut self,
        source: Point,
        target: Point,
        payload: A,
    ) -> Result<(), SieveError> {
        if source == target {
            return Err(SieveError::SelfArrow(source));
        }
        self.points.insert(source);
        self.points.insert(target);
        if let Some(slot) = self.arrows.get_mut(&(source, target)) {
            *slot = payload;
            return Ok(());
        }
        self.arrows.insert((source, target), payload);
        self.cones.entry(target).or_default().push(source);
        self.supports.entry(source).or_default().push(target);
        Ok(())
    }

    pub fn remove_arrow(&mut self, source: Point, target: Point) -> Option<A> {
        let payload = self.arrows.shift_remove(&(source, target))?;
        if let Some(cone) = self.cones.get_mut(&target) {
            cone.retain(|&q| q != source);
        }
        if let Some(support) = self.supports.get_mut(&source) {
            support.retain(|&q| q != target);
        }
        Some(payload)
    }

    /// Removes every arrow into `p`, keeping `p` and the former cone points.
    pub fn clear_cone(&mut self, p: Point) {
        for q in self.cone(p).to_vec() {
            self.remove_arrow(q, p);
        }
    }

    pub fn payload(&self, source: Point, target: Point) -> Option<&A> {
        self.arrows.get(&(source, target))
    }

    pub fn has_arrow(&self, source: Point, target: Point) -> bool {
        self.arrows.contains_key(&(source, target))
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    /// All points in ascending id order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().copied()
    }

    /// Arrows as `(source, target, payload)` in insertion order.
    pub fn arrows(&self) -> impl Iterator<Item = (Point, Point, &A)> + '_ {
        self.arrows.iter().map(|(&(s, t), a)| (s, t, a))
    }

    /// Points covering `p`; empty for unknown or uncovered points.
    pub fn cone(&self, p: Point) -> &[Point] {
        self.cones.get(&p).map_or(&[], Vec::as_slice)
    }

    /// Points covered by `p`.
    pub fn support(&self, p: Point) -> &[Point] {
        self.supports.get(&p).map_or(&[], Vec::as_slice)
    }

    /// Transitive cone of `p`, excluding `p` itself.
    pub fn closure(&self, p: Point) -> Sequence {
        self.sweep(p, |q| self.cone(q))
    }

    /// Transitive support of `p`, excluding `p` itself.
    pub fn star(&self, p: Point) -> Sequence {
        self.sweep(p, |q| self.support(q))
    }

    /// `p` followed by [`closure(p)`](Self::closure).
    pub fn closure_inclusive(&self, p: Point) -> Sequence {
        let mut out = vec![p];
        out.extend(self.closure(p));
        out
    }

    /// `p` followed by [`star(p)`](Self::star).
    pub fn star_inclusive(&self, p: Point) -> Sequence {
        let mut out = vec![p];
        out.extend(self.star(p));
        out
    }

    fn sweep<'a, F>(&'a self, seed: Point, next: F) -> Sequence
    where
        F: Fn(Point) -> &'a [Point],
    {
        let mut seen = HashSet::from([seed]);
        let mut queue = VecDeque::from([seed]);
        let mut out = Vec::new();
        while let Some(q) = queue.pop_front() {
            for &r in next(q) {
                if seen.insert(r) {
                    out.push(r);
                    queue.push_back(r);
                }
            }
        }
        out
    }

    /// Minimal separator of `closure(p)` and `closure(q)`.
    ///
    /// This is the set of maximal elements of the common closure under the
    /// covering order, sorted by id. Removing these points together with
    /// everything they cover leaves the two closures disjoint, and no smaller
    /// set does. For `p == q` it is the maximal part of `closure(p)`, which is
    /// `cone(p)` for any cell complex.
    pub fn meet(&self, p: Point, q: Point) -> Sequence {
        let left: HashSet<Point> = self.closure(p).into_iter().collect();
        let common: Vec<Point> = self
            .closure(q)
            .into_iter()
            .filter(|x| left.contains(x))
            .collect();
        self.extremal(&common, |x| self.closure(x))
    }

    /// Minimal separator of `star(p)` and `star(q)`: the minimal elements of
    /// the common star under the covering order, sorted by id.
    pub fn join(&self, p: Point, q: Point) -> Sequence {
        let left: HashSet<Point> = self.star(p).into_iter().collect();
        let common: Vec<Point> = self
            .star(q)
            .into_iter()
            .filter(|x| left.contains(x))
            .collect();
        self.extremal(&common, |x| self.star(x))
    }

    /// Members of `set` not reachable from another member through `reach`.
    fn extremal<F>(&self, set: &[Point], reach: F) -> Sequence
    where
        F: Fn(Point) -> Sequence,
    {
        let members: HashSet<Point> = set.iter().copied().collect();
        let mut dominated = HashSet::new();
        for &x in set {
            dominated.extend(reach(x).into_iter().filter(|y| members.contains(y)));
        }
        let mut out: Sequence = set
            .iter()
            .copied()
            .filter(|x| !dominated.contains(x))
            .collect();
        out.sort_unstable();
        out
    }

    /// Points that are the target of some arrow, sorted.
    pub fn base(&self) -> Sequence {
        let mut out: Sequence = self
            .cones
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(&p, _)| p)
            .collect();
        out.sort_unstable();
        out
    }

    /// Points that are the source of some arrow, sorted.
    pub fn cap(&self) -> Sequence {
        let mut out: Sequence = self
            .supports
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(&p, _)| p)
            .collect();
        out.sort_unstable();
        out
    }

    /// Computes depth and height of every point, failing on a cycle.
    pub fn stratify(&self) -> Result<Stratification, SieveError> {
        let depth = self.longest_chains(|p| self.cone(p), |p| self.support(p))?;
        let height = self.longest_chains(|p| self.support(p), |p| self.cone(p))?;
        Ok(Stratification { depth, height })
    }

    /// Longest chain below each point following `below`, in Kahn order.
    fn longest_chains<'a, B, U>(
        &'a self,
        below: B,
        above: U,
    ) -> Result<HashMap<Point, usize>, SieveError>
    where
        B: Fn(Point) -> &'a [Point],
        U: Fn(Point) -> &'a [Point],
    {
        let mut pending: HashMap<Point, usize> =
            self.points.iter().map(|&p| (p, below(p).len())).collect();
        let mut ready: VecDeque<Point> = self
            .points
            .iter()
            .copied()
            .filter(|p| pending[p] == 0)
            .collect();
        let mut level = HashMap::with_capacity(self.points.len());
        while let Some(p) = ready.pop_front() {
            let d = below(p).iter().map(|q| level[q] + 1).max().unwrap_or(0);
            level.insert(p, d);
            for &r in above(p) {
                let left = pending.get_mut(&r).expect("arrow endpoint is a point");
                *left -= 1;
                if *left == 0 {
                    ready.push_back(r);
                }
            }
        }
        if level.len() != self.points.len() {
            let stuck = self
                .points
                .iter()
                .copied()
                .find(|p| !level.contains_key(p))
                .expect("some point was not levelled");
            return Err(SieveError::Cycle(stuck));
        }
        Ok(level)
    }

    /// Longest chain of arrows below `p`; vertices have depth 0.
    pub fn depth(&self, p: Point) -> Result<usize, SieveError> {
        Ok(self.stratify()?.depth(p))
    }

    /// Longest chain of arrows above `p`; top cells have height 0.
    pub fn height(&self, p: Point) -> Result<usize, SieveError> {
        Ok(self.stratify()?.height(p))
    }

    /// A copy of this sieve with every arrow reversed.
    pub fn reversed(&self) -> Sieve<A>
    where
        A: Clone,
    {
        let mut out = Sieve::new();
        for &p in &self.points {
            out.add_point(p);
        }
        for (&(s, t), a) in &self.arrows {
            out.add_arrow_with(t, s, a.clone())
                .expect("reversing keeps arrows proper");
        }
        out
    }

    /// The subsieve induced by `keep`: those points and the arrows between
    /// them, in this sieve's arrow order.
    pub fn induced(&self, keep: &[Point]) -> Sieve<A>
    where
        A: Clone,
    {
        let keep: BTreeSet<Point> = keep.iter().copied().filter(|p| self.contains(*p)).collect();
        let mut out = Sieve::new();
        for &p in &keep {
            out.add_point(p);
        }
        for (&(s, t), a) in &self.arrows {
            if keep.contains(&s) && keep.contains(&t) {
                out.add_arrow_with(s, t, a.clone())
                    .expect("subsieve of a proper sieve");
            }
        }
        out
    }
}

impl<A: Default> Sieve<A> {
    pub fn add_arrow(&mut self, source: Point, target: Point) -> Result<(), SieveError> {
        self.add_arrow_with(source, target, A::default())
    }
}

/// Two sieves are equal when they hold the same points, the same cone
/// sequences and the same payloads. Support order is a by-product of
/// construction order and is not compared.
impl<A: PartialEq> PartialEq for Sieve<A> {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
            && self.arrows.len() == other.arrows.len()
            && self.points.iter().all(|&p| self.cone(p) == other.cone(p))
            && self
                .arrows
                .iter()
                .all(|(k, a)| other.arrows.get(k) == Some(a))
    }
}

impl<A: Eq> Eq for Sieve<A> {}

/// Depth and height of every point of an acyclic sieve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    depth: HashMap<Point, usize>,
    height: HashMap<Point, usize>,
}

impl Stratification {
    /// Depth of `p`, 0 for points not in the sieve.
    pub fn depth(&self, p: Point) -> usize {
        self.depth.get(&p).copied().unwrap_or(0)
    }

    /// Height of `p`, 0 for points not in the sieve.
    pub fn height(&self, p: Point) -> usize {
        self.height.get(&p).copied().unwrap_or(0)
    }

    pub fn max_depth(&self) -> usize {
        self.depth.values().copied().max().unwrap_or(0)
    }

    pub fn max_height(&self) -> usize {
        self.height.values().copied().max().unwrap_or(0)
    }

    /// Points of depth `d`, sorted.
    pub fn depth_stratum(&self, d: usize) -> Sequence {
        Self::layer(&self.depth, d)
    }

    /// Points of height `h`, sorted.
    pub fn height_stratum(&self, h: usize) -> Sequence {
        Self::layer(&self.height, h)
    }

    fn layer(levels: &HashMap<Point, usize>, at: usize) -> Sequence {
        let mut out: Sequence = levels
            .iter()
            .filter(|&(_, &l)| l == at)
            .map(|(&p, _)| p)
            .collect();
        out.sort_unstable();
        out
    }
}
