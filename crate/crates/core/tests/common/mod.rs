//! Independent oracles: reachability by depth-first search over the raw
//! arrow list, and meet/join by exhaustive search over subsets.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use sieve_core::sieve::Sieve;
use sieve_core::Point;

/// A random acyclic sieve on points `0..n`: a random permutation fixes a
/// topological order and each forward pair becomes an arrow with
/// probability `density`.
pub fn random_sieve(seed: u64, n: usize, density: f64) -> Sieve {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut order: Vec<u64> = (0..n as u64).collect();
    order.shuffle(&mut rng);
    let mut s = Sieve::new();
    for &p in &order {
        s.add_point(Point(p));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                s.add_arrow(Point(order[i]), Point(order[j])).unwrap();
            }
        }
    }
    s
}

/// Adjacency over point indices, from the arrow list only.
pub struct Dag {
    pub n: usize,
    down: Vec<Vec<usize>>,
    up: Vec<Vec<usize>>,
}

impl Dag {
    pub fn new(sieve: &Sieve) -> Self {
        let n = sieve.points().map(|p| p.0 as usize + 1).max().unwrap_or(0);
        let mut down = vec![Vec::new(); n];
        let mut up = vec![Vec::new(); n];
        for (s, t, _) in sieve.arrows() {
            down[t.0 as usize].push(s.0 as usize);
            up[s.0 as usize].push(t.0 as usize);
        }
        Self { n, down, up }
    }

    fn reach(&self, p: usize, next: &[Vec<usize>]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![p];
        while let Some(x) = stack.pop() {
            for &y in &next[x] {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen.remove(&p);
        seen
    }

    /// Everything strictly below `p`.
    pub fn below(&self, p: usize) -> BTreeSet<usize> {
        self.reach(p, &self.down)
    }

    /// Everything strictly above `p`.
    pub fn above(&self, p: usize) -> BTreeSet<usize> {
        self.reach(p, &self.up)
    }

    fn mask(set: &BTreeSet<usize>) -> u64 {
        set.iter().fold(0, |m, &i| m | 1 << i)
    }

    /// The smallest `S` within the common part of two reach sets such that
    /// removing `S`, together with everything reachable from `S`, leaves the
    /// two sets disjoint. Subsets are tried in order of size; the answer
    /// must be unique at the first size that works.
    fn separator(
        &self,
        left: &BTreeSet<usize>,
        right: &BTreeSet<usize>,
        from: impl Fn(usize) -> BTreeSet<usize>,
    ) -> Vec<u64> {
        let common: Vec<usize> = left.intersection(right).copied().collect();
        let target = Self::mask(&common.iter().copied().collect());
        let removed: Vec<u64> = common
            .iter()
            .map(|&x| Self::mask(&from(x)) | 1 << x)
            .collect();
        let m = common.len();
        for k in 0..=m {
            let mut found: Vec<u64> = Vec::new();
            for subset in Combinations::new(m, k) {
                let gone = (0..m)
                    .filter(|i| subset & 1 << i != 0)
                    .fold(0u64, |acc, i| acc | removed[i]);
                if gone & target == target {
                    found.push(subset);
                }
            }
            match found.as_slice() {
                [] => continue,
                [one] => {
                    return (0..m)
                        .filter(|i| one & 1 << i != 0)
                        .map(|i| common[i] as u64)
                        .collect();
                }
                _ => panic!("minimal separator of size {k} is not unique"),
            }
        }
        unreachable!("the whole common part always separates")
    }

    pub fn meet(&self, p: usize, q: usize) -> Vec<u64> {
        self.separator(&self.below(p), &self.below(q), |x| self.below(x))
    }

    pub fn join(&self, p: usize, q: usize) -> Vec<u64> {
        self.separator(&self.above(p), &self.above(q), |x| self.above(x))
    }
}

/// All `k`-subsets of `0..n` as bitmasks, in increasing numeric order.
pub struct Combinations {
    next: Option<u64>,
    limit: u64,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n < 63);
        let next = if k > n { None } else { Some((1u64 << k) - 1) };
        Self {
            next,
            limit: 1 << n,
        }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let current = self.next?;
        self.next = if current == 0 {
            None
        } else {
            // Gosper's hack
            let low = current & current.wrapping_neg();
            let ripple = current + low;
            let following = (((ripple ^ current) >> 2) / low) | ripple;
            (following < self.limit).then_some(following)
        };
        Some(current)
    }
}

pub fn ids(points: &[Point]) -> Vec<u64> {
    points.iter().map(|p| p.0).collect()
}

pub fn sorted_ids(points: &[Point]) -> Vec<u64> {
    let mut out = ids(points);
    out.sort_unstable();
    out
}

/// Checks every traversal of `sieve` against the oracles. Returns the number
/// of (point, point) pairs compared.
pub fn check_against_oracles(sieve: &Sieve) -> Result<usize, String> {
    let dag = Dag::new(sieve);
    let pts: Vec<Point> = sieve.points().collect();
    for &p in &pts {
        let i = p.0 as usize;
        let closure: Vec<u64> = dag.below(i).into_iter().map(|x| x as u64).collect();
        if sorted_ids(&sieve.closure(p)) != closure {
            return Err(format!("closure({p}) differs from reachability"));
        }
        let star: Vec<u64> = dag.above(i).into_iter().map(|x| x as u64).collect();
        if sorted_ids(&sieve.star(p)) != star {
            return Err(format!("star({p}) differs from reachability"));
        }
    }
    let mut pairs = 0;
    for &p in &pts {
        for &q in &pts {
            let (i, j) = (p.0 as usize, q.0 as usize);
            let meet = ids(&sieve.meet(p, q));
            if meet != dag.meet(i, j) {
                return Err(format!(
                    "meet({p}, {q}) = {meet:?}, oracle {:?}",
                    dag.meet(i, j)
                ));
            }
            let join = ids(&sieve.join(p, q));
            if join != dag.join(i, j) {
                return Err(format!(
                    "join({p}, {q}) = {join:?}, oracle {:?}",
                    dag.join(i, j)
                ));
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}
