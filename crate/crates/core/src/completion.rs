//! Section completion: the one collective that moves data between ranks.
//!
//! [`complete_section`] restricts a section to the send side of an overlap,
//! ships it, and returns the receive-side [`OverlapSection`]. It runs in two
//! rounds: first the sizer (how many values sit over each linked point), then
//! the values themselves. A sizer that reports a uniform size skips the first
//! round. [`Fuse`] then folds the received values back into a local section
//! or sieve.
//!
//! The adapters below expose other data through the section interface so the
//! same completion moves partitions ([`PartitionSection`]), sieve cones
//! ([`ConeSection`]) and supports ([`SupportSection`]).
//!
//! Wire format, per destination rank: links in ascending (remote point, local
//! point) order; the sizer buffer is one little-endian `u64` count per link,
//! the data buffer the concatenated little-endian encodings of every tuple.

use std::borrow::Cow;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::comm::{CommError, Communicator};
use crate::overlap::{Delta, Direction, Overlap, OverlapLink};
use crate::section::{
    ConstantSection, Restrict, Section, SectionError, SectionValue, Sizer, UpdateMode,
};
use crate::sieve::{Sieve, SieveError};
use crate::{Point, Rank};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("point {point}: sizer announced {announced} values but the section holds {actual}")]
    SizeMismatch {
        point: Point,
        announced: usize,
        actual: usize,
    },
    #[error("'{tag}': unexpected message from rank {from}")]
    UnexpectedMessage { tag: String, from: Rank },
    #[error("'{tag}': no message from rank {from}")]
    MissingMessage { tag: String, from: Rank },
    #[error("'{tag}': message from rank {from} has {actual} bytes, expected {expected}")]
    BadLength {
        tag: String,
        from: Rank,
        expected: usize,
        actual: usize,
    },
}

/// Fixed-width little-endian encoding of section values.
pub trait WireValue: Sized {
    const WIDTH: usize;
    fn put(&self, out: &mut Vec<u8>);
    /// Decodes from exactly `WIDTH` bytes.
    fn get(bytes: &[u8]) -> Self;
}

impl WireValue for u64 {
    const WIDTH: usize = 8;
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(bytes: &[u8]) -> Self {
        u64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

impl WireValue for usize {
    const WIDTH: usize = 8;
    fn put(&self, out: &mut Vec<u8>) {
        (*self as u64).put(out);
    }
    fn get(bytes: &[u8]) -> Self {
        u64::get(bytes) as usize
    }
}

impl WireValue for Point {
    const WIDTH: usize = 8;
    fn put(&self, out: &mut Vec<u8>) {
        self.0.put(out);
    }
    fn get(bytes: &[u8]) -> Self {
        Point(u64::get(bytes))
    }
}

impl WireValue for f64 {
    const WIDTH: usize = 8;
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

impl WireValue for u8 {
    const WIDTH: usize = 1;
    fn put(&self, out: &mut Vec<u8>) {
        out.push(*self);
    }
    fn get(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapEntry {
    pub link: OverlapLink,
    pub offset: usize,
    pub len: usize,
}

/// A section restricted to one side of an overlap, indexed by link.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSection<V> {
    entries: Vec<OverlapEntry>,
    values: Vec<V>,
}

impl<V> Default for OverlapSection<V> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            values: Vec::new(),
        }
    }
}

impl<V> OverlapSection<V> {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of links.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn total_size(&self) -> usize {
        self.values.len()
    }

    pub fn entries(&self) -> &[OverlapEntry] {
        &self.entries
    }

    /// `(link, values)` pairs grouped by rank.
    pub fn iter(&self) -> impl Iterator<Item = (OverlapLink, &[V])> + '_ {
        self.entries
            .iter()
            .map(|e| (e.link, &self.values[e.offset..e.offset + e.len]))
    }

    /// Values received from `rank` for its point `remote`.
    pub fn restrict(&self, rank: Rank, remote: Point) -> Option<&[V]> {
        self.entries
            .iter()
            .find(|e| e.link.rank == rank && e.link.remote == remote)
            .map(|e| &self.values[e.offset..e.offset + e.len])
    }

    fn push(&mut self, link: OverlapLink, values: impl IntoIterator<Item = V>) {
        let offset = self.values.len();
        self.values.extend(values);
        self.entries.push(OverlapEntry {
            link,
            offset,
            len: self.values.len() - offset,
        });
    }
}

/// Links of one side grouped by peer rank. Send groups are ordered the way the
/// peer's receive side expects them: by (remote, local). Receive groups are
/// ordered by (local, remote), which is the same sequence seen from the peer.
fn grouped(overlap: &Overlap, direction: Direction) -> BTreeMap<Rank, Vec<OverlapLink>> {
    let mut out: BTreeMap<Rank, Vec<OverlapLink>> = BTreeMap::new();
    for link in overlap.links(direction) {
        out.entry(link.rank).or_default().push(link);
    }
    if direction == Direction::Recv {
        for links in out.values_mut() {
            links.sort_by_key(|l| (l.local, l.remote));
        }
    }
    out
}

fn expect_from(
    tag: &str,
    received: &BTreeMap<Rank, Vec<u8>>,
    expected: &BTreeMap<Rank, Vec<OverlapLink>>,
) -> Result<(), CompletionError> {
    if let Some(&from) = received.keys().find(|r| !expected.contains_key(r)) {
        return Err(CompletionError::UnexpectedMessage {
            tag: tag.to_string(),
            from,
        });
    }
    if let Some(&from) = expected.keys().find(|r| !received.contains_key(r)) {
        return Err(CompletionError::MissingMessage {
            tag: tag.to_string(),
            from,
        });
    }
    Ok(())
}

/// Completes `data` over `overlap`, returning what this rank received.
///
/// Collective: every rank of the group calls it with the same `label`, its own
/// overlap, and sizer/data objects of the same kind. The six steps are: build
/// the send and receive sizer overlap sections, fill the send sizes, exchange
/// them, lay out the send and receive data overlap sections, fill the send
/// data, and exchange it.
pub fn complete_section<C, S, D, V>(
    comm: &mut C,
    label: &str,
    overlap: &Overlap,
    sizer: &S,
    data: &D,
) -> Result<OverlapSection<V>, CompletionError>
where
    C: Communicator + ?Sized,
    S: Sizer + ?Sized,
    D: Restrict<V> + ?Sized,
    V: WireValue + Clone,
{
    let sends = grouped(overlap, Direction::Send);
    let recvs = grouped(overlap, Direction::Recv);

    // sizer round
    let send_sizes: BTreeMap<Rank, Vec<usize>> = sends
        .iter()
        .map(|(&r, links)| (r, links.iter().map(|l| sizer.size(l.local)).collect()))
        .collect();
    let recv_sizes: BTreeMap<Rank, Vec<usize>> = match sizer.uniform() {
        Some(n) => recvs
            .iter()
            .map(|(&r, links)| (r, vec![n; links.len()]))
            .collect(),
        None => {
            let tag = format!("{label}/sizer");
            let outbox = send_sizes
                .iter()
                .map(|(&r, sizes)| {
                    let mut buf = Vec::with_capacity(sizes.len() * 8);
                    sizes.iter().for_each(|s| s.put(&mut buf));
                    (r, buf)
                })
                .collect();
            let inbox = comm.exchange(&tag, outbox)?;
            expect_from(&tag, &inbox, &recvs)?;
            let mut sizes = BTreeMap::new();
            for (&r, links) in &recvs {
                let buf = &inbox[&r];
                if buf.len() != links.len() * usize::WIDTH {
                    return Err(CompletionError::BadLength {
                        tag,
                        from: r,
                        expected: links.len() * usize::WIDTH,
                        actual: buf.len(),
                    });
                }
                sizes.insert(r, buf.chunks_exact(usize::WIDTH).map(usize::get).collect());
            }
            sizes
        }
    };

    // data round
    let tag = format!("{label}/data");
    let mut outbox = BTreeMap::new();
    for (&r, links) in &sends {
        let mut buf = Vec::new();
        for (link, &announced) in links.iter().zip(&send_sizes[&r]) {
            let values = data.restrict(link.local);
            if values.len() != announced {
                return Err(CompletionError::SizeMismatch {
                    point: link.local,
                    announced,
                    actual: values.len(),
                });
            }
            values.iter().for_each(|v| v.put(&mut buf));
        }
        outbox.insert(r, buf);
    }
    let inbox = comm.exchange(&tag, outbox)?;
    expect_from(&tag, &inbox, &recvs)?;
    let mut received = OverlapSection::default();
    for (&r, links) in &recvs {
        let sizes = &recv_sizes[&r];
        let buf = &inbox[&r];
        let expected = sizes.iter().sum::<usize>() * V::WIDTH;
        if buf.len() != expected {
            return Err(CompletionError::BadLength {
                tag,
                from: r,
                expected,
                actual: buf.len(),
            });
        }
        let mut chunks = buf.chunks_exact(V::WIDTH);
        for (link, &n) in links.iter().zip(sizes) {
            received.push(*link, chunks.by_ref().take(n).map(V::get));
        }
    }
    Ok(received)
}

/// Folding received overlap values into local storage.
pub trait Fuse<V> {
    fn fuse(&mut self, received: &OverlapSection<V>, delta: Delta) -> Result<(), CompletionError>;
}

/// Received values land on each link's local point. The fiber dimension there
/// must already match.
impl<V: SectionValue> Fuse<V> for Section<V> {
    fn fuse(&mut self, received: &OverlapSection<V>, delta: Delta) -> Result<(), CompletionError> {
        for (link, values) in received.iter() {
            let local = self.fiber_dimension(link.local);
            if local != values.len() {
                return Err(SectionError::Dimension {
                    point: link.local,
                    expected: local,
                    actual: values.len(),
                }
                .into());
            }
            if values.is_empty() {
                continue;
            }
            let mode = match delta {
                Delta::Insert | Delta::Replace => UpdateMode::Replace,
                Delta::Add => UpdateMode::Add,
            };
            self.update(link.local, values, mode)?;
        }
        Ok(())
    }
}

/// Received cones become arrows into each link's local point.
impl<A: Default> Fuse<Point> for Sieve<A> {
    fn fuse(
        &mut self,
        received: &OverlapSection<Point>,
        delta: Delta,
    ) -> Result<(), CompletionError> {
        for (link, cone) in received.iter() {
            match delta {
                Delta::Insert => {}
                Delta::Replace => self.clear_cone(link.local),
                Delta::Add => return Err(SectionError::NotAdditive.into()),
            }
            self.add_point(link.local);
            for &q in cone {
                self.add_arrow(q, link.local)?;
            }
        }
        Ok(())
    }
}

/// Fuses received supports into a sieve: each received point becomes the
/// target of an arrow from the link's local point.
pub struct SupportFusion<'a, A>(pub &'a mut Sieve<A>);

impl<A: Default> Fuse<Point> for SupportFusion<'_, A> {
    fn fuse(
        &mut self,
        received: &OverlapSection<Point>,
        delta: Delta,
    ) -> Result<(), CompletionError> {
        for (link, support) in received.iter() {
            match delta {
                Delta::Insert => {}
                Delta::Replace => {
                    for t in self.0.support(link.local).to_vec() {
                        self.0.remove_arrow(link.local, t);
                    }
                }
                Delta::Add => return Err(SectionError::NotAdditive.into()),
            }
            self.0.add_point(link.local);
            for &t in support {
                self.0.add_arrow(link.local, t)?;
            }
        }
        Ok(())
    }
}

fn single(n: usize) -> Cow<'static, [usize]> {
    Cow::Owned(vec![n])
}

/// Over partition point `π`: the number of sieve points in partition `π`.
#[derive(Debug, Clone, Copy)]
pub struct PartitionSizeSection<'a> {
    parts: &'a [Vec<Point>],
}

/// Over partition point `π`: the sieve points of partition `π`.
#[derive(Debug, Clone, Copy)]
pub struct PartitionSection<'a> {
    parts: &'a [Vec<Point>],
}

fn part(parts: &[Vec<Point>], p: Point) -> &[Point] {
    usize::try_from(p.0)
        .ok()
        .and_then(|i| parts.get(i))
        .map_or(&[], Vec::as_slice)
}

impl Sizer for PartitionSizeSection<'_> {
    fn size(&self, p: Point) -> usize {
        part(self.parts, p).len()
    }
}

impl Restrict<usize> for PartitionSizeSection<'_> {
    fn restrict(&self, p: Point) -> Cow<'_, [usize]> {
        single(self.size(p))
    }
}

impl Restrict<Point> for PartitionSection<'_> {
    fn restrict(&self, p: Point) -> Cow<'_, [Point]> {
        Cow::Borrowed(part(self.parts, p))
    }
}

/// Adapters over per-partition point lists; partition point `π` is
/// `Point(π)`.
pub fn partition_sections(
    point_sets: &[Vec<Point>],
) -> (PartitionSizeSection<'_>, PartitionSection<'_>) {
    (
        PartitionSizeSection { parts: point_sets },
        PartitionSection { parts: point_sets },
    )
}

/// Over a point: the size of its cone.
#[derive(Debug)]
pub struct ConeSizeSection<'a, A>(&'a Sieve<A>);

/// Over a point: its cone, in cone order.
#[derive(Debug)]
pub struct ConeSection<'a, A>(&'a Sieve<A>);

impl<A> Sizer for ConeSizeSection<'_, A> {
    fn size(&self, p: Point) -> usize {
        self.0.cone(p).len()
    }
}

impl<A> Restrict<usize> for ConeSizeSection<'_, A> {
    fn restrict(&self, p: Point) -> Cow<'_, [usize]> {
        single(self.size(p))
    }
}

impl<A> Restrict<Point> for ConeSection<'_, A> {
    fn restrict(&self, p: Point) -> Cow<'_, [Point]> {
        Cow::Borrowed(self.0.cone(p))
    }
}

pub fn cone_sections<A>(sieve: &Sieve<A>) -> (ConeSizeSection<'_, A>, ConeSection<'_, A>) {
    (ConeSizeSection(sieve), ConeSection(sieve))
}

/// Over a point: the size of its support.
#[derive(Debug)]
pub struct SupportSizeSection<'a, A>(&'a Sieve<A>);

/// Over a point: its support.
#[derive(Debug)]
pub struct SupportSection<'a, A>(&'a Sieve<A>);

impl<A> Sizer for SupportSizeSection<'_, A> {
    fn size(&self, p: Point) -> usize {
        self.0.support(p).len()
    }
}

impl<A> Restrict<Point> for SupportSection<'_, A> {
    fn restrict(&self, p: Point) -> Cow<'_, [Point]> {
        Cow::Borrowed(self.0.support(p))
    }
}

pub fn support_sections<A>(sieve: &Sieve<A>) -> (SupportSizeSection<'_, A>, SupportSection<'_, A>) {
    (SupportSizeSection(sieve), SupportSection(sieve))
}

/// Substitutes each point's fiber dimension for its values.
#[derive(Debug)]
pub struct AtlasSizer<'a, V>(&'a Section<V>);

impl<V: SectionValue> Sizer for AtlasSizer<'_, V> {
    fn size(&self, p: Point) -> usize {
        self.0.fiber_dimension(p)
    }
}

impl<V: SectionValue> Restrict<usize> for AtlasSizer<'_, V> {
    fn restrict(&self, p: Point) -> Cow<'_, [usize]> {
        single(self.size(p))
    }
}

/// Section-like objects that can describe their own layout as a sizer.
pub trait Atlased {
    type Sizer<'a>: Sizer
    where
        Self: 'a;

    fn atlas_sizer(&self) -> Self::Sizer<'_>;
}

impl<V: SectionValue> Atlased for Section<V> {
    type Sizer<'a>
        = AtlasSizer<'a, V>
    where
        V: 'a;

    fn atlas_sizer(&self) -> AtlasSizer<'_, V> {
        AtlasSizer(self)
    }
}

/// A constant section has one value everywhere, so its atlas is uniform and
/// completing it needs no size exchange.
impl<V> Atlased for ConstantSection<V> {
    type Sizer<'a>
        = ConstantSection<usize>
    where
        V: 'a;

    fn atlas_sizer(&self) -> ConstantSection<usize> {
        ConstantSection::new(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::run_group;
    use crate::fixtures;
    use crate::overlap::broadcast_overlap;
    use crate::points;

    #[test]
    fn empty_overlap_sends_nothing() {
        let run = run_group(3, |c| {
            let ov = Overlap::new(c.rank(), 3);
            let data: Section<f64> = Section::with_layout([(Point(0), 2)]);
            complete_section(c, "empty", &ov, &data.atlas_sizer(), &data)
        })
        .unwrap();
        assert!(run.results.iter().all(OverlapSection::is_empty));
        assert_eq!(run.transcript.messages(), 0);
    }

    #[test]
    fn doublet_partition_reaches_rank_one() {
        let sets = vec![
            points(&[0, 2, 3, 4, 7, 8, 9]),
            points(&[1, 4, 5, 6, 7, 8, 10]),
        ];
        let run = run_group(2, |c| {
            let ov = broadcast_overlap(c.rank(), 2, 0);
            let mine = if c.rank() == 0 {
                sets.clone()
            } else {
                Vec::new()
            };
            let (sizes, parts) = partition_sections(&mine);
            complete_section(c, "partition", &ov, &sizes, &parts)
        })
        .unwrap();
        assert!(run.results[0].is_empty());
        assert_eq!(
            run.results[1].restrict(0, Point(1)).unwrap(),
            sets[1].as_slice()
        );
        // one sizer message and one data message, rank 0 to rank 1
        let lines = run.transcript.to_string();
        assert_eq!(lines, "0 partition/sizer 0 1 8\n1 partition/data 0 1 56\n");
    }

    #[test]
    fn constant_sizer_skips_size_round() {
        let run = run_group(2, |c| {
            let ov = broadcast_overlap(c.rank(), 2, 0);
            let ones = ConstantSection::new(Point(42));
            complete_section(c, "const", &ov, &ones.atlas_sizer(), &ones)
        })
        .unwrap();
        assert_eq!(run.results[1].restrict(0, Point(1)).unwrap(), &[Point(42)]);
        assert_eq!(run.transcript.phases, 1);
    }

    #[test]
    fn lying_sizer_is_a_protocol_error() {
        let err = run_group(2, |c| {
            let ov = broadcast_overlap(c.rank(), 2, 0);
            let data: Section<f64> = Section::with_layout([(Point(1), 2)]);
            complete_section(c, "lie", &ov, &ConstantSection::new(3), &data)
        })
        .unwrap_err();
        assert_eq!(
            err,
            CompletionError::SizeMismatch {
                point: Point(1),
                announced: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn cone_adapters() {
        let s = fixtures::doublet_sieve();
        let (sizes, cones) = cone_sections(&s);
        assert_eq!(sizes.size(Point(0)), 3);
        assert_eq!(
            cones.restrict(Point(0)).as_ref(),
            points(&[2, 3, 4]).as_slice()
        );
        assert_eq!(sizes.size(Point(8)), 0);
        assert!(cones.restrict(Point(8)).is_empty());
        let tri8 = fixtures::tri8();
        let (sizes, _) = cone_sections(&tri8.sieve);
        assert!((0..8).all(|c| sizes.size(Point(c)) == 3));
    }

    #[test]
    fn partition_adapters() {
        let sets = vec![Vec::new(), points(&[1, 4, 5, 6, 7, 8, 10])];
        let (sizes, parts) = partition_sections(&sets);
        assert_eq!(sizes.size(Point(0)), 0);
        assert!(parts.restrict(Point(0)).is_empty());
        assert_eq!(sizes.size(Point(1)), 7);
        assert_eq!(sizes.size(Point(5)), 0);
        assert!(parts.restrict(Point(5)).is_empty());
    }

    #[test]
    fn atlas_adapters() {
        let mesh = fixtures::doublet();
        let sizer = mesh.coordinates().atlas_sizer();
        assert_eq!(sizer.size(Point(8)), 2);
        assert_eq!(sizer.size(Point(0)), 0);
        assert_eq!(sizer.restrict(Point(8)).as_ref(), &[2]);
        let c = ConstantSection::new(1.5).atlas_sizer();
        assert_eq!((c.size(Point(3)), c.uniform()), (1, Some(1)));
    }

    fn received(link: OverlapLink, values: &[f64]) -> OverlapSection<f64> {
        let mut out = OverlapSection::default();
        out.push(link, values.iter().copied());
        out
    }

    #[test]
    fn additive_fuse_assembles_partial_values() {
        let mut local: Section<f64> = Section::with_layout([(Point(7), 1)]);
        local.update(Point(7), &[1.0], UpdateMode::Replace).unwrap();
        let link = OverlapLink {
            local: Point(7),
            rank: 1,
            remote: Point(7),
        };
        local.fuse(&received(link, &[1.0]), Delta::Add).unwrap();
        assert_eq!(local.restrict_point(Point(7)).unwrap(), &[2.0]);
    }

    #[test]
    fn insert_fuse_is_idempotent() {
        let mut local: Section<f64> = Section::with_layout([(Point(7), 2)]);
        let link = OverlapLink {
            local: Point(7),
            rank: 1,
            remote: Point(7),
        };
        let incoming = received(link, &[0.5, 2.0]);
        local.fuse(&incoming, Delta::Insert).unwrap();
        let once = local.clone();
        local.fuse(&incoming, Delta::Insert).unwrap();
        assert_eq!(local, once);

        let mut sieve: Sieve = Sieve::new();
        let mut cones = OverlapSection::default();
        cones.push(link, points(&[2, 3]));
        sieve.fuse(&cones, Delta::Insert).unwrap();
        let once = sieve.clone();
        sieve.fuse(&cones, Delta::Insert).unwrap();
        assert_eq!(sieve, once);
        assert_eq!(sieve.cone(Point(7)), points(&[2, 3]).as_slice());
    }

    #[test]
    fn fuse_dimension_conflict() {
        let mut local: Section<f64> = Section::with_layout([(Point(7), 2)]);
        let link = OverlapLink {
            local: Point(7),
            rank: 1,
            remote: Point(7),
        };
        let err = local
            .fuse(&received(link, &[1.0]), Delta::Replace)
            .unwrap_err();
        assert!(matches!(
            err,
            CompletionError::Section(SectionError::Dimension { .. })
        ));
        let mut sieve: Sieve = Sieve::new();
        let mut cones = OverlapSection::default();
        cones.push(link, points(&[2]));
        assert!(sieve.fuse(&cones, Delta::Add).is_err());
    }

    #[test]
    fn replace_fuse_overwrites_cone() {
        let mut sieve = fixtures::doublet_sieve();
        let mut cones = OverlapSection::default();
        cones.push(
            OverlapLink {
                local: Point(0),
                rank: 1,
                remote: Point(0),
            },
            points(&[5, 6]),
        );
        sieve.fuse(&cones, Delta::Replace).unwrap();
        assert_eq!(sieve.cone(Point(0)), points(&[5, 6]).as_slice());
    }

    #[test]
    fn wire_round_trip() {
        let mut buf = Vec::new();
        (-0.0f64).put(&mut buf);
        f64::MIN_POSITIVE.put(&mut buf);
        Point(u64::MAX).put(&mut buf);
        assert_eq!(buf.len(), 24);
        assert_eq!(f64::get(&buf[0..8]).to_bits(), (-0.0f64).to_bits());
        assert_eq!(f64::get(&buf[8..16]), f64::MIN_POSITIVE);
        assert_eq!(Point::get(&buf[16..24]), Point(u64::MAX));
        assert_eq!(&buf[16..24], &[0xff; 8]);
    }
}
