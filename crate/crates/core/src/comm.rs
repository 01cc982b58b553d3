//! A deterministic in-process process group.
//!
//! [`run_group`] runs one program per simulated rank, each on its own thread.
//! The only communication primitive is the collective
//! [`Communicator::exchange`]: every rank posts a map of outgoing buffers and
//! blocks until all ranks have posted, then receives the buffers addressed to
//! it keyed by source rank. Delivery order and content never depend on thread
//! scheduling, and every message is recorded in a [`Transcript`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Condvar, Mutex, MutexGuard};

use thiserror::Error;

use crate::Rank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommError {
    #[error("a process group needs at least one rank")]
    EmptyGroup,
    #[error("rank {rank} addressed rank {dest} in a group of {size}")]
    DestinationOutOfRange { rank: Rank, dest: Rank, size: usize },
    #[error("collective mismatch in exchange {phase}: {detail}")]
    CollectiveMismatch { phase: u64, detail: String },
    #[error("rank {0} failed; collective aborted")]
    PeerFailed(Rank),
}

/// Access to the group from inside a rank program.
pub trait Communicator {
    fn rank(&self) -> Rank;
    fn size(&self) -> usize;

    /// Collective neighbor exchange. Every rank must call it in the same
    /// order with the same `tag`; the send map may be empty. Returns the
    /// buffers addressed to this rank keyed by source, ascending.
    fn exchange(
        &mut self,
        tag: &str,
        sends: BTreeMap<Rank, Vec<u8>>,
    ) -> Result<BTreeMap<Rank, Vec<u8>>, CommError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub phase: u64,
    pub tag: String,
    pub src: Rank,
    pub dst: Rank,
    pub bytes: usize,
}

impl fmt::Display for TranscriptEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.phase, self.tag, self.src, self.dst, self.bytes
        )
    }
}

/// Every message of a run, ordered by (phase, source, destination).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    /// Number of exchange phases the group went through.
    pub phases: u64,
}

impl Transcript {
    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.bytes).sum()
    }

    pub fn messages(&self) -> usize {
        self.entries.len()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Per-rank results of a group run plus its message log.
#[derive(Debug)]
pub struct GroupRun<T> {
    pub results: Vec<T>,
    pub transcript: Transcript,
}

type Outbox = BTreeMap<Rank, Vec<u8>>;

struct HubState {
    generation: u64,
    arrived: usize,
    finished: usize,
    posted: Vec<Option<(String, Outbox)>>,
    delivered: Vec<Option<Outbox>>,
    failure: Option<CommError>,
    failed_ranks: Vec<Rank>,
    transcript: Vec<TranscriptEntry>,
}

struct Hub {
    size: usize,
    state: Mutex<HubState>,
    turn: Condvar,
}

impl Hub {
    fn new(size: usize) -> Self {
        Self {
            size,
            state: Mutex::new(HubState {
                generation: 0,
                arrived: 0,
                finished: 0,
                posted: vec![None; size],
                delivered: vec![None; size],
                failure: None,
                failed_ranks: Vec::new(),
                transcript: Vec::new(),
            }),
            turn: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, HubState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Routes the posted buffers once every rank has arrived.
    fn route(&self, st: &mut HubState) {
        let tags: Vec<&str> = st
            .posted
            .iter()
            .map(|p| p.as_ref().map_or("", |(t, _)| t.as_str()))
            .collect();
        if tags.iter().any(|t| *t != tags[0]) {
            st.failure = Some(CommError::CollectiveMismatch {
                phase: st.generation,
                detail: format!("ranks posted different tags {tags:?}"),
            });
            return;
        }
        let tag = tags[0].to_string();
        for src in 0..self.size {
            let (_, outbox) = st.posted[src].take().expect("every rank posted");
            for (dst, buf) in outbox {
                st.transcript.push(TranscriptEntry {
                    phase: st.generation,
                    tag: tag.clone(),
                    src,
                    dst,
                    bytes: buf.len(),
                });
                st.delivered[dst]
                    .get_or_insert_with(BTreeMap::new)
                    .insert(src, buf);
            }
        }
        for slot in &mut st.delivered {
            slot.get_or_insert_with(BTreeMap::new);
        }
        st.arrived = 0;
        st.generation += 1;
    }

    /// Fails the phase when some rank has finished while others still wait.
    fn check_stall(&self, st: &mut HubState) {
        if st.failure.is_none()
            && st.arrived > 0
            && st.finished > 0
            && st.arrived + st.finished == self.size
        {
            let waiting: Vec<String> = st
                .posted
                .iter()
                .enumerate()
                .filter_map(|(r, p)| p.as_ref().map(|(t, _)| format!("rank {r} in '{t}'")))
                .collect();
            st.failure = Some(CommError::CollectiveMismatch {
                phase: st.generation,
                detail: format!(
                    "{} waiting while {} rank(s) already finished",
                    waiting.join(", "),
                    st.finished
                ),
            });
        }
    }

    fn exchange(&self, rank: Rank, tag: &str, sends: Outbox) -> Result<Outbox, CommError> {
        let mut st = self.lock();
        if let Some(err) = &st.failure {
            return Err(err.clone());
        }
        if let Some(&dest) = sends.keys().find(|&&d| d >= self.size) {
            return Err(CommError::DestinationOutOfRange {
                rank,
                dest,
                size: self.size,
            });
        }
        st.posted[rank] = Some((tag.to_string(), sends));
        st.arrived += 1;
        let generation = st.generation;
        if st.arrived == self.size {
            self.route(&mut st);
        } else {
            self.check_stall(&mut st);
        }
        self.turn.notify_all();
        while st.generation == generation && st.failure.is_none() {
            st = self.turn.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        if st.generation != generation {
            Ok(st.delivered[rank].take().unwrap_or_default())
        } else {
            Err(st.failure.clone().expect("woken by failure"))
        }
    }

    fn finish(&self, rank: Rank, failed: bool) {
        let mut st = self.lock();
        st.finished += 1;
        if failed {
            st.failed_ranks.push(rank);
            if st.failure.is_none() {
                st.failure = Some(CommError::PeerFailed(rank));
            }
        }
        self.check_stall(&mut st);
        self.turn.notify_all();
    }
}

/// The [`Communicator`] handed to each rank program by [`run_group`].
pub struct RankComm<'a> {
    rank: Rank,
    hub: &'a Hub,
}

impl Communicator for RankComm<'_> {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn size(&self) -> usize {
        self.hub.size
    }

    fn exchange(&mut self, tag: &str, sends: Outbox) -> Result<Outbox, CommError> {
        self.hub.exchange(self.rank, tag, sends)
    }
}

/// Marks a rank finished even when its program panics.
struct FinishGuard<'a> {
    rank: Rank,
    hub: &'a Hub,
    failed: bool,
}

impl Drop for FinishGuard<'_> {
    fn drop(&mut self) {
        self.hub
            .finish(self.rank, self.failed || std::thread::panicking());
    }
}

/// Runs `program` on `size` simulated ranks and collects their results.
///
/// If any rank fails, the error of the first rank to fail is returned; ranks
/// blocked in an exchange at that time are released with
/// [`CommError::PeerFailed`]. A rank still waiting in an exchange after all
/// others have returned gets [`CommError::CollectiveMismatch`].
pub fn run_group<T, E, F>(size: usize, program: F) -> Result<GroupRun<T>, E>
where
    F: Fn(&mut RankComm<'_>) -> Result<T, E> + Sync,
    T: Send,
    E: Send + From<CommError>,
{
    if size == 0 {
        return Err(CommError::EmptyGroup.into());
    }
    let hub = Hub::new(size);
    let outcomes: Vec<Result<T, E>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..size)
            .map(|rank| {
                let hub = &hub;
                let program = &program;
                scope.spawn(move || {
                    let mut guard = FinishGuard {
                        rank,
                        hub,
                        failed: false,
                    };
                    let mut comm = RankComm { rank, hub };
                    let out = program(&mut comm);
                    guard.failed = out.is_err();
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });
    let st = hub.lock();
    let first_failed = st.failed_ranks.first().copied();
    let transcript = Transcript {
        entries: st.transcript.clone(),
        phases: st.generation,
    };
    drop(st);
    let mut results = Vec::with_capacity(size);
    let mut outcomes: Vec<Option<Result<T, E>>> = outcomes.into_iter().map(Some).collect();
    if let Some(rank) = first_failed {
        if let Some(Err(e)) = outcomes[rank].take() {
            return Err(e);
        }
    }
    for outcome in outcomes.into_iter().flatten() {
        results.push(outcome?);
    }
    Ok(GroupRun {
        results,
        transcript,
    })
}
