//! On-disk form of a distributed mesh.
//!
//! Rank `k` is stored as `rank<k>.mesh`, a mesh file in local numbering, and
//! `rank<k>.overlap`:
//!
//! ```text
//! rank <k> <size>
//! ids <global id of local point 0> <... of local point 1> ...
//! owned <owned element ids>
//! link send <local> <rank> <remote>
//! link recv <local> <rank> <remote>
//! ```

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use sieve_core::comm::Transcript;
use sieve_core::meshops::{DistributedMesh, LocalMesh};
use sieve_core::overlap::{Direction, Overlap};
use sieve_core::toolkit::{read_mesh, relabel, write_mesh};
use sieve_core::{Point, Rank};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}: no rank0.mesh found")]
    Empty(PathBuf),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RankFileError + '_ {
    move |source| RankFileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_error(path: &Path, message: impl Display) -> RankFileError {
    RankFileError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn mesh_path(dir: &Path, rank: Rank) -> PathBuf {
    dir.join(format!("rank{rank}.mesh"))
}

fn overlap_path(dir: &Path, rank: Rank) -> PathBuf {
    dir.join(format!("rank{rank}.overlap"))
}

fn joined(points: impl IntoIterator<Item = Point>) -> String {
    points.into_iter().map(|p| format!(" {p}")).collect()
}

pub fn write_rank_dir(dm: &DistributedMesh, dir: &Path) -> Result<(), RankFileError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    for local in &dm.ranks {
        let path = mesh_path(dir, local.rank);
        let text = write_mesh(&local.mesh).map_err(|e| format_error(&path, e))?;
        fs::write(&path, text).map_err(io(&path))?;

        let mut ids = local.mesh.cells();
        ids.extend(local.mesh.vertices());
        let mut side = format!("rank {} {}\n", local.rank, dm.size());
        side.push_str(&format!("ids{}\n", joined(ids)));
        side.push_str(&format!("owned{}\n", joined(local.owned.iter().copied())));
        for (word, direction) in [("send", Direction::Send), ("recv", Direction::Recv)] {
            for link in local.overlap.links(direction) {
                side.push_str(&format!(
                    "link {word} {} {} {}\n",
                    link.local, link.rank, link.remote
                ));
            }
        }
        let path = overlap_path(dir, local.rank);
        fs::write(&path, side).map_err(io(&path))?;
    }
    Ok(())
}

struct Sidecar {
    rank: Rank,
    size: usize,
    ids: Vec<Point>,
    owned: Vec<Point>,
    overlap: Overlap,
}

fn parse_sidecar(path: &Path) -> Result<Sidecar, RankFileError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, what: &str| format_error(path, format!("line {}: {what}", line + 1));
    let numbers = |line: usize, tokens: &[&str]| -> Result<Vec<u64>, RankFileError> {
        tokens
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| bad(line, &format!("invalid number '{t}'")))
            })
            .collect()
    };
    let (n, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let header: Vec<&str> = header.split_whitespace().collect();
    let [rank, size] = match header.split_first() {
        Some((&"rank", rest)) => numbers(n, rest)?[..]
            .try_into()
            .map_err(|_| bad(n, "expected 'rank <k> <size>'"))?,
        _ => return Err(bad(n, "expected 'rank <k> <size>'")),
    };
    let (rank, size) = (rank as Rank, size as usize);
    if rank >= size {
        return Err(bad(n, "rank out of range"));
    }
    let mut ids = None;
    let mut owned = None;
    let mut overlap = Overlap::new(rank, size);
    for (n, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.split_first() {
            Some((&"ids", rest)) => ids = Some(numbers(n, rest)?),
            Some((&"owned", rest)) => owned = Some(numbers(n, rest)?),
            Some((&"link", [dir, rest @ ..])) => {
                let direction = match *dir {
                    "send" => Direction::Send,
                    "recv" => Direction::Recv,
                    _ => return Err(bad(n, "expected 'send' or 'recv'")),
                };
                let [local, peer, remote] = numbers(n, rest)?[..] else {
                    return Err(bad(
                        n,
                        "expected 'link <send|recv> <local> <rank> <remote>'",
                    ));
                };
                overlap
                    .add_link(Point(local), peer as Rank, Point(remote), direction)
                    .map_err(|e| bad(n, &e.to_string()))?;
            }
            _ => return Err(bad(n, "unknown line")),
        }
    }
    let as_points = |v: Vec<u64>| v.into_iter().map(Point).collect();
    Ok(Sidecar {
        rank,
        size,
        ids: as_points(ids.ok_or_else(|| format_error(path, "missing 'ids' line"))?),
        owned: as_points(owned.unwrap_or_default()),
        overlap,
    })
}

/// Reads only the overlap of one rank's sidecar.
pub fn read_overlap(path: &Path) -> Result<Overlap, RankFileError> {
    Ok(parse_sidecar(path)?.overlap)
}

pub fn read_rank_dir(dir: &Path) -> Result<DistributedMesh, RankFileError> {
    let mut ranks = Vec::new();
    while mesh_path(dir, ranks.len()).exists() {
        let rank = ranks.len();
        let path = mesh_path(dir, rank);
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let mesh = read_mesh(&text).map_err(|e| format_error(&path, e))?;
        let side_path = overlap_path(dir, rank);
        let side = parse_sidecar(&side_path)?;
        if side.rank != rank {
            return Err(format_error(
                &side_path,
                format!("labeled rank {}", side.rank),
            ));
        }
        if side.ids.len() != mesh.sieve.num_points() {
            return Err(format_error(
                &side_path,
                format!(
                    "{} ids for {} mesh points",
                    side.ids.len(),
                    mesh.sieve.num_points()
                ),
            ));
        }
        let map: BTreeMap<Point, Point> = side
            .ids
            .iter()
            .enumerate()
            .map(|(i, &g)| (Point(i as u64), g))
            .collect();
        let mesh = relabel(&mesh, &map).map_err(|e| format_error(&path, e))?;
        ranks.push((
            side.size,
            LocalMesh {
                rank,
                mesh,
                overlap: side.overlap,
                migration: Overlap::new(rank, side.size),
                owned: side.owned,
            },
        ));
    }
    if ranks.is_empty() {
        return Err(RankFileError::Empty(dir.to_path_buf()));
    }
    let count = ranks.len();
    if let Some((size, local)) = ranks.iter().find(|(size, _)| *size != count) {
        return Err(format_error(
            &overlap_path(dir, local.rank),
            format!("group size {size}, but {count} rank files found"),
        ));
    }
    Ok(DistributedMesh {
        ranks: ranks.into_iter().map(|(_, l)| l).collect(),
        transcript: Transcript::default(),
    })
}
