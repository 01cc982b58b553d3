//! The `sieve` command line tool.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for anything wrong
//! with the data (unreadable files, parse errors, failed checks).

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sieve_core::meshops::{
    assemble, build_dual, distribute, dual_via_reversed, partition, redistribute, DistributedMesh,
    Mesh, Method, PartitionAssignment,
};
use sieve_core::toolkit::{
    interpolate, overlap_dot, read_assignment, read_mesh, relabel_strata, sieve_dot,
    write_assignment,
};
use sieve_core::Point;

mod rankfile;

pub use rankfile::{read_rank_dir, write_rank_dir};

#[derive(Debug, Parser)]
#[command(
    name = "sieve",
    version,
    about = "Query, partition and distribute meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Op {
    Cone,
    Support,
    Closure,
    Star,
    Meet,
    Join,
    Depth,
    Height,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a covering query on a mesh file.
    ///
    /// The mesh is interpolated and renumbered cells first, then edges and
    /// faces, then vertices, unless --raw is given.
    Query {
        #[arg(long, value_enum)]
        op: Op,
        /// One point, or two for meet and join.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<u64>,
        #[arg(long)]
        raw: bool,
        mesh: PathBuf,
    },
    /// Print the dual graph, one edge per line.
    Dual {
        /// Use the reversed-arrow rule on the interpolated mesh.
        #[arg(long)]
        reversed: bool,
        mesh: PathBuf,
    },
    /// Partition the cells and print an assignment file.
    Partition {
        #[arg(long)]
        ranks: usize,
        #[arg(long, default_value = "block")]
        method: Method,
        mesh: PathBuf,
    },
    /// Distribute a mesh, writing <out>/rank<k>.mesh and rank<k>.overlap.
    Distribute {
        #[arg(long)]
        ranks: usize,
        #[arg(long, conflicts_with = "assignment")]
        method: Option<Method>,
        /// File of `<cell> <rank>` lines.
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Print the message transcript.
        #[arg(long)]
        transcript: bool,
        mesh: PathBuf,
    },
    /// Move a distributed mesh to a new assignment of its owned cells.
    Redistribute {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        transcript: bool,
    },
    /// Assemble a distributed mesh and check it.
    Check {
        /// Compare the assembled mesh with this serial mesh.
        #[arg(long)]
        original: Option<PathBuf>,
        dir: PathBuf,
    },
    /// Print a mesh, or one rank's overlap, in DOT format.
    Dot {
        #[arg(long)]
        raw: bool,
        /// A rank<k>.overlap file to render instead of a mesh.
        #[arg(long, conflicts_with = "mesh")]
        overlap: Option<PathBuf>,
        #[arg(required_unless_present = "overlap")]
        mesh: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

fn data(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    read_mesh(&read_file(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_assignment(path: &Path) -> Result<PartitionAssignment, Failure> {
    read_assignment(&read_file(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn set_string(points: &[Point]) -> String {
    let items: Vec<String> = points.iter().map(Point::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Interpolated and renumbered by stratum.
fn prepared(mesh: Mesh) -> Result<Mesh, Failure> {
    let mesh = interpolate(&mesh).map_err(data)?;
    Ok(relabel_strata(&mesh).map_err(data)?.0)
}

fn query(op: Op, ids: &[u64], raw: bool, path: &Path) -> Result<String, Failure> {
    let mut mesh = load_mesh(path)?;
    if !raw {
        mesh = prepared(mesh)?;
    }
    let s = &mesh.sieve;
    let binary = matches!(op, Op::Meet | Op::Join);
    let arity = if binary { 2 } else { 1 };
    if ids.len() != arity {
        return Err(Failure::Usage(format!(
            "--op {} takes {arity} point(s), got {}",
            op.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
            ids.len()
        )));
    }
    let p = Point(ids[0]);
    if let Some(&missing) = ids.iter().find(|&&id| !s.contains(Point(id))) {
        return Err(Failure::Data(format!("point {missing} is not in the mesh")));
    }
    Ok(match op {
        Op::Cone => set_string(s.cone(p)),
        Op::Support => set_string(s.support(p)),
        Op::Closure => set_string(&s.closure(p)),
        Op::Star => set_string(&s.star(p)),
        Op::Meet => set_string(&s.meet(p, Point(ids[1]))),
        Op::Join => set_string(&s.join(p, Point(ids[1]))),
        Op::Depth => s.depth(p).map_err(data)?.to_string(),
        Op::Height => s.height(p).map_err(data)?.to_string(),
    })
}

fn write_ranks(
    dm: &DistributedMesh,
    out: &Path,
    transcript: bool,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    write_rank_dir(dm, out).map_err(data)?;
    if transcript {
        write!(stdout, "{}", dm.transcript).map_err(data)?;
    }
    writeln!(stdout, "wrote {} ranks to {}", dm.size(), out.display()).map_err(data)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Query {
            op,
            points,
            raw,
            mesh,
        } => {
            let answer = query(op, &points, raw, &mesh)?;
            writeln!(stdout, "{answer}").map_err(data)
        }
        Command::Dual { reversed, mesh } => {
            let mesh = load_mesh(&mesh)?;
            let dual = if reversed {
                dual_via_reversed(&interpolate(&mesh).map_err(data)?.sieve)
            } else {
                build_dual(&mesh.sieve, mesh.topological_dim)
            };
            for (a, b) in dual.edges() {
                writeln!(stdout, "{a} {b}").map_err(data)?;
            }
            Ok(())
        }
        Command::Partition {
            ranks,
            method,
            mesh,
        } => {
            let mesh = load_mesh(&mesh)?;
            let dual = build_dual(&mesh.sieve, mesh.topological_dim);
            let assignment = partition(&dual, ranks, method).map_err(data)?;
            write!(stdout, "{}", write_assignment(&assignment)).map_err(data)
        }
        Command::Distribute {
            ranks,
            method,
            assignment,
            out,
            transcript,
            mesh,
        } => {
            let mesh = load_mesh(&mesh)?;
            let assignment = match assignment {
                Some(path) => load_assignment(&path)?,
                None => {
                    let dual = build_dual(&mesh.sieve, mesh.topological_dim);
                    partition(&dual, ranks, method.unwrap_or_default()).map_err(data)?
                }
            };
            let dm = distribute(&mesh, &assignment, ranks).map_err(data)?;
            write_ranks(&dm, &out, transcript, stdout)
        }
        Command::Redistribute {
            from,
            assignment,
            out,
            transcript,
        } => {
            let current = read_rank_dir(&from).map_err(data)?;
            let assignment = load_assignment(&assignment)?;
            let dm = redistribute(&current, &assignment).map_err(data)?;
            write_ranks(&dm, &out, transcript, stdout)
        }
        Command::Check { original, dir } => {
            let dm = read_rank_dir(&dir).map_err(data)?;
            let mesh = assemble(&dm).map_err(data)?;
            if let Some(path) = original {
                if load_mesh(&path)? != mesh {
                    return Err(Failure::Data(format!(
                        "assembled mesh differs from {}",
                        path.display()
                    )));
                }
            }
            writeln!(
                stdout,
                "round-trip OK: {} ranks, {} points, {} arrows",
                dm.size(),
                mesh.sieve.num_points(),
                mesh.sieve.num_arrows()
            )
            .map_err(data)
        }
        Command::Dot { raw, overlap, mesh } => {
            let text = match (overlap, mesh) {
                (Some(path), _) => overlap_dot(&rankfile::read_overlap(&path).map_err(data)?),
                (None, Some(path)) => {
                    let mut mesh = load_mesh(&path)?;
                    if !raw {
                        mesh = prepared(mesh)?;
                    }
                    sieve_dot(&mesh.sieve).map_err(data)?
                }
                (None, None) => return Err(Failure::Usage("nothing to render".into())),
            };
            write!(stdout, "{text}").map_err(data)
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}
