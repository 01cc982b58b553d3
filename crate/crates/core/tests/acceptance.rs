//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use sieve_core::comm::{run_group, Communicator};
use sieve_core::completion::{complete_section, partition_sections, Atlased, Fuse};
use sieve_core::fixtures;
use sieve_core::meshops::{
    assemble, block_assignment, build_dual, distribute, dual_via_reversed, partition_points,
    redistribute, DistributedMesh, Mesh, MeshError, PartitionAssignment,
};
use sieve_core::overlap::{broadcast_overlap, check_mirror, Delta, Direction, Overlap};
use sieve_core::toolkit::interpolate;
use sieve_core::{points, Point};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn set(ids: &[u64]) -> BTreeSet<Point> {
    points(ids).into_iter().collect()
}

fn as_set(seq: &[Point]) -> BTreeSet<Point> {
    seq.iter().copied().collect()
}

fn doublet_queries() -> Outcome {
    let s = fixtures::doublet_sieve();
    let p = Point;
    let rows: [(&str, BTreeSet<Point>, BTreeSet<Point>); 7] = [
        ("cone(0)", as_set(s.cone(p(0))), set(&[2, 3, 4])),
        ("support(4)", as_set(s.support(p(4))), set(&[0, 1])),
        (
            "closure(1)",
            as_set(&s.closure(p(1))),
            set(&[4, 5, 6, 7, 10, 8]),
        ),
        ("star(8)", as_set(&s.star(p(8))), set(&[2, 4, 6, 0, 1])),
        ("meet(0,1)", as_set(&s.meet(p(0), p(1))), set(&[4])),
        ("join(2,4)", as_set(&s.join(p(2), p(4))), set(&[0])),
        ("join(2,5)", as_set(&s.join(p(2), p(5))), set(&[])),
    ];
    for (name, got, want) in &rows {
        ensure(got == want, format!("{name} = {got:?}, expected {want:?}"))?;
    }
    Ok(format!("{}/7 rows exact", rows.len()))
}

fn oracle_equivalence() -> Outcome {
    let (mut sieves, mut pairs) = (0, 0);
    for seed in 0..240u64 {
        let n = 1 + (seed as usize * 7) % 30;
        let density = [0.03, 0.06, 0.1, 0.15][seed as usize % 4];
        let s = common::random_sieve(seed, n, density);
        pairs += common::check_against_oracles(&s).map_err(|e| format!("seed {seed}: {e}"))?;
        sieves += 1;
    }
    Ok(format!(
        "{sieves} random sieves, {pairs} point pairs, all agree"
    ))
}

fn mirrored(dm: &DistributedMesh) -> Result<(), String> {
    let sharing: Vec<Overlap> = dm.ranks.iter().map(|l| l.overlap.clone()).collect();
    check_mirror(&sharing).map_err(|e| e.to_string())?;
    let migration: Vec<Overlap> = dm.ranks.iter().map(|l| l.migration.clone()).collect();
    check_mirror(&migration).map_err(|e| e.to_string())
}

fn tri8_distribution() -> Outcome {
    let mesh = fixtures::tri8();
    let assignment = fixtures::tri8_split_assignment();

    // the partition section as rank 1 receives it
    let sets = partition_points(&mesh.sieve, &assignment, 2);
    let run = run_group(2, |comm| {
        let ov = broadcast_overlap(comm.rank(), 2, 0);
        let mine = if comm.rank() == 0 {
            sets.clone()
        } else {
            Vec::new()
        };
        let (sizes, parts) = partition_sections(&mine);
        complete_section(comm, "partition", &ov, &sizes, &parts)
    })
    .map_err(|e| e.to_string())?;
    let received = run.results[1]
        .restrict(0, Point(1))
        .ok_or("rank 1 received no partition")?;
    let cells = received.iter().filter(|p| p.0 < 8).count();
    let vertices = received.iter().filter(|p| p.0 >= 8).count();
    ensure(
        (cells, vertices) == (4, 6),
        format!("partition 1 has {cells} cells and {vertices} vertices"),
    )?;

    let dm = distribute(&mesh, &assignment, 2).map_err(|e| e.to_string())?;
    mirrored(&dm)?;
    let interface: BTreeSet<Point> = dm.ranks[0]
        .mesh
        .sieve
        .points()
        .filter(|&p| dm.ranks[1].mesh.sieve.contains(p))
        .collect();
    ensure(
        interface == set(&[9, 11, 12, 13, 15]),
        format!("interface {interface:?}"),
    )?;
    for &p in &interface {
        for (me, other) in [(0, 1), (1, 0)] {
            let links = dm.ranks[me].overlap.links_to(other, Direction::Send);
            ensure(
                links.iter().any(|l| l.local == p && l.remote == p),
                format!("rank {me} has no link for interface point {p}"),
            )?;
        }
    }
    let back = assemble(&dm).map_err(|e| e.to_string())?;
    ensure(back == mesh, "assemble(distribute(m)) differs from m")?;
    Ok(format!(
        "partition 1 = {cells} cells + {vertices} vertices, {} mirrored interface points, round trip exact",
        interface.len()
    ))
}

fn redistribution() -> Outcome {
    let mesh = fixtures::tri8();
    let start =
        distribute(&mesh, &fixtures::tri8_initial_assignment(), 2).map_err(|e| e.to_string())?;
    let moved =
        redistribute(&start, &fixtures::tri8_split_assignment()).map_err(|e| e.to_string())?;
    let direct =
        distribute(&mesh, &fixtures::tri8_split_assignment(), 2).map_err(|e| e.to_string())?;
    for (x, y) in moved.ranks.iter().zip(&direct.ranks) {
        ensure(
            x.mesh.sieve == y.mesh.sieve,
            format!("rank {} sieves differ", x.rank),
        )?;
        let bits = |m: &Mesh| -> Vec<u64> {
            m.coordinates()
                .storage()
                .iter()
                .map(|v| v.to_bits())
                .collect()
        };
        ensure(
            x.mesh
                .coordinates()
                .atlas()
                .eq(y.mesh.coordinates().atlas())
                && bits(&x.mesh) == bits(&y.mesh),
            format!("rank {} coordinates differ", x.rank),
        )?;
        ensure(
            x.owned == y.owned,
            format!("rank {} owns different cells", x.rank),
        )?;
    }
    for local in &moved.ranks {
        ensure(
            local.migration.len(Direction::Send) > 0 && local.migration.len(Direction::Recv) > 0,
            format!("rank {} did not both send and receive", local.rank),
        )?;
    }
    Ok(
        "{4,5,6,7 | 0,1,2,3} -> {0,1,2,4 | 3,5,6,7} equals direct distribution on both ranks"
            .into(),
    )
}

/// Checks a distribution and that every rank owning an element also holds
/// every cell around it.
fn generic_case(
    mesh: &Mesh,
    assignment: &PartitionAssignment,
    size: usize,
) -> Result<usize, String> {
    let dm = distribute(mesh, assignment, size).map_err(|e| e.to_string())?;
    mirrored(&dm)?;
    for (e, rank) in assignment.iter() {
        for c in mesh.sieve.star(e) {
            ensure(
                dm.ranks[rank].mesh.sieve.contains(c),
                format!("rank {rank} owns {e} but lacks adjacent cell {c}"),
            )?;
        }
    }
    let back = assemble(&dm).map_err(|e| e.to_string())?;
    ensure(&back == mesh, format!("round trip differs with P={size}"))?;
    let cells = mesh.cells();
    let ghosts = cells
        .iter()
        .filter(|&&c| dm.ranks.iter().filter(|l| l.mesh.sieve.contains(c)).count() > 1)
        .count();
    Ok(ghosts)
}

fn genericity() -> Outcome {
    let hex = fixtures::two_hex_interpolated();
    let faces = hex
        .sieve
        .stratify()
        .map_err(|e| e.to_string())?
        .height_stratum(1);
    let cases: Vec<(&str, Mesh, Vec<Point>)> = vec![
        ("doublet", fixtures::doublet(), fixtures::doublet().cells()),
        ("tri8", fixtures::tri8(), fixtures::tri8().cells()),
        ("two_hex faces", hex, faces),
    ];
    let mut runs = 0;
    for (name, mesh, elements) in &cases {
        for size in (1..=4).filter(|&p| p <= elements.len()) {
            let a = block_assignment(elements, size).map_err(|e| e.to_string())?;
            let ghosts = generic_case(mesh, &a, size).map_err(|e| format!("{name}: {e}"))?;
            if *name == "two_hex faces" && size > 1 {
                ensure(ghosts > 0, format!("{name} P={size}: no ghost cells"))?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} distributions over 2D/3D, cell and face partitions; face partitions carry ghost cells"))
}

fn completion_properties() -> Outcome {
    let mesh = fixtures::tri8();
    let a = block_assignment(&mesh.cells(), 3).map_err(|e| e.to_string())?;
    let dm = distribute(&mesh, &a, 3).map_err(|e| e.to_string())?;
    let run = run_group(3, |comm| {
        let local = &dm.ranks[comm.rank()];
        let coords = local.mesh.coordinates();
        let got = complete_section(
            comm,
            "coordinates",
            &local.overlap,
            &coords.atlas_sizer(),
            coords,
        )?;
        let mut once = coords.clone();
        once.fuse(&got, Delta::Insert)?;
        let mut twice = once.clone();
        twice.fuse(&got, Delta::Insert)?;
        let again = complete_section(comm, "again", &local.overlap, &once.atlas_sizer(), &once)?;
        let mut thrice = once.clone();
        thrice.fuse(&again, Delta::Insert)?;
        Ok::<_, MeshError>((got, once == twice && once == thrice))
    })
    .map_err(|e| e.to_string())?;
    let mut links = 0;
    for (got, idempotent) in &run.results {
        ensure(*idempotent, "insert fusion is not idempotent")?;
        for (link, values) in got.iter() {
            let sent = dm.ranks[link.rank]
                .mesh
                .coordinates()
                .restrict_point(link.remote)
                .map_err(|e| e.to_string())?;
            let bytes = |v: &[f64]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
            ensure(
                bytes(values) == bytes(sent),
                format!("link {link:?} altered values"),
            )?;
            links += 1;
        }
    }
    let first = distribute(&mesh, &a, 3)
        .map_err(|e| e.to_string())?
        .transcript;
    for _ in 0..3 {
        let again = distribute(&mesh, &a, 3)
            .map_err(|e| e.to_string())?
            .transcript;
        ensure(again == first, "transcripts differ between runs")?;
    }
    Ok(format!(
        "{links} links byte-exact, insert fusion idempotent, 3 repeated transcripts of {} messages identical",
        first.messages()
    ))
}

fn dual_graph() -> Outcome {
    let doublet = fixtures::doublet_sieve();
    let edges: Vec<(Point, Point)> = build_dual(&doublet, 2).edges().collect();
    ensure(
        edges == [(Point(0), Point(1))],
        format!("doublet dual {edges:?}"),
    )?;
    let meshes = [
        fixtures::doublet(),
        interpolate(&fixtures::tri8()).map_err(|e| e.to_string())?,
        fixtures::two_hex_interpolated(),
    ];
    for mesh in &meshes {
        let by_vertices = build_dual(&mesh.sieve, mesh.topological_dim);
        ensure(
            dual_via_reversed(&mesh.sieve) == by_vertices,
            format!("dual rules disagree on a {}D mesh", mesh.topological_dim),
        )?;
    }
    Ok(format!(
        "doublet dual = {{0,1}}; both rules agree on {} interpolated meshes",
        meshes.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("doublet query table", doublet_queries),
        ("brute-force oracle equivalence", oracle_equivalence),
        ("tri8 distribution", tri8_distribution),
        ("redistribution equivalence", redistribution),
        ("genericity matrix", genericity),
        ("completion properties", completion_properties),
        ("dual graph", dual_graph),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
