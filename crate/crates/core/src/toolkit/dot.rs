//! Graphviz export.

use std::fmt::Write;

use crate::overlap::{Direction, Overlap};
use crate::sieve::{Sieve, SieveError};

/// Renders a sieve with one row per depth, vertices on top, and arrows from
/// source to target.
pub fn sieve_dot<A>(sieve: &Sieve<A>) -> Result<String, SieveError> {
    let mut out = String::from("digraph sieve {\n");
    if !sieve.is_empty() {
        let strata = sieve.stratify()?;
        out.push_str("  rankdir=TB;\n  node [shape=circle];\n");
        for d in 0..=strata.max_depth() {
            let row: Vec<String> = strata
                .depth_stratum(d)
                .iter()
                .map(|p| format!("\"{p}\";"))
                .collect();
            if !row.is_empty() {
                let _ = writeln!(out, "  {{ rank=same; {} }}", row.join(" "));
            }
        }
        for (s, t, _) in sieve.arrows() {
            let _ = writeln!(out, "  \"{s}\" -> \"{t}\";");
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Renders one rank's overlap: dark point nodes, light rank nodes, and one
/// edge per link labeled with the remote point. Send links point from the
/// local point to the rank, receive links the other way.
pub fn overlap_dot(overlap: &Overlap) -> String {
    let mut out = format!("digraph overlap_{} {{\n", overlap.rank());
    let points = overlap.local_points();
    let mut ranks = overlap.neighbors(Direction::Send);
    ranks.extend(overlap.neighbors(Direction::Recv));
    ranks.sort_unstable();
    ranks.dedup();
    for p in &points {
        let _ = writeln!(
            out,
            "  \"p{p}\" [label=\"{p}\", style=filled, fillcolor=gray25, fontcolor=white];"
        );
    }
    for r in &ranks {
        let _ = writeln!(
            out,
            "  \"r{r}\" [label=\"rank {r}\", shape=box, style=filled, fillcolor=gray85];"
        );
    }
    for link in overlap.links(Direction::Send) {
        let _ = writeln!(
            out,
            "  \"p{}\" -> \"r{}\" [label=\"{}\"];",
            link.local, link.rank, link.remote
        );
    }
    for link in overlap.links(Direction::Recv) {
        let _ = writeln!(
            out,
            "  \"r{}\" -> \"p{}\" [label=\"{}\"];",
            link.rank, link.local, link.remote
        );
    }
    out.push_str("}\n");
    out
}
