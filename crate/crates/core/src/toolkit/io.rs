//! The mesh and assignment text formats.
//!
//! ```text
//! dim <topological> <embedding>
//! cells <C> <vertices per cell>
//! <C rows of 0-based vertex indices>
//! vertices <V>
//! <V rows of coordinates>
//! ```
//!
//! Reading numbers cells `0..C` and vertex `i` as `C + i`. Blank lines and
//! lines starting with `#` are skipped. An assignment file has one
//! `<element> <rank>` pair per line.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::meshops::{Mesh, PartitionAssignment};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: vertex index {index} out of range (mesh has {count} vertices)")]
    DanglingVertex {
        line: usize,
        index: usize,
        count: usize,
    },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WriteError {
    #[error("point {0} covers a point that is not a vertex; only cells-and-vertices meshes can be written")]
    NotCellsAndVertices(Point),
    #[error("cell {cell} has {actual} vertices, expected {expected}")]
    MixedArity {
        cell: Point,
        expected: usize,
        actual: usize,
    },
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next meaningful line as `(line number, tokens)`.
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            self.last = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(ParseError::Truncated(format!("expected {what}")))
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.next("") {
            Ok((line, _)) => Err(syntax(line, "unexpected trailing content")),
            Err(_) => Ok(()),
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(line: usize, token: &str) -> Result<T, ParseError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("invalid number '{token}'")))
}

/// Parses `<keyword> <n>...` with exactly `n` counts.
fn header(lines: &mut Lines<'_>, keyword: &str, n: usize) -> Result<Vec<usize>, ParseError> {
    let (line, tokens) = lines.next(&format!("'{keyword}' line"))?;
    if tokens.first() != Some(&keyword) || tokens.len() != n + 1 {
        return Err(syntax(
            line,
            format!("expected '{keyword}' followed by {n} numbers"),
        ));
    }
    tokens[1..].iter().map(|t| number(line, t)).collect()
}

pub fn read_mesh(text: &str) -> Result<Mesh, ParseError> {
    let mut lines = Lines::new(text);
    let dims = header(&mut lines, "dim", 2)?;
    let (topological_dim, embedding_dim) = (dims[0], dims[1]);
    let counts = header(&mut lines, "cells", 2)?;
    let (num_cells, arity) = (counts[0], counts[1]);
    let mut rows = Vec::with_capacity(num_cells);
    for _ in 0..num_cells {
        let (line, tokens) = lines.next("cell row")?;
        if tokens.len() != arity {
            return Err(syntax(
                line,
                format!("expected {arity} vertex indices, found {}", tokens.len()),
            ));
        }
        let row: Vec<usize> = tokens
            .iter()
            .map(|t| number(line, t))
            .collect::<Result<_, _>>()?;
        rows.push((line, row));
    }
    let num_vertices = header(&mut lines, "vertices", 1)?[0];
    let mut coords = Vec::with_capacity(num_vertices);
    for _ in 0..num_vertices {
        let (line, tokens) = lines.next("vertex row")?;
        if tokens.len() != embedding_dim {
            return Err(syntax(
                line,
                format!(
                    "expected {embedding_dim} coordinates, found {}",
                    tokens.len()
                ),
            ));
        }
        let x: Vec<f64> = tokens
            .iter()
            .map(|t| number(line, t))
            .collect::<Result<_, _>>()?;
        coords.push(x);
    }
    lines.finish()?;

    let vertex = |i: usize| Point((num_cells + i) as u64);
    let mut cells = Vec::with_capacity(num_cells);
    for (c, (line, row)) in rows.into_iter().enumerate() {
        let mut cone = Vec::with_capacity(row.len());
        for index in row {
            if index >= num_vertices {
                return Err(ParseError::DanglingVertex {
                    line,
                    index,
                    count: num_vertices,
                });
            }
            if cone.contains(&vertex(index)) {
                return Err(syntax(line, format!("vertex index {index} repeated")));
            }
            cone.push(vertex(index));
        }
        cells.push((Point(c as u64), cone));
    }
    let vertices: Vec<(Point, &[f64])> = coords
        .iter()
        .enumerate()
        .map(|(i, x)| (vertex(i), x.as_slice()))
        .collect();
    Mesh::from_cells(
        topological_dim,
        embedding_dim,
        cells.iter().map(|(c, cone)| (*c, cone.as_slice())),
        vertices,
    )
    .map_err(|e| ParseError::Truncated(e.to_string()))
}

/// Writes a cells-and-vertices mesh. Cells and vertices are each written in
/// ascending id order and vertex indices refer to that order, so a mesh read
/// from a file writes back identically.
pub fn write_mesh(mesh: &Mesh) -> Result<String, WriteError> {
    let cells = mesh.cells();
    let vertices = mesh.vertices();
    let index: BTreeMap<Point, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let arity = cells.first().map_or(0, |&c| mesh.sieve.cone(c).len());
    let mut out = format!(
        "dim {} {}\ncells {} {}\n",
        mesh.topological_dim,
        mesh.embedding_dim,
        cells.len(),
        arity
    );
    for &c in &cells {
        let cone = mesh.sieve.cone(c);
        if cone.len() != arity {
            return Err(WriteError::MixedArity {
                cell: c,
                expected: arity,
                actual: cone.len(),
            });
        }
        let row: Vec<String> = cone
            .iter()
            .map(|v| {
                index
                    .get(v)
                    .map(usize::to_string)
                    .ok_or(WriteError::NotCellsAndVertices(c))
            })
            .collect::<Result<_, _>>()?;
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str(&format!("vertices {}\n", vertices.len()));
    let coords = mesh.coordinates();
    for &v in &vertices {
        let x = coords.restrict_point(v).unwrap_or(&[]);
        let row: Vec<String> = x.iter().map(f64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_assignment(text: &str) -> Result<PartitionAssignment, ParseError> {
    let mut lines = Lines::new(text);
    let mut out = PartitionAssignment::new();
    while let Ok((line, tokens)) = lines.next("assignment row") {
        let [element, rank] = tokens[..] else {
            return Err(syntax(line, "expected '<element> <rank>'"));
        };
        let element = Point(number(line, element)?);
        if out.get(element).is_some() {
            return Err(syntax(line, format!("element {element} assigned twice")));
        }
        out.assign(element, number(line, rank)?);
    }
    Ok(out)
}

pub fn write_assignment(assignment: &PartitionAssignment) -> String {
    assignment
        .iter()
        .map(|(e, r)| format!("{e} {r}\n"))
        .collect()
}
