//! Recorded elementary congruence operations.
//!
//! Text form, one operation per line:
//!
//! ```text
//! node 6
//! addrow 3 5 -2
//! emit 5 1
//! swap 1 2
//! ```
//!
//! `addrow t s c` adds `c` times row `s` to row `t` and then `c` times column
//! `s` to column `t`. `swap a b` exchanges rows `a`, `b` and columns `a`, `b`.
//! `emit v d` records the diagonal pair `(v, d)`. `node i` marks the start of
//! the operations performed at node `i` (1-based) and does not act on the
//! matrix. Lines starting with `#` are comments.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::field::Field;
use crate::matrix::Vertex;
use crate::treedecomp::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceOp<E> {
    /// Start of the operations of a node (0-based id).
    Node(NodeId),
    AddRow {
        target: Vertex,
        source: Vertex,
        coeff: E,
    },
    Swap(Vertex, Vertex),
    Emit(Vertex, E),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// A sequence of recorded operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<E> {
    pub ops: Vec<TraceOp<E>>,
}

impl<E> Default for Trace<E> {
    fn default() -> Self {
        Trace { ops: Vec::new() }
    }
}

impl<E: Clone> Trace<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Applies `rename` to every vertex of the trace.
    pub fn map_vertices(&self, rename: impl Fn(Vertex) -> Vertex) -> Self {
        let ops = self
            .ops
            .iter()
            .map(|op| match op {
                TraceOp::Node(i) => TraceOp::Node(*i),
                TraceOp::AddRow {
                    target,
                    source,
                    coeff,
                } => TraceOp::AddRow {
                    target: rename(*target),
                    source: rename(*source),
                    coeff: coeff.clone(),
                },
                TraceOp::Swap(a, b) => TraceOp::Swap(rename(*a), rename(*b)),
                TraceOp::Emit(v, d) => TraceOp::Emit(rename(*v), d.clone()),
            })
            .collect();
        Trace { ops }
    }

    /// Number of `addrow` operations.
    pub fn row_operations(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, TraceOp::AddRow { .. }))
            .count()
    }

    pub fn write<F, W>(&self, field: &F, mut w: W) -> io::Result<()>
    where
        F: Field<Elem = E>,
        W: Write,
    {
        for op in &self.ops {
            writeln!(w, "{}", Display { field, op })?;
        }
        Ok(())
    }

    pub fn read<F, R>(field: &F, reader: R) -> Result<Self, TraceParseError>
    where
        F: Field<Elem = E>,
        R: BufRead,
    {
        let mut ops = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let lineno = index + 1;
            let err = |message: String| TraceParseError {
                line: lineno,
                message,
            };
            let line = line.map_err(|e| err(e.to_string()))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let vertex = |t: &str| -> Result<Vertex, TraceParseError> {
                match t.parse::<usize>() {
                    Ok(v) if v > 0 => Ok(v),
                    _ => Err(err(format!("invalid vertex '{t}'"))),
                }
            };
            let scalar = |t: &str| field.parse(t).map_err(|e| err(e.to_string()));
            let op = match tokens.as_slice() {
                [] => continue,
                [first, ..] if first.starts_with('#') => continue,
                ["node", i] => TraceOp::Node(vertex(i)? - 1),
                ["addrow", t, s, c] => {
                    let (target, source) = (vertex(t)?, vertex(s)?);
                    if target == source {
                        return Err(err("addrow target equals source".into()));
                    }
                    TraceOp::AddRow {
                        target,
                        source,
                        coeff: scalar(c)?,
                    }
                }
                ["swap", a, b] => TraceOp::Swap(vertex(a)?, vertex(b)?),
                ["emit", v, d] => TraceOp::Emit(vertex(v)?, scalar(d)?),
                _ => return Err(err(format!("unrecognized operation '{line}'"))),
            };
            ops.push(op);
        }
        Ok(Trace { ops })
    }

    pub fn render<F: Field<Elem = E>>(&self, field: &F) -> String {
        let mut out = Vec::new();
        self.write(field, &mut out).expect("writing to memory");
        String::from_utf8(out).expect("trace text is ASCII")
    }
}

struct Display<'a, F: Field> {
    field: &'a F,
    op: &'a TraceOp<F::Elem>,
}

impl<F: Field> fmt::Display for Display<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            TraceOp::Node(i) => write!(f, "node {}", i + 1),
            TraceOp::AddRow {
                target,
                source,
                coeff,
            } => write!(f, "addrow {target} {source} {}", self.field.render(coeff)),
            TraceOp::Swap(a, b) => write!(f, "swap {a} {b}"),
            TraceOp::Emit(v, d) => write!(f, "emit {v} {}", self.field.render(d)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{parse_rational, Exact};

    #[test]
    fn text_round_trip() {
        let q = |s: &str| parse_rational(s).unwrap();
        let trace = Trace {
            ops: vec![
                TraceOp::Node(5),
                TraceOp::AddRow {
                    target: 3,
                    source: 5,
                    coeff: q("-2"),
                },
                TraceOp::AddRow {
                    target: 2,
                    source: 4,
                    coeff: q("1/2"),
                },
                TraceOp::Swap(1, 2),
                TraceOp::Emit(5, q("1")),
            ],
        };
        let text = trace.render(&Exact);
        assert_eq!(text, "node 6\naddrow 3 5 -2\naddrow 2 4 1/2\nswap 1 2\nemit 5 1\n");
        assert_eq!(Trace::read(&Exact, text.as_bytes()).unwrap(), trace);
    }

    #[test]
    fn malformed_lines() {
        for (text, line) in [
            ("emit 1 1\naddrow 1 2\n", 2),
            ("addrow 0 1 1\n", 1),
            ("# c\n\naddrow 1 1 2\n", 3),
            ("emit 1 x\n", 1),
            ("frobnicate\n", 1),
        ] {
            let err = Trace::<num_rational::BigRational>::read(&Exact, text.as_bytes()).unwrap_err();
            assert_eq!(err.line, line, "{text:?}");
        }
    }

    #[test]
    fn renaming() {
        let trace: Trace<i64> = Trace {
            ops: vec![TraceOp::Swap(1, 2), TraceOp::Emit(2, 7)],
        };
        let renamed = trace.map_vertices(|v| 3 - v);
        assert_eq!(renamed.ops, vec![TraceOp::Swap(2, 1), TraceOp::Emit(1, 7)]);
    }
}
