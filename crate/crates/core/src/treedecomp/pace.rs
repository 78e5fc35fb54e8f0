//! PACE `.td` files.
//!
//! ```text
//! c root 11
//! s td 11 3 6
//! b 1 1 2 4
//! ...
//! 1 2
//! ```
//!
//! Node ids in files are 1-based. A `c root i` comment designates the root;
//! without it node 1 is the root. Nice decompositions are written with an
//! extra `c kind i <kind>` comment per node, which readers ignore.

use std::io::{self, BufRead, Write};

use super::{NiceTreeDecomposition, TdError, TreeDecomposition};
use crate::matrix::Vertex;

fn parse_err(line: usize, message: impl Into<String>) -> TdError {
    TdError::Parse {
        line,
        message: message.into(),
    }
}

fn number(token: Option<&str>, line: usize, what: &str) -> Result<usize, TdError> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{token}'")))
}

/// Reads a `.td` file. Bags are sorted on input; the declared width is
/// checked against the bags.
pub fn read_td<R: BufRead>(reader: R) -> Result<TreeDecomposition, TdError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<Vertex>>> = Vec::new();
    let mut edges = Vec::new();
    let mut root = None;
    let mut last_line = 0;

    for (index, line) in reader.lines().enumerate() {
        let lineno = index + 1;
        last_line = lineno;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };
        match first {
            "c" => {
                if tokens.next() == Some("root") {
                    let r = number(tokens.next(), lineno, "root id")?;
                    if r == 0 {
                        return Err(parse_err(lineno, "node ids start at 1"));
                    }
                    root = Some(r - 1);
                }
            }
            "s" => {
                if header.is_some() {
                    return Err(parse_err(lineno, "duplicate solution line"));
                }
                if tokens.next() != Some("td") {
                    return Err(parse_err(lineno, "expected 's td m width+1 n'"));
                }
                let m = number(tokens.next(), lineno, "node count")?;
                let b = number(tokens.next(), lineno, "bag size")?;
                let n = number(tokens.next(), lineno, "vertex count")?;
                if tokens.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on solution line"));
                }
                header = Some((m, b, n));
                bags = vec![None; m];
            }
            "b" => {
                let Some((m, _, n)) = header else {
                    return Err(parse_err(lineno, "bag before solution line"));
                };
                let id = number(tokens.next(), lineno, "bag id")?;
                if id == 0 || id > m {
                    return Err(parse_err(lineno, format!("bag id {id} outside 1..={m}")));
                }
                if bags[id - 1].is_some() {
                    return Err(parse_err(lineno, format!("bag {id} given twice")));
                }
                let mut bag = Vec::new();
                for token in tokens {
                    let v = number(Some(token), lineno, "vertex")?;
                    if v == 0 || v > n {
                        return Err(parse_err(lineno, format!("vertex {v} outside 1..={n}")));
                    }
                    bag.push(v);
                }
                bag.sort_unstable();
                bag.dedup();
                bags[id - 1] = Some(bag);
            }
            _ => {
                let Some((m, _, _)) = header else {
                    return Err(parse_err(lineno, "expected solution line 's td m width+1 n'"));
                };
                let a = number(Some(first), lineno, "node id")?;
                let b = number(tokens.next(), lineno, "node id")?;
                if tokens.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on edge line"));
                }
                for id in [a, b] {
                    if id == 0 || id > m {
                        return Err(parse_err(lineno, format!("node id {id} outside 1..={m}")));
                    }
                }
                edges.push((a - 1, b - 1));
            }
        }
    }

    let (m, declared, n) = header.ok_or_else(|| parse_err(last_line.max(1), "missing solution line"))?;
    let bags: Vec<Vec<Vertex>> = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| parse_err(last_line, format!("bag {} missing", i + 1))))
        .collect::<Result<_, _>>()?;
    let largest = bags.iter().map(Vec::len).max().unwrap_or(0);
    if largest != declared {
        return Err(parse_err(
            last_line,
            format!("declared bag size {declared} but the largest bag has {largest}"),
        ));
    }
    if let Some(r) = root {
        if r >= m {
            return Err(parse_err(last_line, format!("root {} is not a node", r + 1)));
        }
    }
    Ok(TreeDecomposition::new(n, bags, edges, root))
}

/// Writes `td` in `.td` format, with a `c root` line when a root is set.
pub fn write_td<W: Write>(td: &TreeDecomposition, mut w: W) -> io::Result<()> {
    if let Some(r) = td.root {
        writeln!(w, "c root {}", r + 1)?;
    }
    write_body(&mut w, td)
}

fn write_body<W: Write>(w: &mut W, td: &TreeDecomposition) -> io::Result<()> {
    let largest = td.bags.iter().map(Vec::len).max().unwrap_or(0);
    writeln!(w, "s td {} {} {}", td.bags.len(), largest, td.n_vertices)?;
    for (i, bag) in td.bags.iter().enumerate() {
        write!(w, "b {}", i + 1)?;
        for v in bag {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    for &(a, b) in &td.edges {
        writeln!(w, "{} {}", a + 1, b + 1)?;
    }
    Ok(())
}

/// Writes a nice decomposition with its root and per-node kind comments.
pub fn write_nice_td<W: Write>(nice: &NiceTreeDecomposition, mut w: W) -> io::Result<()> {
    writeln!(w, "c root {}", nice.root() + 1)?;
    for (i, node) in nice.nodes().iter().enumerate() {
        writeln!(w, "c kind {} {}", i + 1, node.kind)?;
    }
    write_body(&mut w, &nice.to_decomposition())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treedecomp::tests::{example_graph, example_nice_td};
    use crate::treedecomp::nicify;

    fn read_str(text: &str) -> Result<TreeDecomposition, TdError> {
        read_td(text.as_bytes())
    }

    #[test]
    fn round_trip() {
        let td = example_nice_td();
        let mut out = Vec::new();
        write_td(&td, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("c root 11\ns td 11 3 6\nb 1 1 2 4\n"));
        assert_eq!(read_str(&text).unwrap(), td);
    }

    #[test]
    fn nice_output_is_self_describing() {
        let nice = nicify(&example_nice_td()).unwrap();
        let mut out = Vec::new();
        write_nice_td(&nice, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("c kind 1 Leaf\n"));
        assert!(text.contains("c kind 2 Forget 2\n"));
        assert!(text.contains("c kind 9 Join\n"));
        let back = read_str(&text).unwrap();
        assert_eq!(back.validate(&example_graph()), Ok(2));
        assert_eq!(NiceTreeDecomposition::try_from_decomposition(&back).unwrap(), nice);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("s tw 1 1 1\nb 1 1\n", 1),
            ("c hello\nb 1 1\n", 2),
            ("s td 1 1 1\nb 1 x\n", 2),
            ("s td 1 1 1\nb 1 2\n", 2),
            ("s td 2 1 2\nb 1 1\nb 2 2\n1 3\n", 4),
            ("s td 1 1 1\nb 1 1\nb 1 1\n", 3),
            ("s td 1 1 1\ns td 1 1 1\n", 2),
        ];
        for (text, line) in cases {
            match read_str(text) {
                Err(TdError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_file_errors() {
        assert!(matches!(read_str(""), Err(TdError::Parse { .. })));
        // missing bag 2
        assert!(matches!(
            read_str("s td 2 1 2\nb 1 1\n1 2\n"),
            Err(TdError::Parse { .. })
        ));
        // declared width disagrees with the bags
        assert!(matches!(
            read_str("s td 1 3 2\nb 1 1 2\n"),
            Err(TdError::Parse { .. })
        ));
        assert!(matches!(
            read_str("c root 3\ns td 1 1 1\nb 1 1\n"),
            Err(TdError::Parse { .. })
        ));
    }

    #[test]
    fn default_root_and_unsorted_bags() {
        let td = read_str("s td 2 2 3\nb 1 3 1\nb 2 2 1\n1 2\n").unwrap();
        assert_eq!(td.root, None);
        assert_eq!(td.bags, vec![vec![1, 3], vec![1, 2]]);
        assert_eq!(td.edges, vec![(0, 1)]);
    }
}
