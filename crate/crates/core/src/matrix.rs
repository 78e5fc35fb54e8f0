//! Sparse symmetric matrices and their underlying graphs.
//!
//! Vertices (row indices) are 1-based throughout the public API.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::field::Field;

/// A row/column index of the matrix, in `1..=n`.
pub type Vertex = usize;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("index ({u}, {v}) out of range for order {n}")]
    IndexOutOfRange { u: usize, v: usize, n: usize },
    #[error("conflicting values given for entry ({u}, {v})")]
    AsymmetricInput { u: Vertex, v: Vertex },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A symmetric matrix stored by its nonzero entries.
///
/// Each off-diagonal entry is held once per endpoint in a per-vertex adjacency
/// list sorted by neighbor, so the entries between a vertex and a sorted bag
/// can be found by a linear merge.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix<F: Field> {
    field: F,
    n: usize,
    diagonal: Vec<Option<F::Elem>>,
    adjacency: Vec<Vec<(Vertex, F::Elem)>>,
}

/// The graph on `[n]` with an edge `{u, v}` whenever `u != v` and `m_uv != 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnderlyingGraph {
    pub n: usize,
    /// Sorted pairs `(u, v)` with `u < v`.
    pub edges: Vec<(Vertex, Vertex)>,
}

impl UnderlyingGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }
}

impl<F: Field> SparseSymmetricMatrix<F> {
    /// Builds a matrix of order `n` from `(u, v, value)` triples.
    ///
    /// Either orientation of an off-diagonal pair is accepted. A pair given
    /// twice must carry the same value both times. Zero values are dropped.
    pub fn from_entries<I>(field: F, n: usize, triples: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = (Vertex, Vertex, F::Elem)>,
    {
        let mut canonical: BTreeMap<(Vertex, Vertex), F::Elem> = BTreeMap::new();
        for (u, v, value) in triples {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(MatrixError::IndexOutOfRange { u, v, n });
            }
            let key = (u.min(v), u.max(v));
            match canonical.get(&key) {
                Some(existing) if *existing != value => {
                    return Err(MatrixError::AsymmetricInput { u: key.0, v: key.1 });
                }
                Some(_) => {}
                None => {
                    canonical.insert(key, value);
                }
            }
        }

        let max_magnitude = canonical
            .values()
            .map(|x| field.magnitude(x))
            .fold(0.0_f64, f64::max);
        let field = field.calibrate(max_magnitude);

        let mut diagonal = vec![None; n];
        let mut adjacency = vec![Vec::new(); n];
        for ((u, v), value) in canonical {
            if field.is_zero(&value) {
                continue;
            }
            if u == v {
                diagonal[u - 1] = Some(value);
            } else {
                adjacency[u - 1].push((v, value.clone()));
                adjacency[v - 1].push((u, value));
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|(w, _)| *w);
        }
        Ok(SparseSymmetricMatrix {
            field,
            n,
            diagonal,
            adjacency,
        })
    }

    /// The zero matrix of order `n`.
    pub fn zero(field: F, n: usize) -> Self {
        Self::from_entries(field, n, std::iter::empty()).expect("empty input is valid")
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of stored entries with `u <= v`.
    pub fn nnz(&self) -> usize {
        let off: usize = self.adjacency.iter().map(Vec::len).sum();
        off / 2 + self.diagonal.iter().flatten().count()
    }

    pub fn diagonal_entry(&self, v: Vertex) -> Option<&F::Elem> {
        self.diagonal[v - 1].as_ref()
    }

    /// Off-diagonal neighbors of `v` with their entries, sorted by neighbor.
    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, F::Elem)] {
        &self.adjacency[v - 1]
    }

    /// `m_uv`, zero when not stored.
    pub fn entry(&self, u: Vertex, v: Vertex) -> F::Elem {
        if u == v {
            return self.diagonal[u - 1]
                .clone()
                .unwrap_or_else(|| self.field.zero());
        }
        let list = &self.adjacency[u - 1];
        match list.binary_search_by_key(&v, |(w, _)| *w) {
            Ok(pos) => list[pos].1.clone(),
            Err(_) => self.field.zero(),
        }
    }

    /// Stored entries `(u, v, m_uv)` with `u <= v`, ordered by `(u, v)`.
    pub fn entries(&self) -> impl Iterator<Item = (Vertex, Vertex, &F::Elem)> + '_ {
        (1..=self.n).flat_map(move |u| {
            let diag = self.diagonal[u - 1].as_ref().map(|d| (u, u, d));
            let upper = self.adjacency[u - 1]
                .iter()
                .filter(move |(w, _)| *w > u)
                .map(move |(w, x)| (u, *w, x));
            diag.into_iter().chain(upper)
        })
    }

    pub fn underlying_graph(&self) -> UnderlyingGraph {
        let edges = (1..=self.n)
            .flat_map(|u| {
                self.adjacency[u - 1]
                    .iter()
                    .filter(move |(w, _)| *w > u)
                    .map(move |(w, _)| (u, *w))
            })
            .collect();
        UnderlyingGraph { n: self.n, edges }
    }

    /// `M - cI`. Off-diagonal entries, and hence the underlying graph, are
    /// unchanged. The field keeps the zero threshold of `M`.
    pub fn shift_diagonal(&self, c: &F::Elem) -> Self {
        let f = &self.field;
        let mut shifted = self.clone();
        for v in 1..=self.n {
            let d = f.sub(&self.entry(v, v), c);
            shifted.diagonal[v - 1] = (!f.is_zero(&d)).then_some(d);
        }
        shifted
    }

    /// Renames vertex `v` to `new_label[v - 1]`. `new_label` must be a
    /// permutation of `1..=n`.
    pub fn permuted(&self, new_label: &[Vertex]) -> Self {
        assert_eq!(new_label.len(), self.n, "permutation length");
        let mut diagonal = vec![None; self.n];
        let mut adjacency = vec![Vec::new(); self.n];
        for v in 1..=self.n {
            let nv = new_label[v - 1];
            diagonal[nv - 1] = self.diagonal[v - 1].clone();
            adjacency[nv - 1] = self.adjacency[v - 1]
                .iter()
                .map(|(w, x)| (new_label[w - 1], x.clone()))
                .collect();
            adjacency[nv - 1].sort_by_key(|(w, _)| *w);
        }
        SparseSymmetricMatrix {
            field: self.field.clone(),
            n: self.n,
            diagonal,
            adjacency,
        }
    }

    /// Largest entry magnitude (0 for the zero matrix).
    pub fn max_magnitude(&self) -> f64 {
        self.entries()
            .map(|(_, _, x)| self.field.magnitude(x))
            .fold(0.0, f64::max)
    }
}

/// Reads a symmetric coordinate Matrix Market file.
///
/// The header must be `%%MatrixMarket matrix coordinate <field> symmetric`
/// with `<field>` one of `rational`, `real` or `integer`; values are parsed by
/// `field` whatever the declared kind. Entries are listed as `u v value`.
pub fn read_matrix_market<F: Field, R: BufRead>(
    field: F,
    reader: R,
) -> Result<SparseSymmetricMatrix<F>, MatrixError> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| MatrixError::Parse {
        line: line + 1,
        message,
    };

    let (idx, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || !matches!(tokens[3].as_str(), "rational" | "real" | "integer")
        || tokens[4] != "symmetric"
    {
        return Err(parse_err(
            idx,
            format!("unsupported header {header:?}; expected symmetric coordinate"),
        ));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut triples = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(idx, "expected `rows cols nnz`".into()));
                }
                let nums: Vec<usize> = fields
                    .iter()
                    .map(|t| t.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(idx, format!("bad size line: {e}")))?;
                if nums[0] != nums[1] {
                    return Err(parse_err(idx, "symmetric matrix must be square".into()));
                }
                size = Some((nums[0], nums[2]));
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(idx, "expected `row col value`".into()));
                }
                let u: usize = fields[0]
                    .parse()
                    .map_err(|e| parse_err(idx, format!("bad row index: {e}")))?;
                let v: usize = fields[1]
                    .parse()
                    .map_err(|e| parse_err(idx, format!("bad column index: {e}")))?;
                if u == 0 || v == 0 || u > n || v > n {
                    return Err(MatrixError::IndexOutOfRange { u, v, n });
                }
                let value = field
                    .parse(fields[2])
                    .map_err(|e| parse_err(idx, e.to_string()))?;
                triples.push((u, v, value));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(idx, "missing size line".into()))?;
    if triples.len() != nnz {
        return Err(MatrixError::Parse {
            line: 0,
            message: format!("declared {nnz} entries, found {}", triples.len()),
        });
    }
    SparseSymmetricMatrix::from_entries(field, n, triples)
}

/// Writes the lower triangle (`u >= v`) in column-major order.
pub fn write_matrix_market<F: Field, W: Write>(
    matrix: &SparseSymmetricMatrix<F>,
    mut out: W,
) -> std::io::Result<()> {
    let f = matrix.field();
    let kind = if f.is_exact() { "rational" } else { "real" };
    writeln!(out, "%%MatrixMarket matrix coordinate {kind} symmetric")?;
    writeln!(out, "{} {} {}", matrix.order(), matrix.order(), matrix.nnz())?;
    // entries() yields (u, v) with u <= v ordered by u: that is column-major
    // order of the lower triangle once the pair is flipped.
    for (u, v, x) in matrix.entries() {
        writeln!(out, "{} {} {}", v, u, f.render(x))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::field::{Exact, Real};
    use proptest::prelude::*;

    fn q(x: i64) -> num_rational::BigRational {
        Exact.from_i64(x)
    }

    pub(crate) fn example_matrix() -> SparseSymmetricMatrix<Exact> {
        let entries = [
            (1, 3, 2),
            (1, 4, -1),
            (2, 4, 1),
            (3, 3, 1),
            (3, 4, 3),
            (3, 5, 2),
            (4, 4, 1),
            (4, 6, -1),
            (5, 5, 1),
            (5, 6, -1),
            (6, 6, 1),
        ];
        SparseSymmetricMatrix::from_entries(
            Exact,
            6,
            entries.iter().map(|&(u, v, x)| (u, v, q(x))),
        )
        .unwrap()
    }

    #[test]
    fn example_row_three() {
        let m = example_matrix();
        let row: Vec<_> = (1..=6).map(|v| m.entry(3, v)).collect();
        assert_eq!(row, vec![q(2), q(0), q(1), q(3), q(2), q(0)]);
        assert_eq!(m.nnz(), 11);
        let edges = m.underlying_graph().edges;
        assert_eq!(
            edges,
            vec![(1, 3), (1, 4), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6)]
        );
    }

    #[test]
    fn empty_and_identity() {
        let z = SparseSymmetricMatrix::zero(Exact, 3);
        assert_eq!(z.nnz(), 0);
        assert!(z.underlying_graph().edges.is_empty());
        let id =
            SparseSymmetricMatrix::from_entries(Exact, 4, (1..=4).map(|v| (v, v, q(1)))).unwrap();
        let g = id.underlying_graph();
        assert_eq!((g.n, g.edge_count()), (4, 0));
    }

    #[test]
    fn duplicate_policy() {
        let err = SparseSymmetricMatrix::from_entries(Exact, 2, [(1, 2, q(5)), (2, 1, q(7))]);
        assert!(matches!(
            err,
            Err(MatrixError::AsymmetricInput { u: 1, v: 2 })
        ));
        let ok =
            SparseSymmetricMatrix::from_entries(Exact, 2, [(1, 2, q(5)), (2, 1, q(5))]).unwrap();
        assert_eq!(ok.nnz(), 1);
        let oob = SparseSymmetricMatrix::from_entries(Exact, 2, [(3, 1, q(1))]);
        assert!(matches!(oob, Err(MatrixError::IndexOutOfRange { .. })));
        let zero_index = SparseSymmetricMatrix::from_entries(Exact, 2, [(0, 1, q(1))]);
        assert!(matches!(zero_index, Err(MatrixError::IndexOutOfRange { .. })));
    }

    #[test]
    fn zeros_are_dropped() {
        let m = SparseSymmetricMatrix::from_entries(Exact, 3, [(1, 2, q(0)), (3, 3, q(0))])
            .unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn shift_example() {
        let m = example_matrix();
        let shifted = m.shift_diagonal(&q(1));
        let diag: Vec<_> = (1..=6).map(|v| shifted.entry(v, v)).collect();
        assert_eq!(diag, vec![q(-1), q(-1), q(0), q(0), q(0), q(0)]);
        assert_eq!(shifted.underlying_graph(), m.underlying_graph());
        assert_eq!(m.shift_diagonal(&q(0)), m);
    }

    #[test]
    fn permutation_relabels_entries() {
        let m = example_matrix();
        let perm = [6, 5, 4, 3, 2, 1];
        let p = m.permuted(&perm);
        for u in 1..=6 {
            for v in 1..=6 {
                assert_eq!(p.entry(perm[u - 1], perm[v - 1]), m.entry(u, v));
            }
        }
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = example_matrix().shift_diagonal(&Exact.parse("1/3").unwrap());
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate rational symmetric\n6 6 "));
        assert!(text.contains("\n3 1 2\n"));
        assert!(text.contains("\n1 1 -1/3\n"));
        let back = read_matrix_market(Exact, buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_market_errors() {
        let bad_header = "%%MatrixMarket matrix array real general\n1 1\n";
        assert!(matches!(
            read_matrix_market(Exact, bad_header.as_bytes()),
            Err(MatrixError::Parse { line: 1, .. })
        ));
        let bad_value = "%%MatrixMarket matrix coordinate rational symmetric\n% c\n2 2 1\n2 1 x\n";
        assert!(matches!(
            read_matrix_market(Exact, bad_value.as_bytes()),
            Err(MatrixError::Parse { line: 4, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1.5\n";
        assert!(read_matrix_market(Real::default(), short.as_bytes()).is_err());
    }

    #[test]
    fn reals_read_from_rational_text() {
        let text = "%%MatrixMarket matrix coordinate rational symmetric\n2 2 2\n1 1 1/4\n2 1 -3\n";
        let m = read_matrix_market(Real::default(), text.as_bytes()).unwrap();
        assert_eq!(m.entry(1, 1), 0.25);
        assert_eq!(m.entry(1, 2), -3.0);
    }

    proptest! {
        #[test]
        fn graph_matches_dense_scan(
            n in 1usize..9,
            raw in proptest::collection::vec((1usize..9, 1usize..9, -3i64..=3), 0..30),
        ) {
            let triples: BTreeMap<(usize, usize), i64> = raw
                .into_iter()
                .filter(|(u, v, _)| *u <= n && *v <= n)
                .map(|(u, v, x)| ((u.min(v), u.max(v)), x))
                .collect();
            let m = SparseSymmetricMatrix::from_entries(
                Exact,
                n,
                triples.iter().map(|(&(u, v), &x)| (u, v, q(x))),
            )
            .unwrap();
            let mut dense_edges = Vec::new();
            for u in 1..=n {
                for v in u + 1..=n {
                    if m.entry(u, v) != q(0) {
                        dense_edges.push((u, v));
                    }
                }
            }
            prop_assert_eq!(&m.underlying_graph().edges, &dense_edges);
            let c = q(7);
            prop_assert_eq!(m.shift_diagonal(&c).underlying_graph(), m.underlying_graph());

            let mut buf = Vec::new();
            write_matrix_market(&m, &mut buf).unwrap();
            prop_assert_eq!(read_matrix_market(Exact, buf.as_slice()).unwrap(), m);
        }
    }
}
