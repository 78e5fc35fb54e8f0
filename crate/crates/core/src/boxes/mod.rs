//! Boxes and the four node procedures of the bottom-up diagonalization.
//!
//! A box at node `i` stands for the symmetric matrix
//!
//! ```text
//!        V1    V2
//! V1  [  0     N1 ]
//! V2  [  N1^T  N2 ]
//! ```
//!
//! where `V2` is the bag of `i` in increasing order and `V1` holds the
//! buffered (type-i) rows, whose zero diagonal block is not stored. `N1` is
//! kept in row echelon form with a pivot in every row.
//!
//! Every elementary operation is a paired row/column operation "add `c` times
//! row and column `s` to row and column `t`", so the product of the emitted
//! diagonal values equals the determinant of the input.

mod counter;
mod driver;
mod trace;

use thiserror::Error;

use crate::field::{Field, FieldError};
use crate::matrix::{SparseSymmetricMatrix, Vertex};
use crate::treedecomp::TdError;

pub use counter::{ForgetCase, OpCounter, PerKind};
pub use driver::{congruent_diagonal, congruent_diagonal_observed, DiagOptions, Diagonalization};
pub use trace::{Trace, TraceOp, TraceParseError};

#[derive(Debug, Error)]
pub enum BoxError {
    #[error("vertex {0} is already in the bag")]
    VertexAlreadyPresent(Vertex),
    #[error("vertex {0} is not in the bag")]
    VertexNotInBag(Vertex),
    #[error("join children have different bags")]
    BagMismatch,
    #[error("matrix has order {matrix} but the decomposition covers {decomposition} vertices")]
    OrderMismatch { matrix: usize, decomposition: usize },
    #[error(transparent)]
    Decomposition(#[from] TdError),
    #[error("arithmetic failure: {0}")]
    Field(#[from] FieldError),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
}

fn violation(message: impl Into<String>) -> BoxError {
    BoxError::InternalInvariantViolation(message.into())
}

/// The data passed from a node to its parent.
#[derive(Debug, Clone)]
pub struct NodeBox<F: Field> {
    type_i: Vec<Vertex>,
    n1: Vec<Vec<F::Elem>>,
    type_ii: Vec<Vertex>,
    n2: Vec<Vec<F::Elem>>,
}

impl<F: Field> NodeBox<F> {
    /// Builds a box from its blocks and checks its invariants.
    pub fn from_parts(
        field: &F,
        type_i: Vec<Vertex>,
        n1: Vec<Vec<F::Elem>>,
        type_ii: Vec<Vertex>,
        n2: Vec<Vec<F::Elem>>,
    ) -> Result<Self, BoxError> {
        let b = NodeBox {
            type_i,
            n1,
            type_ii,
            n2,
        };
        b.check_invariants(field)?;
        Ok(b)
    }

    /// Labels of the buffered rows, in row order of `N1`.
    pub fn type_i(&self) -> &[Vertex] {
        &self.type_i
    }

    /// The bag, ascending.
    pub fn type_ii(&self) -> &[Vertex] {
        &self.type_ii
    }

    pub fn n1(&self) -> &[Vec<F::Elem>] {
        &self.n1
    }

    pub fn n2(&self) -> &[Vec<F::Elem>] {
        &self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.type_i.is_empty() && self.type_ii.is_empty()
    }

    /// Column of the first nonzero entry of row `r` of `N1`.
    pub fn pivot(&self, field: &F, r: usize) -> Option<usize> {
        self.n1[r].iter().position(|x| !field.is_zero(x))
    }

    /// Entry of the represented symmetric matrix at labels `(a, b)`, or
    /// `None` if a label does not belong to the box.
    pub fn entry(&self, field: &F, a: Vertex, b: Vertex) -> Option<F::Elem> {
        enum Slot {
            I(usize),
            Ii(usize),
        }
        let slot = |v: Vertex| {
            if let Some(r) = self.type_i.iter().position(|&w| w == v) {
                Some(Slot::I(r))
            } else {
                self.type_ii.binary_search(&v).ok().map(Slot::Ii)
            }
        };
        Some(match (slot(a)?, slot(b)?) {
            (Slot::I(_), Slot::I(_)) => field.zero(),
            (Slot::I(r), Slot::Ii(c)) | (Slot::Ii(c), Slot::I(r)) => self.n1[r][c].clone(),
            (Slot::Ii(r), Slot::Ii(c)) => self.n2[r][c].clone(),
        })
    }

    /// Checks dimensions, echelon form, label order, symmetry and
    /// disjointness of the two label sets.
    pub fn check_invariants(&self, field: &F) -> Result<(), BoxError> {
        let (k1, k2) = (self.type_i.len(), self.type_ii.len());
        if self.n1.len() != k1 || self.n1.iter().any(|row| row.len() != k2) {
            return Err(violation("N1 has the wrong shape"));
        }
        if self.n2.len() != k2 || self.n2.iter().any(|row| row.len() != k2) {
            return Err(violation("N2 has the wrong shape"));
        }
        if k1 > k2 {
            return Err(violation(format!("{k1} buffered rows over a bag of {k2}")));
        }
        if self.type_ii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(violation("bag labels are not increasing"));
        }
        let mut last = None;
        for r in 0..k1 {
            let p = self
                .pivot(field, r)
                .ok_or_else(|| violation(format!("buffered row {} is zero", self.type_i[r])))?;
            if last.is_some_and(|q| q >= p) {
                return Err(violation("N1 is not in row echelon form"));
            }
            last = Some(p);
        }
        for r in 0..k2 {
            for c in 0..r {
                if self.n2[r][c] != self.n2[c][r] {
                    return Err(violation("N2 is not symmetric"));
                }
            }
        }
        let mut labels: Vec<Vertex> = self.type_i.iter().chain(&self.type_ii).copied().collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(violation("a vertex is both buffered and in the bag"));
        }
        Ok(())
    }
}

/// The emitted diagonal pairs `(v, d_v)`, in emission order.
#[derive(Debug, Clone)]
pub struct DiagonalArray<F: Field> {
    field: F,
    pairs: Vec<(Vertex, F::Elem)>,
    present: Vec<bool>,
}

impl<F: Field> DiagonalArray<F> {
    pub fn new(field: F, n: usize) -> Self {
        DiagonalArray {
            field,
            pairs: Vec::new(),
            present: vec![false; n],
        }
    }

    /// Builds an array from explicit pairs over `1..=n`.
    pub fn from_pairs(field: F, n: usize, pairs: Vec<(Vertex, F::Elem)>) -> Result<Self, BoxError> {
        let mut d = Self::new(field, n);
        for (v, x) in pairs {
            d.push(v, x)?;
        }
        Ok(d)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    /// Order of the diagonalized matrix.
    pub fn order(&self) -> usize {
        self.present.len()
    }

    pub fn pairs(&self) -> &[(Vertex, F::Elem)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.present.get(v.wrapping_sub(1)).copied().unwrap_or(false)
    }

    /// `true` once every vertex has been emitted.
    pub fn is_complete(&self) -> bool {
        self.pairs.len() == self.present.len()
    }

    /// The diagonal indexed by vertex; `None` for vertices not yet emitted.
    pub fn by_vertex(&self) -> Vec<Option<F::Elem>> {
        let mut out = vec![None; self.present.len()];
        for (v, d) in &self.pairs {
            out[v - 1] = Some(d.clone());
        }
        out
    }

    pub fn push(&mut self, v: Vertex, d: F::Elem) -> Result<(), BoxError> {
        if v == 0 || v > self.present.len() {
            return Err(violation(format!("emitted vertex {v} out of range")));
        }
        if self.present[v - 1] {
            return Err(violation(format!("vertex {v} emitted twice")));
        }
        if !self.field.magnitude(&d).is_finite() {
            return Err(FieldError::NonFinite(format!("diagonal entry of vertex {v}")).into());
        }
        self.present[v - 1] = true;
        self.pairs.push((v, d));
        Ok(())
    }

    fn renamed(self, original: &[Vertex]) -> Self {
        let mut out = Self::new(self.field, self.present.len());
        for (v, d) in self.pairs {
            out.pairs.push((original[v - 1], d));
            out.present[original[v - 1] - 1] = true;
        }
        out
    }
}

/// The row and column of a vertex at the moment it is forgotten, after its
/// matrix entries have been added: diagonal `d`, entries `x` against the
/// buffered rows, entries `y` against the rest of the bag.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgetView<E> {
    pub d: E,
    pub x: Vec<E>,
    pub y: Vec<E>,
}

/// Shared state of a run: the output array and the optional trace and
/// counters.
#[derive(Debug)]
pub struct Workspace<F: Field> {
    field: F,
    diagonal: DiagonalArray<F>,
    trace: Option<Trace<F::Elem>>,
    counter: Option<OpCounter>,
}

impl<F: Field> Workspace<F> {
    pub fn new(field: F, n: usize) -> Self {
        Workspace {
            diagonal: DiagonalArray::new(field.clone(), n),
            field,
            trace: None,
            counter: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Trace::new());
        self
    }

    pub fn with_counter(mut self) -> Self {
        self.counter = Some(OpCounter::new(self.diagonal.order()));
        self
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn diagonal(&self) -> &DiagonalArray<F> {
        &self.diagonal
    }

    pub fn trace(&self) -> Option<&Trace<F::Elem>> {
        self.trace.as_ref()
    }

    pub fn counter(&self) -> Option<&OpCounter> {
        self.counter.as_ref()
    }

    pub fn into_parts(self) -> (DiagonalArray<F>, Option<Trace<F::Elem>>, Option<OpCounter>) {
        (self.diagonal, self.trace, self.counter)
    }

    fn emit(&mut self, v: Vertex, d: F::Elem) -> Result<(), BoxError> {
        if let Some(t) = &mut self.trace {
            t.ops.push(TraceOp::Emit(v, d.clone()));
        }
        self.diagonal.push(v, d)
    }

    fn record(&mut self, target: Vertex, source: Vertex, coeff: &F::Elem) {
        if let Some(t) = &mut self.trace {
            t.ops.push(TraceOp::AddRow {
                target,
                source,
                coeff: coeff.clone(),
            });
        }
        if let Some(c) = &mut self.counter {
            c.row_op(target);
        }
    }

    fn arith(&mut self, adds: u64, muls: u64, divs: u64) {
        if let Some(c) = &mut self.counter {
            c.arith(adds, muls, divs);
        }
    }

    /// `-(a / b)`.
    fn ratio(&mut self, a: &F::Elem, b: &F::Elem) -> Result<F::Elem, BoxError> {
        self.arith(1, 0, 1);
        Ok(self.field.neg(&self.field.div(a, b)?))
    }

    /// `target += c * source` on a dense row, zeroing entry `clear`.
    fn axpy_row(&mut self, target: &mut [F::Elem], source: &[F::Elem], c: &F::Elem, clear: usize) {
        let f = &self.field;
        let mut performed = 0;
        for (t, s) in target.iter_mut().zip(source) {
            if !f.is_zero(s) {
                *t = f.add(t, &f.mul(c, s));
                performed += 1;
                if f.is_zero(t) {
                    *t = f.zero();
                }
            }
        }
        target[clear] = f.zero();
        self.arith(performed, performed, 0);
    }
}

/// A dense copy of a box while a vertex is forgotten: indices `0..k1` are the
/// buffered rows, `k1..` the bag.
struct Frame<E> {
    labels: Vec<Vertex>,
    k1: usize,
    a: Vec<Vec<E>>,
}

impl<E: Clone> Frame<E> {
    fn assemble<F: Field<Elem = E>>(field: &F, b: NodeBox<F>) -> Self {
        let (k1, k2) = (b.type_i.len(), b.type_ii.len());
        let size = k1 + k2;
        let mut a = vec![vec![field.zero(); size]; size];
        for (r, row) in b.n1.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                a[r][k1 + c] = x.clone();
                a[k1 + c][r] = x.clone();
            }
        }
        for (r, row) in b.n2.into_iter().enumerate() {
            for (c, x) in row.into_iter().enumerate() {
                a[k1 + r][k1 + c] = x;
            }
        }
        let mut labels = b.type_i;
        labels.extend(b.type_ii);
        Frame { labels, k1, a }
    }

    fn size(&self) -> usize {
        self.labels.len()
    }
}

impl<F: Field> Workspace<F> {
    /// Row `t` += `c` row `s`, then column `t` += `c` column `s`. When
    /// `clear` is given the entry `(t, clear)` is known to vanish and is set
    /// to an exact zero.
    fn apply(&mut self, fr: &mut Frame<F::Elem>, t: usize, s: usize, c: &F::Elem, clear: Option<usize>) {
        let f = self.field.clone();
        let size = fr.size();
        let source = fr.a[s].clone();
        let mut performed = 0u64;
        for (j, x) in source.iter().enumerate() {
            if !f.is_zero(x) {
                fr.a[t][j] = f.add(&fr.a[t][j], &f.mul(c, x));
                performed += 1;
            }
        }
        let ts = fr.a[t][s].clone();
        if !f.is_zero(&ts) {
            fr.a[t][t] = f.add(&fr.a[t][t], &f.mul(c, &ts));
            performed += 1;
        }
        if let Some(j) = clear {
            fr.a[t][j] = f.zero();
        }
        for j in 0..size {
            if f.is_zero(&fr.a[t][j]) {
                fr.a[t][j] = f.zero();
            }
            if j != t {
                fr.a[j][t] = fr.a[t][j].clone();
            }
        }
        self.arith(performed, performed, 0);
        self.record(fr.labels[t], fr.labels[s], c);
    }

    fn frame_pivot(&self, fr: &Frame<F::Elem>, r: usize) -> Option<usize> {
        (fr.k1..fr.size()).find(|&j| !self.field.is_zero(&fr.a[r][j]))
    }

    /// Adds `m_uv` for every `u` in the bag, including `u = v`.
    fn insert_entries(&mut self, fr: &mut Frame<F::Elem>, pv: usize, matrix: &SparseSymmetricMatrix<F>) {
        let f = self.field.clone();
        let v = fr.labels[pv];
        let bag = &fr.labels[fr.k1..];
        let mut adds = 0;
        let mut q = 0;
        for (u, m) in matrix.neighbors(v) {
            while q < bag.len() && bag[q] < *u {
                q += 1;
            }
            if q == bag.len() {
                break;
            }
            if bag[q] == *u {
                let pu = fr.k1 + q;
                fr.a[pu][pv] = f.add(&fr.a[pu][pv], m);
                fr.a[pv][pu] = fr.a[pu][pv].clone();
                adds += 1;
            }
        }
        if let Some(m) = matrix.diagonal_entry(v) {
            fr.a[pv][pv] = f.add(&fr.a[pv][pv], m);
            adds += 1;
        }
        self.arith(adds, 0, 0);
    }

    /// Splits the frame back into a box after dropping the diagonalized
    /// indices in `drop` and, optionally, moving bag index `promote` to the
    /// buffered rows.
    fn disassemble(
        &self,
        fr: Frame<F::Elem>,
        drop: &[usize],
        promote: Option<usize>,
    ) -> Result<NodeBox<F>, BoxError> {
        let f = &self.field;
        if cfg!(debug_assertions) {
            for &p in drop {
                if (0..fr.size()).any(|j| j != p && !f.is_zero(&fr.a[p][j])) {
                    return Err(violation(format!(
                        "row {} is not diagonal when emitted",
                        fr.labels[p]
                    )));
                }
            }
        }
        let bag: Vec<usize> = (fr.k1..fr.size())
            .filter(|j| !drop.contains(j) && Some(*j) != promote)
            .collect();
        let mut rows: Vec<(Option<usize>, usize)> = (0..fr.k1)
            .chain(promote)
            .filter(|r| !drop.contains(r))
            .map(|r| (bag.iter().position(|&j| !f.is_zero(&fr.a[r][j])), r))
            .collect();
        rows.sort_by_key(|&(p, _)| p);
        let b = NodeBox {
            type_i: rows.iter().map(|&(_, r)| fr.labels[r]).collect(),
            n1: rows
                .iter()
                .map(|&(_, r)| bag.iter().map(|&j| fr.a[r][j].clone()).collect())
                .collect(),
            type_ii: bag.iter().map(|&j| fr.labels[j]).collect(),
            n2: bag
                .iter()
                .map(|&r| bag.iter().map(|&j| fr.a[r][j].clone()).collect())
                .collect(),
        };
        if cfg!(debug_assertions) {
            b.check_invariants(f)?;
        }
        Ok(b)
    }
}

/// A box of zeros over `bag` with no buffered rows.
pub fn leaf_box<F: Field>(field: &F, bag: &[Vertex]) -> NodeBox<F> {
    NodeBox {
        type_i: Vec::new(),
        n1: Vec::new(),
        type_ii: bag.to_vec(),
        n2: vec![vec![field.zero(); bag.len()]; bag.len()],
    }
}

/// Adds a zero row and column for `v` at its sorted position.
pub fn introduce_box<F: Field>(field: &F, v: Vertex, mut child: NodeBox<F>) -> Result<NodeBox<F>, BoxError> {
    let pos = match child.type_ii.binary_search(&v) {
        Ok(_) => return Err(BoxError::VertexAlreadyPresent(v)),
        Err(pos) => pos,
    };
    if child.type_i.contains(&v) {
        return Err(BoxError::VertexAlreadyPresent(v));
    }
    child.type_ii.insert(pos, v);
    for row in child.n1.iter_mut().chain(child.n2.iter_mut()) {
        row.insert(pos, field.zero());
    }
    child.n2.insert(pos, vec![field.zero(); child.type_ii.len()]);
    Ok(child)
}

/// Merges two boxes over the same bag. The right buffered rows are merged
/// into the left echelon form top to bottom; a row that vanishes is emitted
/// with diagonal value zero.
pub fn join_box<F: Field>(
    left: NodeBox<F>,
    right: NodeBox<F>,
    ws: &mut Workspace<F>,
) -> Result<NodeBox<F>, BoxError> {
    if left.type_ii != right.type_ii {
        return Err(BoxError::BagMismatch);
    }
    if cfg!(debug_assertions) && left.type_i.iter().any(|v| right.type_i.contains(v)) {
        return Err(violation("children share a buffered row"));
    }
    let field = ws.field.clone();
    let k2 = left.type_ii.len();

    let mut n2 = left.n2;
    for (row, other) in n2.iter_mut().zip(&right.n2) {
        for (x, y) in row.iter_mut().zip(other) {
            if !field.is_zero(y) {
                *x = field.add(x, y);
            }
        }
    }
    ws.arith((k2 * k2) as u64, 0, 0);

    let pivot = |row: &[F::Elem]| row.iter().position(|x| !field.is_zero(x));
    let mut rows: Vec<(Vertex, Vec<F::Elem>, usize)> = left
        .type_i
        .into_iter()
        .zip(left.n1)
        .map(|(v, row)| {
            let p = pivot(&row).expect("buffered rows have pivots");
            (v, row, p)
        })
        .collect();

    for (w, mut row) in right.type_i.into_iter().zip(right.n1) {
        loop {
            let Some(p) = pivot(&row) else {
                ws.emit(w, field.zero())?;
                break;
            };
            match rows.iter().position(|(_, _, q)| *q == p) {
                Some(idx) => {
                    let c = ws.ratio(&row[p], &rows[idx].1[p])?;
                    let source = rows[idx].0;
                    let eliminator = rows[idx].1.clone();
                    ws.axpy_row(&mut row, &eliminator, &c, p);
                    ws.record(w, source, &c);
                }
                None => {
                    let at = rows.partition_point(|(_, _, q)| *q < p);
                    rows.insert(at, (w, row, p));
                    break;
                }
            }
        }
    }

    let b = NodeBox {
        type_i: rows.iter().map(|(v, _, _)| *v).collect(),
        n1: rows.into_iter().map(|(_, row, _)| row).collect(),
        type_ii: left.type_ii,
        n2,
    };
    if cfg!(debug_assertions) {
        b.check_invariants(&field)?;
    }
    Ok(b)
}

/// The row of `v` in `child` once the entries of `M` on that row have been
/// added; what the forget procedure dispatches on.
pub fn forget_view<F: Field>(
    field: &F,
    v: Vertex,
    child: &NodeBox<F>,
    matrix: &SparseSymmetricMatrix<F>,
) -> Result<ForgetView<F::Elem>, BoxError> {
    let pos = child
        .type_ii
        .binary_search(&v)
        .map_err(|_| BoxError::VertexNotInBag(v))?;
    let mut ws = Workspace::new(field.clone(), 0);
    let mut fr = Frame::assemble(field, child.clone());
    let pv = fr.k1 + pos;
    ws.insert_entries(&mut fr, pv, matrix);
    let row = &fr.a[pv];
    Ok(ForgetView {
        d: row[pv].clone(),
        x: row[..fr.k1].to_vec(),
        y: (fr.k1..fr.size()).filter(|&j| j != pv).map(|j| row[j].clone()).collect(),
    })
}

/// Forgets `v`: adds the entries `m_uv` for `u` in the bag, then either
/// diagonalizes the row of `v` (possibly together with one buffered row) or
/// buffers it.
pub fn forget_box<F: Field>(
    v: Vertex,
    child: NodeBox<F>,
    matrix: &SparseSymmetricMatrix<F>,
    ws: &mut Workspace<F>,
) -> Result<(NodeBox<F>, ForgetCase), BoxError> {
    let pos = child
        .type_ii
        .binary_search(&v)
        .map_err(|_| BoxError::VertexNotInBag(v))?;
    let field = ws.field.clone();
    let f = &field;
    let mut fr = Frame::assemble(f, child);
    let pv = fr.k1 + pos;
    let size = fr.size();
    ws.insert_entries(&mut fr, pv, matrix);

    let x_nonzero: Vec<usize> = (0..fr.k1).filter(|&r| !f.is_zero(&fr.a[pv][r])).collect();
    let (result, case) = if let Some(&u) = x_nonzero.last() {
        // Pair v with the lowest buffered row u having an entry in column v.
        let alpha = fr.a[pv][u].clone();
        let pivots_before: Vec<Option<usize>> = if cfg!(debug_assertions) {
            (0..fr.k1).map(|r| ws.frame_pivot(&fr, r)).collect()
        } else {
            Vec::new()
        };
        for &w in x_nonzero.iter().rev().skip(1) {
            let c = ws.ratio(&fr.a[pv][w], &alpha)?;
            ws.apply(&mut fr, w, u, &c, Some(pv));
        }
        if cfg!(debug_assertions) {
            let after: Vec<Option<usize>> = (0..fr.k1).map(|r| ws.frame_pivot(&fr, r)).collect();
            if after != pivots_before {
                return Err(violation("pivot of a buffered row moved while pairing"));
            }
        }
        if !f.is_zero(&fr.a[pv][pv]) {
            let two_alpha = f.add(&alpha, &alpha);
            ws.arith(1, 0, 0);
            let c = ws.ratio(&fr.a[pv][pv].clone(), &two_alpha)?;
            ws.apply(&mut fr, pv, u, &c, Some(pv));
        }
        let half = f.div(&f.one(), &f.from_i64(2))?;
        ws.apply(&mut fr, u, pv, &half, None);
        ws.apply(&mut fr, pv, u, &f.neg(&f.one()), Some(u));

        let (dv, du) = (fr.a[pv][pv].clone(), fr.a[u][u].clone());
        if f.is_zero(&dv) || f.is_zero(&du) {
            return Err(violation("paired pivots vanished"));
        }
        for (p, d) in [(pv, &dv), (u, &du)] {
            for w in 0..size {
                if w != pv && w != u && !f.is_zero(&fr.a[w][p]) {
                    let c = ws.ratio(&fr.a[w][p], d)?;
                    ws.apply(&mut fr, w, p, &c, Some(p));
                }
            }
        }
        ws.emit(v, dv)?;
        ws.emit(fr.labels[u], du)?;
        (ws.disassemble(fr, &[pv, u], None)?, ForgetCase::Paired)
    } else {
        let d = fr.a[pv][pv].clone();
        let y_nonzero: Vec<usize> = (fr.k1..size)
            .filter(|&j| j != pv && !f.is_zero(&fr.a[pv][j]))
            .collect();
        if y_nonzero.is_empty() {
            ws.emit(v, d)?;
            (ws.disassemble(fr, &[pv], None)?, ForgetCase::AlreadyDiagonal)
        } else if !f.is_zero(&d) {
            for u in y_nonzero {
                let c = ws.ratio(&fr.a[u][pv], &d)?;
                ws.apply(&mut fr, u, pv, &c, Some(pv));
            }
            ws.emit(v, d)?;
            (ws.disassemble(fr, &[pv], None)?, ForgetCase::DiagonalPivot)
        } else {
            loop {
                let Some(p) = (fr.k1..size).find(|&j| j != pv && !f.is_zero(&fr.a[pv][j])) else {
                    ws.emit(v, f.zero())?;
                    break (ws.disassemble(fr, &[pv], None)?, ForgetCase::Cancelled);
                };
                match (0..fr.k1).find(|&r| ws.frame_pivot(&fr, r) == Some(p)) {
                    Some(r) => {
                        let c = ws.ratio(&fr.a[pv][p], &fr.a[r][p])?;
                        ws.apply(&mut fr, pv, r, &c, Some(p));
                    }
                    None => break (ws.disassemble(fr, &[], Some(pv))?, ForgetCase::Buffered),
                }
            }
        }
    };
    if let Some(c) = &mut ws.counter {
        c.forget_case(case);
    }
    Ok((result, case))
}

#[cfg(test)]
mod tests;
