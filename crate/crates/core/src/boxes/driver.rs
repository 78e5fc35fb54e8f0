use std::borrow::Cow;

use super::{
    forget_box, introduce_box, join_box, leaf_box, violation, BoxError, DiagonalArray, NodeBox,
    OpCounter, Trace, TraceOp, Workspace,
};
use crate::field::Field;
use crate::matrix::SparseSymmetricMatrix;
use crate::treedecomp::{NiceTreeDecomposition, NodeId, NodeKind, Relabeling};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagOptions {
    /// Rename vertices so that the i-th forgotten vertex is `n - i + 1`
    /// before running. Results are reported in the original labels either
    /// way.
    pub relabel: bool,
    /// Record every elementary operation.
    pub trace: bool,
    /// Tally field and row operations.
    pub count: bool,
}

impl Default for DiagOptions {
    fn default() -> Self {
        DiagOptions {
            relabel: true,
            trace: false,
            count: false,
        }
    }
}

/// Output of [`congruent_diagonal`], in the caller's vertex labels.
#[derive(Debug)]
pub struct Diagonalization<F: Field> {
    pub diagonal: DiagonalArray<F>,
    pub trace: Option<Trace<F::Elem>>,
    pub counter: Option<OpCounter>,
    /// The renaming used internally (identity when relabeling is off).
    pub relabeling: Relabeling,
}

/// Computes a diagonal matrix congruent to `matrix` by processing the nodes
/// of `nice` in post order.
pub fn congruent_diagonal<F: Field>(
    matrix: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    options: DiagOptions,
) -> Result<Diagonalization<F>, BoxError> {
    congruent_diagonal_observed(matrix, nice, options, |_, _, _| {})
}

/// Like [`congruent_diagonal`], calling `observer` with every box right after
/// it is produced. With relabeling on, the observer sees internal labels.
pub fn congruent_diagonal_observed<F, O>(
    matrix: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    options: DiagOptions,
    mut observer: O,
) -> Result<Diagonalization<F>, BoxError>
where
    F: Field,
    O: FnMut(NodeId, &NodeBox<F>, &DiagonalArray<F>),
{
    let n = matrix.order();
    if nice.n_vertices() != n {
        return Err(BoxError::OrderMismatch {
            matrix: n,
            decomposition: nice.n_vertices(),
        });
    }
    nice.to_decomposition().validate(&matrix.underlying_graph())?;

    let (relabeling, matrix, nice) = if options.relabel {
        let r = nice.relabel_by_forget_order();
        let m = matrix.permuted(&r.new_label);
        let t = nice.relabeled(&r);
        (r, Cow::Owned(m), Cow::Owned(t))
    } else {
        (Relabeling::identity(n), Cow::Borrowed(matrix), Cow::Borrowed(nice))
    };

    let field = matrix.field().clone();
    let mut ws = Workspace::new(field.clone(), n);
    if options.trace {
        ws = ws.with_trace();
    }
    if options.count {
        ws = ws.with_counter();
    }

    let mut boxes: Vec<Option<NodeBox<F>>> = vec![None; nice.node_count()];
    let take = |boxes: &mut Vec<Option<NodeBox<F>>>, c: NodeId| {
        boxes[c]
            .take()
            .ok_or_else(|| violation(format!("box of node {} missing", c + 1)))
    };
    for &x in nice.post_order() {
        let node = nice.node(x);
        if let Some(t) = &mut ws.trace {
            t.ops.push(TraceOp::Node(x));
        }
        if let Some(c) = &mut ws.counter {
            c.enter(node.kind);
        }
        let b = match node.kind {
            NodeKind::Leaf => leaf_box(&field, &node.bag),
            NodeKind::Introduce(v) => introduce_box(&field, v, take(&mut boxes, node.children[0])?)?,
            NodeKind::Forget(v) => forget_box(v, take(&mut boxes, node.children[0])?, &matrix, &mut ws)?.0,
            NodeKind::Join => {
                let left = take(&mut boxes, node.children[0])?;
                let right = take(&mut boxes, node.children[1])?;
                join_box(left, right, &mut ws)?
            }
        };
        if cfg!(debug_assertions) {
            b.check_invariants(&field)?;
            if b.type_ii() != node.bag.as_slice() {
                return Err(violation(format!("box of node {} is not over its bag", x + 1)));
            }
            if b.type_i().iter().chain(b.type_ii()).any(|&v| ws.diagonal.contains(v)) {
                return Err(violation(format!("node {} keeps an emitted vertex", x + 1)));
            }
        }
        observer(x, &b, &ws.diagonal);
        boxes[x] = Some(b);
    }

    let root = take(&mut boxes, nice.root())?;
    if !root.is_empty() || !ws.diagonal.is_complete() {
        return Err(violation("vertices left undiagonalized at the root"));
    }

    let (diagonal, trace, counter) = ws.into_parts();
    let original = &relabeling.original;
    let (diagonal, trace, counter) = if options.relabel {
        let mut counter = counter;
        if let Some(c) = &mut counter {
            c.rename_rows(original);
        }
        (
            diagonal.renamed(original),
            trace.map(|t| t.map_vertices(|v| original[v - 1])),
            counter,
        )
    } else {
        (diagonal, trace, counter)
    };
    Ok(Diagonalization {
        diagonal,
        trace,
        counter,
        relabeling,
    })
}
