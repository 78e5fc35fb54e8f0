use thiserror::Error;

use super::DenseSymmetric;
use crate::boxes::{Trace, TraceOp};
use crate::field::Field;
use crate::matrix::{SparseSymmetricMatrix, Vertex};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("malformed trace at operation {index}: {message}")]
    MalformedTrace { index: usize, message: String },
}

/// Applies the row/column operations of `trace` to a dense copy of `m`.
/// Emit and node markers do not act on the matrix.
pub fn replay_trace<F: Field>(
    m: &SparseSymmetricMatrix<F>,
    trace: &Trace<F::Elem>,
) -> Result<DenseSymmetric<F>, ReplayError> {
    let mut dense = DenseSymmetric::from_sparse(m);
    let n = m.order();
    let check = |index: usize, v: Vertex| {
        if v == 0 || v > n {
            Err(ReplayError::MalformedTrace {
                index,
                message: format!("vertex {v} outside 1..={n}"),
            })
        } else {
            Ok(v - 1)
        }
    };
    for (index, op) in trace.ops.iter().enumerate() {
        match op {
            TraceOp::AddRow {
                target,
                source,
                coeff,
            } => {
                let (t, s) = (check(index, *target)?, check(index, *source)?);
                if t == s {
                    return Err(ReplayError::MalformedTrace {
                        index,
                        message: "row added to itself".into(),
                    });
                }
                dense.add_multiple(t, s, coeff);
            }
            TraceOp::Swap(a, b) => {
                let (a, b) = (check(index, *a)?, check(index, *b)?);
                dense.swap(a, b);
            }
            TraceOp::Emit(v, _) => {
                check(index, *v)?;
            }
            TraceOp::Node(_) => {}
        }
    }
    Ok(dense)
}

/// Replays `trace` on `m` and checks that the result is diagonal with the
/// emitted value of every vertex at its position, each vertex emitted once.
pub fn verify_replay<F: Field>(
    m: &SparseSymmetricMatrix<F>,
    trace: &Trace<F::Elem>,
) -> Result<bool, ReplayError> {
    let dense = replay_trace(m, trace)?;
    let mut emitted = vec![false; m.order()];
    for op in &trace.ops {
        if let TraceOp::Emit(v, d) = op {
            if std::mem::replace(&mut emitted[v - 1], true) {
                return Ok(false);
            }
            if dense.get(*v, *v) != d {
                return Ok(false);
            }
        }
    }
    Ok(emitted.iter().all(|&e| e) && dense.is_diagonal())
}
