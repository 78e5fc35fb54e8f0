//! Field-operation and row-operation tallies.

use crate::matrix::Vertex;
use crate::treedecomp::NodeKind;

/// Counts per node kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerKind {
    pub leaf: u64,
    pub introduce: u64,
    pub forget: u64,
    pub join: u64,
}

impl PerKind {
    fn slot(&mut self, kind: NodeKind) -> &mut u64 {
        match kind {
            NodeKind::Leaf => &mut self.leaf,
            NodeKind::Introduce(_) => &mut self.introduce,
            NodeKind::Forget(_) => &mut self.forget,
            NodeKind::Join => &mut self.join,
        }
    }

    pub fn total(&self) -> u64 {
        self.leaf + self.introduce + self.forget + self.join
    }
}

/// Which branch of the forget procedure handled a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForgetCase {
    /// Row already diagonal.
    AlreadyDiagonal,
    /// Nonzero diagonal used as pivot.
    DiagonalPivot,
    /// Zero diagonal; the row was buffered as a type-i row.
    Buffered,
    /// Zero diagonal; the row reduced to zero against buffered rows.
    Cancelled,
    /// The row paired with a buffered row and both were diagonalized.
    Paired,
}

/// Exact operation tallies of one diagonalization run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub additions: u64,
    pub multiplications: u64,
    pub divisions: u64,
    /// Paired row/column operations.
    pub row_ops: u64,
    pub field_ops_by_kind: PerKind,
    pub row_ops_by_kind: PerKind,
    pub forget_cases: [u64; 5],
    /// `join_row_ops[v - 1]`: join eliminations whose target was row `v`.
    pub join_row_ops: Vec<u32>,
    kind: Option<NodeKind>,
}

impl OpCounter {
    pub fn new(n: usize) -> Self {
        OpCounter {
            join_row_ops: vec![0; n],
            ..Default::default()
        }
    }

    pub fn field_ops(&self) -> u64 {
        self.additions + self.multiplications + self.divisions
    }

    pub fn max_join_row_ops(&self) -> u32 {
        self.join_row_ops.iter().copied().max().unwrap_or(0)
    }

    pub fn forget_case_count(&self, case: ForgetCase) -> u64 {
        self.forget_cases[case as usize]
    }

    pub(crate) fn enter(&mut self, kind: NodeKind) {
        self.kind = Some(kind);
    }

    pub(crate) fn arith(&mut self, adds: u64, muls: u64, divs: u64) {
        self.additions += adds;
        self.multiplications += muls;
        self.divisions += divs;
        if let Some(kind) = self.kind {
            *self.field_ops_by_kind.slot(kind) += adds + muls + divs;
        }
    }

    pub(crate) fn row_op(&mut self, target: Vertex) {
        self.row_ops += 1;
        if let Some(kind) = self.kind {
            *self.row_ops_by_kind.slot(kind) += 1;
            if kind == NodeKind::Join {
                self.join_row_ops[target - 1] += 1;
            }
        }
    }

    pub(crate) fn forget_case(&mut self, case: ForgetCase) {
        self.forget_cases[case as usize] += 1;
    }

    /// Re-indexes the per-row tallies: entry `w` moves to `original[w - 1]`.
    pub(crate) fn rename_rows(&mut self, original: &[Vertex]) {
        let mut renamed = vec![0; self.join_row_ops.len()];
        for (w, &count) in self.join_row_ops.iter().enumerate() {
            renamed[original[w] - 1] = count;
        }
        self.join_row_ops = renamed;
    }
}
