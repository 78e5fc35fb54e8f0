use std::collections::BTreeSet;

use num_rational::BigRational;
use proptest::prelude::*;

use super::*;
use crate::field::Exact;
use crate::matrix::tests::example_matrix;
use crate::oracle::{bareiss_determinant, dense_congruent_diagonalize, random_instance, random_instance_with, DenseSymmetric, InstanceConfig};
use crate::treedecomp::tests::example_nice_td;
use crate::treedecomp::{nicify, NiceTreeDecomposition, NodeId};

fn q(x: i64) -> BigRational {
    Exact.from_i64(x)
}

fn grid(rows: &[&[i64]]) -> Vec<Vec<BigRational>> {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

fn boxed(type_i: &[Vertex], n1: &[&[i64]], bag: &[Vertex], n2: &[&[i64]]) -> NodeBox<Exact> {
    NodeBox::from_parts(&Exact, type_i.to_vec(), grid(n1), bag.to_vec(), grid(n2)).unwrap()
}

fn assert_box(actual: &NodeBox<Exact>, expected: &NodeBox<Exact>) {
    assert_eq!(actual.type_i(), expected.type_i(), "type-i labels");
    assert_eq!(actual.n1(), expected.n1(), "N1");
    assert_eq!(actual.type_ii(), expected.type_ii(), "bag");
    assert_eq!(actual.n2(), expected.n2(), "N2");
}

fn example_nice() -> NiceTreeDecomposition {
    NiceTreeDecomposition::try_from_decomposition(&example_nice_td()).unwrap()
}

fn pairs(d: &DiagonalArray<Exact>) -> Vec<(Vertex, i64)> {
    d.pairs()
        .iter()
        .map(|(v, x)| {
            assert!(x.is_integer());
            (*v, x.to_integer().try_into().unwrap())
        })
        .collect()
}

fn n2_of(bag: &[Vertex], entries: &[(Vertex, Vertex, i64)]) -> SparseSymmetricMatrix<Exact> {
    let n = bag.iter().copied().max().unwrap_or(0);
    SparseSymmetricMatrix::from_entries(Exact, n, entries.iter().map(|&(u, v, x)| (u, v, q(x)))).unwrap()
}

#[test]
fn leaf_boxes() {
    let b = leaf_box(&Exact, &[1, 2, 4]);
    assert_box(&b, &boxed(&[], &[], &[1, 2, 4], &[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]));
    assert!(leaf_box(&Exact, &[]).is_empty());
    assert_eq!(leaf_box(&Exact, &[3, 5, 6]).n2().len(), 3);
}

#[test]
fn introduce_into_n2() {
    let n6 = boxed(&[], &[], &[3, 6], &[&[-4, 2], &[2, -1]]);
    let n7 = introduce_box(&Exact, 4, n6).unwrap();
    assert_box(
        &n7,
        &boxed(&[], &[], &[3, 4, 6], &[&[-4, 0, 2], &[0, 0, 0], &[2, 0, -1]]),
    );
    let single = introduce_box(&Exact, 1, leaf_box(&Exact, &[])).unwrap();
    assert_box(&single, &boxed(&[], &[], &[1], &[&[0]]));
}

#[test]
fn introduce_shifts_buffered_rows() {
    let n2 = boxed(&[2], &[&[0, 1]], &[1, 4], &[&[0, 0], &[0, 0]]);
    let n3 = introduce_box(&Exact, 3, n2).unwrap();
    assert_box(&n3, &boxed(&[2], &[&[0, 0, 1]], &[1, 3, 4], &[&[0; 3], &[0; 3], &[0; 3]]));
}

#[test]
fn introduce_rejects_present_vertices() {
    let n2 = boxed(&[2], &[&[0, 1]], &[1, 4], &[&[0, 0], &[0, 0]]);
    assert!(matches!(
        introduce_box(&Exact, 4, n2.clone()),
        Err(BoxError::VertexAlreadyPresent(4))
    ));
    assert!(matches!(
        introduce_box(&Exact, 2, n2),
        Err(BoxError::VertexAlreadyPresent(2))
    ));
}

#[test]
fn join_emits_cancelled_row() {
    let n4 = boxed(&[1, 2], &[&[2, -1], &[0, 1]], &[3, 4], &[&[0, 0], &[0, 0]]);
    let n8 = boxed(&[6], &[&[2, -1]], &[3, 4], &[&[-4, 0], &[0, 0]]);
    let mut ws = Workspace::new(Exact, 6).with_trace();
    let n9 = join_box(n4, n8, &mut ws).unwrap();
    assert_box(&n9, &boxed(&[1, 2], &[&[2, -1], &[0, 1]], &[3, 4], &[&[-4, 0], &[0, 0]]));
    assert_eq!(pairs(ws.diagonal()), vec![(6, 0)]);
    assert_eq!(ws.trace().unwrap().render(&Exact), "addrow 6 1 -1\nemit 6 0\n");
}

#[test]
fn join_without_buffered_rows_adds_n2() {
    let a = boxed(&[], &[], &[1, 2], &[&[1, 2], &[2, 0]]);
    let b = boxed(&[], &[], &[1, 2], &[&[-1, 1], &[1, 5]]);
    let mut ws = Workspace::new(Exact, 2).with_counter();
    let j = join_box(a, b, &mut ws).unwrap();
    assert_box(&j, &boxed(&[], &[], &[1, 2], &[&[0, 3], &[3, 5]]));
    assert!(ws.diagonal().is_empty());
    assert_eq!(ws.counter().unwrap().row_ops, 0);
}

#[test]
fn join_inserts_rows_by_pivot() {
    let a = boxed(&[7], &[&[0, 0, 1]], &[1, 2, 3], &[&[0; 3], &[0; 3], &[0; 3]]);
    let b = boxed(&[8, 9], &[&[1, 0, 0], &[0, 0, 2]], &[1, 2, 3], &[&[0; 3], &[0; 3], &[0; 3]]);
    let mut ws = Workspace::new(Exact, 9);
    let j = join_box(a, b, &mut ws).unwrap();
    assert_eq!(j.type_i(), &[8, 7]);
    assert_eq!(pairs(ws.diagonal()), vec![(9, 0)]);
}

#[test]
fn join_rejects_different_bags() {
    let mut ws = Workspace::new(Exact, 3);
    assert!(matches!(
        join_box(leaf_box(&Exact, &[1, 2]), leaf_box(&Exact, &[1, 3]), &mut ws),
        Err(BoxError::BagMismatch)
    ));
}

#[test]
fn forget_with_diagonal_pivot() {
    let m = n2_of(&[3, 5, 6], &[(5, 5, 1), (3, 5, 2), (5, 6, -1)]);
    let child = leaf_box(&Exact, &[3, 5, 6]);
    let view = forget_view(&Exact, 5, &child, &m).unwrap();
    assert_eq!(view, ForgetView { d: q(1), x: vec![], y: vec![q(2), q(-1)] });
    let mut ws = Workspace::new(Exact, 6).with_trace();
    let (n6, case) = forget_box(5, child, &m, &mut ws).unwrap();
    assert_eq!(case, ForgetCase::DiagonalPivot);
    assert_box(&n6, &boxed(&[], &[], &[3, 6], &[&[-4, 2], &[2, -1]]));
    assert_eq!(pairs(ws.diagonal()), vec![(5, 1)]);
    assert_eq!(
        ws.trace().unwrap().render(&Exact),
        "addrow 3 5 -2\naddrow 6 5 1\nemit 5 1\n"
    );
}

#[test]
fn forget_buffers_zero_diagonal_row() {
    let m = n2_of(&[1, 2, 4], &[(2, 4, 1)]);
    let mut ws = Workspace::new(Exact, 4);
    let (n2, case) = forget_box(2, leaf_box(&Exact, &[1, 2, 4]), &m, &mut ws).unwrap();
    assert_eq!(case, ForgetCase::Buffered);
    assert_box(&n2, &boxed(&[2], &[&[0, 1]], &[1, 4], &[&[0, 0], &[0, 0]]));
    assert!(ws.diagonal().is_empty());
}

#[test]
fn forget_pairs_with_buffered_row() {
    let n9 = boxed(&[1, 2], &[&[2, -1], &[0, 1]], &[3, 4], &[&[-4, 0], &[0, 0]]);
    let m = example_matrix();
    let view = forget_view(&Exact, 4, &n9, &m).unwrap();
    assert_eq!(view, ForgetView { d: q(1), x: vec![q(-1), q(1)], y: vec![q(3)] });
    let mut ws = Workspace::new(Exact, 6).with_trace();
    let (n10, case) = forget_box(4, n9, &m, &mut ws).unwrap();
    assert_eq!(case, ForgetCase::Paired);
    assert_box(&n10, &boxed(&[1], &[&[2]], &[3], &[&[-4]]));
    assert_eq!(pairs(ws.diagonal()), vec![(4, -1), (2, 1)]);
}

#[test]
fn forget_already_diagonal_and_cancelled() {
    let m = n2_of(&[1, 2], &[(1, 1, 5)]);
    let mut ws = Workspace::new(Exact, 2);
    let (b, case) = forget_box(1, leaf_box(&Exact, &[1, 2]), &m, &mut ws).unwrap();
    assert_eq!(case, ForgetCase::AlreadyDiagonal);
    assert_box(&b, &boxed(&[], &[], &[2], &[&[0]]));

    // Row of 3 is (0 | 1, 1) against a buffered row (1, 1): it cancels.
    let child = boxed(&[9], &[&[1, 0, 1]], &[1, 3, 4], &[&[0, 1, 0], &[1, 0, 1], &[0, 1, 0]]);
    let m = SparseSymmetricMatrix::zero(Exact, 9);
    let mut ws = Workspace::new(Exact, 9);
    let (b, case) = forget_box(3, child, &m, &mut ws).unwrap();
    assert_eq!(case, ForgetCase::Cancelled);
    assert_box(&b, &boxed(&[9], &[&[1, 1]], &[1, 4], &[&[0, 0], &[0, 0]]));
    assert_eq!(pairs(ws.diagonal()), vec![(3, 0)]);
}

#[test]
fn forget_rejects_missing_vertex() {
    let m = SparseSymmetricMatrix::zero(Exact, 3);
    let mut ws = Workspace::new(Exact, 3);
    assert!(matches!(
        forget_box(3, leaf_box(&Exact, &[1, 2]), &m, &mut ws),
        Err(BoxError::VertexNotInBag(3))
    ));
}

#[test]
fn box_invariants_are_checked() {
    let bad = |ti: &[Vertex], n1: &[&[i64]], bag: &[Vertex], n2: &[&[i64]]| {
        NodeBox::from_parts(&Exact, ti.to_vec(), grid(n1), bag.to_vec(), grid(n2)).is_err()
    };
    assert!(bad(&[5], &[&[0, 0]], &[1, 2], &[&[0, 0], &[0, 0]]));
    assert!(bad(&[5, 6], &[&[0, 1], &[1, 0]], &[1, 2], &[&[0, 0], &[0, 0]]));
    assert!(bad(&[], &[], &[2, 1], &[&[0, 0], &[0, 0]]));
    assert!(bad(&[], &[], &[1, 2], &[&[0, 1], &[2, 0]]));
    assert!(bad(&[1], &[&[1, 0]], &[1, 2], &[&[0, 0], &[0, 0]]));
    assert!(bad(&[5], &[&[1]], &[1, 2], &[&[0, 0], &[0, 0]]));
}

#[test]
fn diagonal_array_rejects_duplicates() {
    let mut d = DiagonalArray::new(Exact, 3);
    d.push(2, q(1)).unwrap();
    assert!(d.push(2, q(0)).is_err());
    assert!(d.push(4, q(0)).is_err());
    assert_eq!(d.by_vertex(), vec![None, Some(q(1)), None]);
    assert!(!d.is_complete());
}

/// Boxes of the worked example after each node, ids 0-based.
fn example_boxes() -> Vec<NodeBox<Exact>> {
    let z2: &[&[i64]] = &[&[0, 0], &[0, 0]];
    let z3: &[&[i64]] = &[&[0; 3], &[0; 3], &[0; 3]];
    vec![
        boxed(&[], &[], &[1, 2, 4], z3),
        boxed(&[2], &[&[0, 1]], &[1, 4], z2),
        boxed(&[2], &[&[0, 0, 1]], &[1, 3, 4], z3),
        boxed(&[1, 2], &[&[2, -1], &[0, 1]], &[3, 4], z2),
        boxed(&[], &[], &[3, 5, 6], z3),
        boxed(&[], &[], &[3, 6], &[&[-4, 2], &[2, -1]]),
        boxed(&[], &[], &[3, 4, 6], &[&[-4, 0, 2], &[0, 0, 0], &[2, 0, -1]]),
        boxed(&[6], &[&[2, -1]], &[3, 4], &[&[-4, 0], &[0, 0]]),
        boxed(&[1, 2], &[&[2, -1], &[0, 1]], &[3, 4], &[&[-4, 0], &[0, 0]]),
        boxed(&[1], &[&[2]], &[3], &[&[-4]]),
        boxed(&[], &[], &[], &[]),
    ]
}

#[test]
fn worked_example_boxes() {
    let expected = example_boxes();
    let mut seen = vec![false; expected.len()];
    let options = DiagOptions {
        relabel: false,
        trace: true,
        count: true,
    };
    let run = congruent_diagonal_observed(&example_matrix(), &example_nice(), options, |x, b, _| {
        assert_box(b, &expected[x]);
        seen[x] = true;
    })
    .unwrap();
    assert!(seen.iter().all(|&s| s));
    assert_eq!(
        pairs(&run.diagonal),
        vec![(5, 1), (6, 0), (4, -1), (2, 1), (3, -2), (1, 2)]
    );
    let trace = run.trace.unwrap();
    let text = trace.render(&Exact);
    assert!(text.starts_with("node 1\n"), "{text}");
    assert!(crate::oracle::verify_replay(&example_matrix(), &trace).unwrap());
    let counter = run.counter.unwrap();
    assert!(counter.field_ops() > 0);
    assert_eq!(counter.forget_case_count(ForgetCase::Paired), 2);
    assert_eq!(counter.max_join_row_ops(), 1);
}

#[test]
fn worked_example_row_operations() {
    let options = DiagOptions {
        relabel: false,
        trace: true,
        count: false,
    };
    let run = congruent_diagonal(&example_matrix(), &example_nice(), options).unwrap();
    let text = run.trace.unwrap().render(&Exact);
    let adds: Vec<&str> = text.lines().filter(|l| l.starts_with("addrow")).collect();
    assert_eq!(
        adds,
        vec![
            "addrow 3 5 -2",
            "addrow 6 5 1",
            "addrow 6 1 -1",
            "addrow 1 2 1",
            "addrow 4 2 -1/2",
            "addrow 2 4 1/2",
            "addrow 4 2 -1",
            "addrow 3 4 3/2",
            "addrow 3 2 -3/2",
            "addrow 3 1 3/4",
            "addrow 1 3 1/2",
            "addrow 3 1 -1",
        ]
    );
}

#[test]
fn relabeling_keeps_the_answer_meaningful() {
    let m = example_matrix();
    let run = congruent_diagonal(
        &m,
        &example_nice(),
        DiagOptions {
            relabel: true,
            trace: true,
            count: false,
        },
    )
    .unwrap();
    assert!(run.diagonal.is_complete());
    let d: Vec<_> = run.diagonal.pairs().iter().map(|(_, x)| x.clone()).collect();
    assert_eq!(d.iter().filter(|x| **x == q(0)).count(), 1);
    assert!(crate::oracle::verify_replay(&m, &run.trace.unwrap()).unwrap());
}

#[test]
fn zero_matrix_emits_zeros() {
    let m = SparseSymmetricMatrix::zero(Exact, 6);
    let run = congruent_diagonal(&m, &example_nice(), DiagOptions::default()).unwrap();
    assert!(run.diagonal.pairs().iter().all(|(_, x)| *x == q(0)));
    assert_eq!(run.diagonal.len(), 6);
}

#[test]
fn driver_rejects_mismatched_inputs() {
    let m = SparseSymmetricMatrix::zero(Exact, 5);
    assert!(matches!(
        congruent_diagonal(&m, &example_nice(), DiagOptions::default()),
        Err(BoxError::OrderMismatch { matrix: 5, decomposition: 6 })
    ));
    let mut m = example_matrix();
    m = SparseSymmetricMatrix::from_entries(
        Exact,
        6,
        m.entries().map(|(u, v, x)| (u, v, x.clone())).chain([(1, 6, q(1))]),
    )
    .unwrap();
    assert!(matches!(
        congruent_diagonal(&m, &example_nice(), DiagOptions::default()),
        Err(BoxError::Decomposition(_))
    ));
}

/// Replays the operations of the subtree below every node on the part of
/// `M` already introduced there, and compares with the box and the values
/// emitted inside the subtree.
fn check_every_node(m: &SparseSymmetricMatrix<Exact>, nice: &NiceTreeDecomposition) {
    let mut boxes: Vec<Option<NodeBox<Exact>>> = vec![None; nice.node_count()];
    let options = DiagOptions {
        relabel: false,
        trace: true,
        count: false,
    };
    let run = congruent_diagonal_observed(m, nice, options, |x, b, _| boxes[x] = Some(b.clone())).unwrap();
    let trace = run.trace.unwrap();

    let mut owner = Vec::with_capacity(trace.len());
    let mut current = usize::MAX;
    for op in &trace.ops {
        if let TraceOp::Node(x) = op {
            current = *x;
        }
        owner.push(current);
    }

    let n = m.order();
    for x in 0..nice.node_count() {
        let mut below: BTreeSet<NodeId> = BTreeSet::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            below.insert(y);
            stack.extend(&nice.node(y).children);
        }
        let seen: BTreeSet<Vertex> = below.iter().flat_map(|&y| nice.node(y).bag.clone()).collect();
        let bag = &nice.node(x).bag;
        let introduced: Vec<_> = m
            .entries()
            .filter(|(u, v, _)| {
                seen.contains(u) && seen.contains(v) && !(bag.contains(u) && bag.contains(v))
            })
            .map(|(u, v, e)| (u, v, e.clone()))
            .collect();
        let partial = SparseSymmetricMatrix::from_entries(Exact, n, introduced).unwrap();
        let ops: Vec<_> = trace
            .ops
            .iter()
            .zip(&owner)
            .filter(|(_, o)| below.contains(o))
            .map(|(op, _)| op.clone())
            .collect();
        let emitted: Vec<(Vertex, BigRational)> = ops
            .iter()
            .filter_map(|op| match op {
                TraceOp::Emit(v, d) => Some((*v, d.clone())),
                _ => None,
            })
            .collect();
        let dense = crate::oracle::replay_trace(&partial, &Trace { ops }).unwrap();
        let b = boxes[x].as_ref().unwrap();
        for u in 1..=n {
            for v in 1..=n {
                let expected = match b.entry(&Exact, u, v) {
                    Some(e) => e,
                    None if u == v => emitted
                        .iter()
                        .find(|(w, _)| *w == u)
                        .map(|(_, d)| d.clone())
                        .unwrap_or_else(|| q(0)),
                    None => q(0),
                };
                assert_eq!(dense.get(u, v), &expected, "node {} entry ({u},{v})", x + 1);
            }
        }
    }
}

#[test]
fn example_replays_node_by_node() {
    check_every_node(&example_matrix(), &example_nice());
}

fn agrees_with_dense(m: &SparseSymmetricMatrix<Exact>, nice: &NiceTreeDecomposition, relabel: bool) {
    let options = DiagOptions {
        relabel,
        trace: true,
        count: true,
    };
    let run = congruent_diagonal(m, nice, options).unwrap();
    let d = &run.diagonal;
    let dense = dense_congruent_diagonalize(&DenseSymmetric::from_sparse(m));
    let product = d.pairs().iter().fold(q(1), |acc, (_, x)| acc * x);
    assert_eq!(product, bareiss_determinant(m));
    assert_eq!(product, dense.determinant);
    let signs = crate::spectral::inertia(d);
    assert_eq!(signs, dense.inertia);
    assert!(crate::oracle::verify_replay(m, &run.trace.unwrap()).unwrap());
    if relabel {
        // A row takes at most k join eliminations while it keeps a pivot;
        // the elimination that zeroes it can be one more.
        let k = nice.width() as u32;
        let values = d.by_vertex();
        for (v, &ops) in run.counter.unwrap().join_row_ops.iter().enumerate() {
            let zeroed = values[v].as_ref().is_some_and(|x| *x == q(0));
            assert!(ops <= k || (zeroed && ops == k + 1), "row {} took {ops} join eliminations", v + 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_instances_replay_node_by_node(n in 1usize..10, k in 1usize..4, seed in any::<u64>()) {
        let inst = random_instance(n, k, seed);
        let nice = nicify(&inst.td).unwrap();
        check_every_node(&inst.matrix, &nice);
    }

    #[test]
    fn random_instances_agree_with_dense_oracle(n in 1usize..16, k in 1usize..4, seed in any::<u64>(), relabel in any::<bool>()) {
        let inst = random_instance(n, k, seed);
        let nice = nicify(&inst.td).unwrap();
        agrees_with_dense(&inst.matrix, &nice, relabel);
    }

    #[test]
    fn zero_diagonals_and_unit_entries(n in 2usize..14, seed in any::<u64>()) {
        let mut config = InstanceConfig::new(n, 2);
        config.zero_diagonal_fraction = 1.0;
        config.max_entry = 1;
        let inst = random_instance_with(&config, seed);
        let nice = nicify(&inst.td).unwrap();
        agrees_with_dense(&inst.matrix, &nice, true);
        check_every_node(&inst.matrix, &nice);
    }
}

