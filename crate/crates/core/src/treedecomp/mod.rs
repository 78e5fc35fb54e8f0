//! Tree decompositions: validation, nice decompositions and relabeling.
//!
//! Node ids are 0-based indices into the bag list. The `.td` reader and writer
//! in [`pace`] translate to and from the 1-based ids used in files.

mod nicify;
pub mod pace;

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::matrix::{UnderlyingGraph, Vertex};

pub use nicify::nicify;

/// Index of a node in a decomposition.
pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TdError {
    #[error("decomposition has no nodes")]
    EmptyDecomposition,
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("decomposition is over {found} vertices but the graph has {expected}")]
    VertexCountMismatch { expected: usize, found: usize },
    #[error("bag {node} contains vertex {vertex} outside 1..={n}")]
    VertexOutOfRange { node: usize, vertex: Vertex, n: usize },
    #[error("uncovered vertex {0}")]
    UncoveredVertex(Vertex),
    #[error("uncovered edge {0} {1}")]
    UncoveredEdge(Vertex, Vertex),
    #[error("bags containing vertex {0} are not connected")]
    DisconnectedOccurrences(Vertex),
    #[error("node {node} is not nice: {reason}")]
    NotNice { node: usize, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An arbitrary tree decomposition as read from input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    /// Number of vertices of the decomposed graph.
    pub n_vertices: usize,
    /// Sorted, duplicate-free bags.
    pub bags: Vec<Vec<Vertex>>,
    /// Undirected tree edges between node ids.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Designated root; node 0 when absent.
    pub root: Option<NodeId>,
}

impl TreeDecomposition {
    /// Sorts and deduplicates every bag.
    pub fn new(
        n_vertices: usize,
        mut bags: Vec<Vec<Vertex>>,
        edges: Vec<(NodeId, NodeId)>,
        root: Option<NodeId>,
    ) -> Self {
        for bag in &mut bags {
            bag.sort_unstable();
            bag.dedup();
        }
        TreeDecomposition {
            n_vertices,
            bags,
            edges,
            root,
        }
    }

    /// The decomposition with a single bag holding every vertex.
    pub fn trivial(n_vertices: usize) -> Self {
        Self::new(n_vertices, vec![(1..=n_vertices).collect()], vec![], None)
    }

    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    /// Largest bag size minus one (0 for a decomposition of empty bags).
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn root_or_default(&self) -> NodeId {
        self.root.unwrap_or(0)
    }

    /// Children lists (ascending ids) and parents of the tree rooted at
    /// `root_or_default()`.
    pub fn rooted(&self) -> Result<(Vec<Vec<NodeId>>, Vec<Option<NodeId>>), TdError> {
        rooted_tree(self.bags.len(), &self.edges, self.root_or_default())
    }

    /// Checks the three decomposition properties against `graph` and returns
    /// the width.
    pub fn validate(&self, graph: &UnderlyingGraph) -> Result<usize, TdError> {
        let m = self.bags.len();
        if m == 0 {
            return Err(TdError::EmptyDecomposition);
        }
        if self.n_vertices != graph.n {
            return Err(TdError::VertexCountMismatch {
                expected: graph.n,
                found: self.n_vertices,
            });
        }
        let n = graph.n;
        self.rooted()?;

        let mut occurrences: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (node, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if v == 0 || v > n {
                    return Err(TdError::VertexOutOfRange {
                        node: node + 1,
                        vertex: v,
                        n,
                    });
                }
                occurrences[v - 1].push(node);
            }
        }
        if let Some(v) = occurrences.iter().position(Vec::is_empty) {
            return Err(TdError::UncoveredVertex(v + 1));
        }

        for &(u, v) in &graph.edges {
            let (a, b) = if occurrences[u - 1].len() <= occurrences[v - 1].len() {
                (u, v)
            } else {
                (v, u)
            };
            let covered = occurrences[a - 1]
                .iter()
                .any(|&node| self.bags[node].binary_search(&b).is_ok());
            if !covered {
                return Err(TdError::UncoveredEdge(u.min(v), u.max(v)));
            }
        }

        // The nodes holding v induce a forest; it is connected iff it has
        // exactly one more node than edges.
        let mut induced_edges = vec![0usize; n];
        for &(a, b) in &self.edges {
            let (small, large) = if self.bags[a].len() <= self.bags[b].len() {
                (a, b)
            } else {
                (b, a)
            };
            for &v in &self.bags[small] {
                if self.bags[large].binary_search(&v).is_ok() {
                    induced_edges[v - 1] += 1;
                }
            }
        }
        for v in 1..=n {
            if induced_edges[v - 1] + 1 != occurrences[v - 1].len() {
                return Err(TdError::DisconnectedOccurrences(v));
            }
        }

        let width = self.width();
        debug_assert!(
            width >= n || graph.edge_count() + width * (width + 1) / 2 <= width * n,
            "graph too dense for its decomposition width"
        );
        Ok(width)
    }
}

/// Roots the tree given by `edges` on `m` nodes at `root`.
pub(crate) fn rooted_tree(
    m: usize,
    edges: &[(NodeId, NodeId)],
    root: NodeId,
) -> Result<(Vec<Vec<NodeId>>, Vec<Option<NodeId>>), TdError> {
    if m == 0 {
        return Err(TdError::EmptyDecomposition);
    }
    if root >= m {
        return Err(TdError::NotATree(format!("root {} does not exist", root + 1)));
    }
    if edges.len() + 1 != m {
        return Err(TdError::NotATree(format!(
            "{} nodes need {} edges, found {}",
            m,
            m - 1,
            edges.len()
        )));
    }
    let mut adjacency = vec![Vec::new(); m];
    for &(a, b) in edges {
        if a >= m || b >= m {
            return Err(TdError::NotATree(format!(
                "edge {} {} references a missing node",
                a + 1,
                b + 1
            )));
        }
        if a == b {
            return Err(TdError::NotATree(format!("self loop at node {}", a + 1)));
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut parent = vec![None; m];
    let mut children = vec![Vec::new(); m];
    let mut seen = vec![false; m];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        let mut next: Vec<NodeId> = adjacency[x]
            .iter()
            .copied()
            .filter(|&y| Some(y) != parent[x])
            .collect();
        next.sort_unstable();
        for &y in &next {
            if seen[y] {
                return Err(TdError::NotATree(format!("cycle through node {}", y + 1)));
            }
            seen[y] = true;
            parent[y] = Some(x);
            queue.push_back(y);
        }
        children[x] = next;
    }
    if let Some(x) = seen.iter().position(|s| !s) {
        return Err(TdError::NotATree(format!("node {} is unreachable", x + 1)));
    }
    Ok((children, parent))
}

/// Kind of a node of a nice tree decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Leaf,
    Introduce(Vertex),
    Forget(Vertex),
    Join,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Leaf => write!(f, "Leaf"),
            NodeKind::Introduce(v) => write!(f, "Introduce {v}"),
            NodeKind::Forget(v) => write!(f, "Forget {v}"),
            NodeKind::Join => write!(f, "Join"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNode {
    pub kind: NodeKind,
    pub bag: Vec<Vertex>,
    /// Ascending; the first child is the "left" child of a join.
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Node counts by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub leaf: usize,
    pub introduce: usize,
    pub forget: usize,
    pub join: usize,
}

/// A rooted nice tree decomposition whose root bag is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    n_vertices: usize,
    nodes: Vec<NiceNode>,
    root: NodeId,
    post_order: Vec<NodeId>,
    forget_node: Vec<NodeId>,
}

/// A vertex relabeling and its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabeling {
    /// `new_label[v - 1]` is the new name of original vertex `v`.
    pub new_label: Vec<Vertex>,
    /// `original[w - 1]` is the original name of new vertex `w`.
    pub original: Vec<Vertex>,
}

impl Relabeling {
    pub fn identity(n: usize) -> Self {
        Relabeling {
            new_label: (1..=n).collect(),
            original: (1..=n).collect(),
        }
    }

    pub fn from_new_labels(new_label: Vec<Vertex>) -> Self {
        let mut original = vec![0; new_label.len()];
        for (i, &w) in new_label.iter().enumerate() {
            original[w - 1] = i + 1;
        }
        Relabeling {
            new_label,
            original,
        }
    }
}

impl NiceTreeDecomposition {
    /// Builds a nice decomposition from bags and rooted children lists,
    /// inferring node kinds and checking every niceness condition.
    pub fn from_parts(
        n_vertices: usize,
        bags: Vec<Vec<Vertex>>,
        children: Vec<Vec<NodeId>>,
        root: NodeId,
    ) -> Result<Self, TdError> {
        let m = bags.len();
        if m == 0 {
            return Err(TdError::EmptyDecomposition);
        }
        let not_nice = |node: NodeId, reason: String| TdError::NotNice {
            node: node + 1,
            reason,
        };
        let mut parent = vec![None; m];
        for (x, kids) in children.iter().enumerate() {
            for &c in kids {
                if c >= m || parent[c].is_some() || c == root {
                    return Err(TdError::NotATree(format!("bad child {} of {}", c + 1, x + 1)));
                }
                parent[c] = Some(x);
            }
        }

        let mut nodes = Vec::with_capacity(m);
        for (x, bag) in bags.into_iter().enumerate() {
            if bag.windows(2).any(|w| w[0] >= w[1]) {
                return Err(not_nice(x, "bag is not sorted".into()));
            }
            if let Some(&v) = bag.iter().find(|&&v| v == 0 || v > n_vertices) {
                return Err(TdError::VertexOutOfRange {
                    node: x + 1,
                    vertex: v,
                    n: n_vertices,
                });
            }
            let mut kids = children[x].clone();
            kids.sort_unstable();
            nodes.push(NiceNode {
                kind: NodeKind::Leaf,
                bag,
                children: kids,
                parent: parent[x],
            });
        }
        if !nodes[root].bag.is_empty() {
            return Err(not_nice(root, "root bag is not empty".into()));
        }

        for x in 0..m {
            let kind = match nodes[x].children.as_slice() {
                [] => NodeKind::Leaf,
                &[c] => {
                    let (parent_bag, child_bag) = (&nodes[x].bag, &nodes[c].bag);
                    if parent_bag.len() == child_bag.len() + 1 {
                        match single_extra(parent_bag, child_bag) {
                            Some(v) => NodeKind::Introduce(v),
                            None => return Err(not_nice(x, "bags differ by more than one vertex".into())),
                        }
                    } else if child_bag.len() == parent_bag.len() + 1 {
                        match single_extra(child_bag, parent_bag) {
                            Some(v) => NodeKind::Forget(v),
                            None => return Err(not_nice(x, "bags differ by more than one vertex".into())),
                        }
                    } else {
                        return Err(not_nice(x, "bags differ by more than one vertex".into()));
                    }
                }
                &[a, b] => {
                    if nodes[a].bag != nodes[x].bag || nodes[b].bag != nodes[x].bag {
                        return Err(not_nice(x, "join children have different bags".into()));
                    }
                    NodeKind::Join
                }
                _ => return Err(not_nice(x, "more than two children".into())),
            };
            nodes[x].kind = kind;
        }

        let post_order = post_order_of(&nodes, root);
        if post_order.len() != m {
            return Err(TdError::NotATree("nodes unreachable from the root".into()));
        }

        let mut forget_node = vec![usize::MAX; n_vertices];
        for (x, node) in nodes.iter().enumerate() {
            if let NodeKind::Forget(v) = node.kind {
                if forget_node[v - 1] != usize::MAX {
                    return Err(not_nice(x, format!("vertex {v} is forgotten twice")));
                }
                forget_node[v - 1] = x;
            }
        }
        if let Some(v) = forget_node.iter().position(|&x| x == usize::MAX) {
            return Err(TdError::UncoveredVertex(v + 1));
        }

        Ok(NiceTreeDecomposition {
            n_vertices,
            nodes,
            root,
            post_order,
            forget_node,
        })
    }

    /// Interprets an arbitrary decomposition as nice, rooted at its declared
    /// root (node 0 by default). Fails if any node violates niceness.
    pub fn try_from_decomposition(td: &TreeDecomposition) -> Result<Self, TdError> {
        let (children, _) = td.rooted()?;
        Self::from_parts(
            td.n_vertices,
            td.bags.clone(),
            children,
            td.root_or_default(),
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn nodes(&self) -> &[NiceNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NiceNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn width(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.bag.len())
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    /// Children before parents; the children of a node are visited in
    /// ascending id order.
    pub fn post_order(&self) -> &[NodeId] {
        &self.post_order
    }

    /// The Forget node of vertex `v`.
    pub fn forget_node(&self, v: Vertex) -> NodeId {
        self.forget_node[v - 1]
    }

    pub fn kind_counts(&self) -> KindCounts {
        let mut counts = KindCounts::default();
        for node in &self.nodes {
            match node.kind {
                NodeKind::Leaf => counts.leaf += 1,
                NodeKind::Introduce(_) => counts.introduce += 1,
                NodeKind::Forget(_) => counts.forget += 1,
                NodeKind::Join => counts.join += 1,
            }
        }
        counts
    }

    /// The same tree as a plain decomposition rooted at the same node.
    pub fn to_decomposition(&self) -> TreeDecomposition {
        let edges = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(x, node)| node.parent.map(|p| (x, p)))
            .collect();
        TreeDecomposition {
            n_vertices: self.n_vertices,
            bags: self.nodes.iter().map(|n| n.bag.clone()).collect(),
            edges,
            root: Some(self.root),
        }
    }

    /// Vertices in the order their Forget nodes appear in the post order.
    pub fn forget_sequence(&self) -> Vec<Vertex> {
        self.post_order
            .iter()
            .filter_map(|&x| match self.nodes[x].kind {
                NodeKind::Forget(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    /// The labeling under which the i-th forgotten vertex (in post order) is
    /// called `n - i + 1`. Under it every Forget node drops the largest label
    /// of its child's bag.
    pub fn relabel_by_forget_order(&self) -> Relabeling {
        let n = self.n_vertices;
        let mut new_label = vec![0; n];
        for (i, v) in self.forget_sequence().into_iter().enumerate() {
            new_label[v - 1] = n - i;
        }
        Relabeling::from_new_labels(new_label)
    }

    /// The same tree with every vertex renamed by `relabeling`.
    pub fn relabeled(&self, relabeling: &Relabeling) -> Self {
        let rename = |v: Vertex| relabeling.new_label[v - 1];
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                let mut bag: Vec<Vertex> = node.bag.iter().map(|&v| rename(v)).collect();
                bag.sort_unstable();
                let kind = match node.kind {
                    NodeKind::Introduce(v) => NodeKind::Introduce(rename(v)),
                    NodeKind::Forget(v) => NodeKind::Forget(rename(v)),
                    other => other,
                };
                NiceNode {
                    kind,
                    bag,
                    children: node.children.clone(),
                    parent: node.parent,
                }
            })
            .collect();
        let mut forget_node = vec![0; self.n_vertices];
        for v in 1..=self.n_vertices {
            forget_node[rename(v) - 1] = self.forget_node[v - 1];
        }
        NiceTreeDecomposition {
            n_vertices: self.n_vertices,
            nodes,
            root: self.root,
            post_order: self.post_order.clone(),
            forget_node,
        }
    }

    /// Checks the two join-path properties the operation-count bound relies
    /// on:
    ///
    /// 1. a Join node's bag is no larger than the bag of any Join below it;
    /// 2. the nodes strictly between a Join and the nearest Join above it
    ///    read, bottom-up, as alternating Forget/Introduce pairs (Forget
    ///    first) followed by Forget nodes only.
    pub fn check_join_paths(&self) -> Result<(), TdError> {
        for (j, node) in self.nodes.iter().enumerate() {
            if node.kind != NodeKind::Join {
                continue;
            }
            let mut between = Vec::new();
            let mut cursor = node.parent;
            while let Some(x) = cursor {
                if self.nodes[x].kind == NodeKind::Join {
                    break;
                }
                between.push(self.nodes[x].kind);
                cursor = self.nodes[x].parent;
            }
            let Some(upper) = cursor else { continue };
            if self.nodes[upper].bag.len() > node.bag.len() {
                return Err(TdError::NotNice {
                    node: upper + 1,
                    reason: format!("join bag larger than the join bag of descendant {}", j + 1),
                });
            }
            if !is_alternating_then_forget(&between) {
                return Err(TdError::NotNice {
                    node: j + 1,
                    reason: "path to the next join is not Forget/Introduce alternation followed by Forgets"
                        .into(),
                });
            }
        }
        Ok(())
    }
}

/// Matches `(Forget Introduce)* Forget*`.
fn is_alternating_then_forget(kinds: &[NodeKind]) -> bool {
    let mut i = 0;
    while i + 1 < kinds.len()
        && matches!(kinds[i], NodeKind::Forget(_))
        && matches!(kinds[i + 1], NodeKind::Introduce(_))
    {
        i += 2;
    }
    kinds[i..].iter().all(|k| matches!(k, NodeKind::Forget(_)))
}

/// The single element of `larger` missing from `smaller`, if `smaller` is a
/// subset of `larger` with exactly one element fewer.
fn single_extra(larger: &[Vertex], smaller: &[Vertex]) -> Option<Vertex> {
    let mut extra = None;
    let mut j = 0;
    for &v in larger {
        if j < smaller.len() && smaller[j] == v {
            j += 1;
        } else if extra.is_none() {
            extra = Some(v);
        } else {
            return None;
        }
    }
    (j == smaller.len()).then_some(extra).flatten()
}

fn post_order_of(nodes: &[NiceNode], root: NodeId) -> Vec<NodeId> {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![(root, 0usize)];
    while let Some((x, next_child)) = stack.pop() {
        if let Some(&c) = nodes[x].children.get(next_child) {
            stack.push((x, next_child + 1));
            stack.push((c, 0));
        } else {
            order.push(x);
        }
    }
    order
}
