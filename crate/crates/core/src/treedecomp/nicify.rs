//! Conversion of an arbitrary tree decomposition into a nice one with an
//! empty root bag.
//!
//! The construction runs a sequence of passes over a rooted working tree:
//!
//! 1. merge every node whose bag is contained in its parent's bag;
//! 2. top-down, pad every bag smaller than its parent's with the smallest
//!    missing vertices of the parent;
//! 3. replace every node with `c >= 2` children by a left-leaning caterpillar
//!    of `c - 1` joins over `c` single-child copies of the node;
//! 4. on every path of single-child nodes between two joins, pad the nodes
//!    (bottom-up, from their child's bag) to the size of the lower join, so
//!    the path later expands into Forget/Introduce alternation followed only
//!    by Forgets;
//! 5. contract edges whose endpoints now carry equal bags, then replace every
//!    remaining single-child edge by a path that forgets and introduces one
//!    vertex at a time, Forget first. Forgets go from the largest label
//!    down, Introduces from the smallest up;
//! 6. append Forget nodes above the root, largest label first, until the
//!    bag is empty.
//!
//! Nodes of the result are numbered in post order.

use super::{rooted_tree, NiceTreeDecomposition, NodeId, TdError, TreeDecomposition};
use crate::matrix::Vertex;

#[derive(Debug, Clone)]
struct WorkNode {
    bag: Vec<Vertex>,
    children: Vec<usize>,
    parent: Option<usize>,
    alive: bool,
}

struct WorkTree {
    nodes: Vec<WorkNode>,
    root: usize,
}

/// Builds a nice tree decomposition with an empty root from `td`.
///
/// Only the tree structure is checked; `td` is assumed to be a valid
/// decomposition of some graph on `td.n_vertices` vertices. Width is
/// preserved.
pub fn nicify(td: &TreeDecomposition) -> Result<NiceTreeDecomposition, TdError> {
    if td.bags.is_empty() {
        return Err(TdError::EmptyDecomposition);
    }
    let root = td.root_or_default();
    let (children, _) = rooted_tree(td.bags.len(), &td.edges, root)?;
    let mut bags = td.bags.clone();
    for bag in &mut bags {
        bag.sort_unstable();
        bag.dedup();
    }

    let mut tree = merge_contained(&bags, &children, root);
    tree.pad_from_parents();
    tree.expand_high_degree();
    tree.level_join_chains();
    tree.contract_equal_edges();
    tree.expand_edges();
    tree.forget_root();
    tree.into_nice(td.n_vertices)
}

fn is_subset(small: &[Vertex], large: &[Vertex]) -> bool {
    let mut j = 0;
    for &v in small {
        while j < large.len() && large[j] < v {
            j += 1;
        }
        if j == large.len() || large[j] != v {
            return false;
        }
        j += 1;
    }
    true
}

/// Sorted `a \ b`.
fn difference(a: &[Vertex], b: &[Vertex]) -> Vec<Vertex> {
    a.iter()
        .copied()
        .filter(|v| b.binary_search(v).is_err())
        .collect()
}

fn insert_sorted(bag: &mut Vec<Vertex>, v: Vertex) {
    if let Err(pos) = bag.binary_search(&v) {
        bag.insert(pos, v);
    }
}

fn remove_sorted(bag: &mut Vec<Vertex>, v: Vertex) {
    if let Ok(pos) = bag.binary_search(&v) {
        bag.remove(pos);
    }
}

/// Pass 1: copies the tree, dropping every node whose bag is contained in the
/// bag of its nearest surviving ancestor. Children of a dropped node take its
/// place in the ancestor's child list.
fn merge_contained(bags: &[Vec<Vertex>], children: &[Vec<NodeId>], root: NodeId) -> WorkTree {
    let mut nodes = vec![WorkNode {
        bag: bags[root].clone(),
        children: Vec::new(),
        parent: None,
        alive: true,
    }];
    // (original node, surviving ancestor in the new tree)
    let mut stack: Vec<(NodeId, usize)> = children[root].iter().rev().map(|&c| (c, 0)).collect();
    while let Some((x, anchor)) = stack.pop() {
        if is_subset(&bags[x], &nodes[anchor].bag) {
            stack.extend(children[x].iter().rev().map(|&c| (c, anchor)));
        } else {
            let id = nodes.len();
            nodes.push(WorkNode {
                bag: bags[x].clone(),
                children: Vec::new(),
                parent: Some(anchor),
                alive: true,
            });
            nodes[anchor].children.push(id);
            stack.extend(children[x].iter().rev().map(|&c| (c, id)));
        }
    }
    WorkTree { nodes, root: 0 }
}

impl WorkTree {
    fn add_node(&mut self, bag: Vec<Vertex>, parent: Option<usize>) -> usize {
        self.nodes.push(WorkNode {
            bag,
            children: Vec::new(),
            parent,
            alive: true,
        });
        self.nodes.len() - 1
    }

    fn pre_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(self.nodes[x].children.iter().rev());
        }
        order
    }

    fn replace_child(&mut self, parent: usize, old: usize, new: usize) {
        let slot = self.nodes[parent]
            .children
            .iter_mut()
            .find(|c| **c == old)
            .expect("child present in parent");
        *slot = new;
        self.nodes[new].parent = Some(parent);
    }

    /// Pass 2.
    fn pad_from_parents(&mut self) {
        for x in self.pre_order() {
            let Some(p) = self.nodes[x].parent else { continue };
            let missing = self.nodes[p].bag.len().saturating_sub(self.nodes[x].bag.len());
            if missing == 0 {
                continue;
            }
            let extra: Vec<Vertex> = difference(&self.nodes[p].bag, &self.nodes[x].bag)
                .into_iter()
                .take(missing)
                .collect();
            for v in extra {
                insert_sorted(&mut self.nodes[x].bag, v);
            }
        }
    }

    /// Pass 3.
    fn expand_high_degree(&mut self) {
        for x in self.pre_order() {
            let kids = std::mem::take(&mut self.nodes[x].children);
            if kids.len() < 2 {
                self.nodes[x].children = kids;
                continue;
            }
            let bag = self.nodes[x].bag.clone();
            let holders: Vec<usize> = kids
                .iter()
                .map(|&c| {
                    let holder = self.add_node(bag.clone(), None);
                    self.nodes[holder].children = vec![c];
                    self.nodes[c].parent = Some(holder);
                    holder
                })
                .collect();
            // Left-leaning caterpillar: the deepest join holds the first two
            // holders, each join above adds the next holder on the right.
            let mut left = holders[0];
            for (i, &right) in holders.iter().enumerate().skip(1) {
                let join = if i + 1 == holders.len() {
                    x
                } else {
                    self.add_node(bag.clone(), None)
                };
                self.nodes[join].children = vec![left, right];
                self.nodes[left].parent = Some(join);
                self.nodes[right].parent = Some(join);
                left = join;
            }
        }
    }

    /// Pass 4.
    fn level_join_chains(&mut self) {
        let joins: Vec<usize> = (0..self.nodes.len())
            .filter(|&x| self.nodes[x].alive && self.nodes[x].children.len() == 2)
            .collect();
        for j in joins {
            let target = self.nodes[j].bag.len();
            let mut chain = Vec::new();
            let mut cursor = self.nodes[j].parent;
            while let Some(x) = cursor {
                if self.nodes[x].children.len() != 1 {
                    break;
                }
                chain.push(x);
                cursor = self.nodes[x].parent;
            }
            if cursor.is_none() {
                continue;
            }
            // The last chain node is a caterpillar holder of the upper join and
            // must keep that join's bag.
            chain.pop();
            let mut below = j;
            for x in chain {
                let missing = target.saturating_sub(self.nodes[x].bag.len());
                if missing > 0 {
                    let extra: Vec<Vertex> =
                        difference(&self.nodes[below].bag, &self.nodes[x].bag)
                            .into_iter()
                            .take(missing)
                            .collect();
                    for v in extra {
                        insert_sorted(&mut self.nodes[x].bag, v);
                    }
                }
                below = x;
            }
        }
    }

    /// Pass 5a: removes single-child nodes whose child carries the same bag.
    fn contract_equal_edges(&mut self) {
        for x in self.pre_order().into_iter().rev() {
            if self.nodes[x].children.len() != 1 {
                continue;
            }
            let c = self.nodes[x].children[0];
            if self.nodes[c].bag != self.nodes[x].bag {
                continue;
            }
            match self.nodes[x].parent {
                Some(p) => self.replace_child(p, x, c),
                None => {
                    self.nodes[c].parent = None;
                    self.root = c;
                }
            }
            self.nodes[x].alive = false;
            self.nodes[x].children.clear();
        }
    }

    /// Pass 5b.
    fn expand_edges(&mut self) {
        for x in self.pre_order() {
            if self.nodes[x].children.len() != 1 {
                continue;
            }
            let c = self.nodes[x].children[0];
            let mut forgets = difference(&self.nodes[c].bag, &self.nodes[x].bag);
            forgets.reverse();
            let introduces = difference(&self.nodes[x].bag, &self.nodes[c].bag);
            let mut steps: Vec<(bool, Vertex)> = Vec::new();
            let (mut fi, mut ii) = (0, 0);
            while fi < forgets.len() || ii < introduces.len() {
                if fi < forgets.len() {
                    steps.push((false, forgets[fi]));
                    fi += 1;
                }
                if ii < introduces.len() {
                    steps.push((true, introduces[ii]));
                    ii += 1;
                }
            }
            // Every step but the last creates a node; the last one is x.
            let mut bag = self.nodes[c].bag.clone();
            let mut below = c;
            for &(introduce, v) in &steps[..steps.len().saturating_sub(1)] {
                if introduce {
                    insert_sorted(&mut bag, v);
                } else {
                    remove_sorted(&mut bag, v);
                }
                let id = self.add_node(bag.clone(), None);
                self.nodes[id].children = vec![below];
                self.nodes[below].parent = Some(id);
                below = id;
            }
            self.nodes[x].children = vec![below];
            self.nodes[below].parent = Some(x);
        }
    }

    /// Pass 6.
    fn forget_root(&mut self) {
        let mut bag = self.nodes[self.root].bag.clone();
        while bag.pop().is_some() {
            let id = self.add_node(bag.clone(), None);
            self.nodes[id].children = vec![self.root];
            self.nodes[self.root].parent = Some(id);
            self.root = id;
        }
    }

    /// Renumbers the live nodes in post order and checks niceness.
    fn into_nice(self, n_vertices: usize) -> Result<NiceTreeDecomposition, TdError> {
        let mut order = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((x, next)) = stack.pop() {
            if let Some(&c) = self.nodes[x].children.get(next) {
                stack.push((x, next + 1));
                stack.push((c, 0));
            } else {
                order.push(x);
            }
        }
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (i, &x) in order.iter().enumerate() {
            new_id[x] = i;
        }
        let bags = order.iter().map(|&x| self.nodes[x].bag.clone()).collect();
        let children = order
            .iter()
            .map(|&x| self.nodes[x].children.iter().map(|&c| new_id[c]).collect())
            .collect();
        NiceTreeDecomposition::from_parts(n_vertices, bags, children, new_id[self.root])
    }
}
