use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{Exact, Field, Real};
use crate::matrix::{SparseSymmetricMatrix, Vertex};
use crate::treedecomp::TreeDecomposition;

/// Parameters of the random instance generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceConfig {
    pub n: usize,
    /// Width bound of the generated decomposition.
    pub k: usize,
    /// Share of the diagonal that is zero, rounded up to whole entries.
    pub zero_diagonal_fraction: f64,
    /// Probability that a pair covered by a bag carries a nonzero entry.
    pub edge_probability: f64,
    /// Integer entries are drawn from `-max_entry..=max_entry` without zero.
    pub max_entry: i64,
    /// Redundant nodes spliced into the decomposition (subset leaves,
    /// duplicated bags and subdivided edges).
    pub noise_nodes: usize,
    /// Root the decomposition at a random node instead of node 1.
    pub random_root: bool,
}

impl InstanceConfig {
    pub fn new(n: usize, k: usize) -> Self {
        InstanceConfig {
            n,
            k,
            zero_diagonal_fraction: 0.5,
            edge_probability: 0.8,
            max_entry: 3,
            noise_nodes: 0,
            random_root: false,
        }
    }
}

/// A matrix together with a decomposition of its underlying graph.
#[derive(Debug, Clone)]
pub struct Instance<F: Field> {
    pub matrix: SparseSymmetricMatrix<F>,
    pub td: TreeDecomposition,
}

/// Random exact instance with default parameters.
pub fn random_instance(n: usize, k: usize, seed: u64) -> Instance<Exact> {
    random_instance_with(&InstanceConfig::new(n, k), seed)
}

/// Random exact instance: small nonzero integers on a random partial
/// k-tree, vertices labeled in random order.
pub fn random_instance_with(config: &InstanceConfig, seed: u64) -> Instance<Exact> {
    let max = config.max_entry.max(1);
    build(Exact, config, seed, |rng| {
        let x = rng.gen_range(1..=max);
        let x = if rng.gen_bool(0.5) { -x } else { x };
        BigRational::from_integer(x.into())
    })
}

/// Random real instance whose entries are uniform in `(-1, 1)`; no diagonal
/// entry is forced to zero.
pub fn random_real_instance(n: usize, k: usize, seed: u64) -> Instance<Real> {
    let mut config = InstanceConfig::new(n, k);
    config.zero_diagonal_fraction = 0.0;
    build(Real::default(), &config, seed, |rng| rng.gen_range(-1.0..1.0))
}

/// A noisy, arbitrarily rooted decomposition of a random instance, meant as
/// input to nicification.
pub fn random_decomposition(n: usize, k: usize, seed: u64) -> Instance<Exact> {
    let mut config = InstanceConfig::new(n, k);
    config.noise_nodes = n / 2 + 1;
    config.random_root = true;
    random_instance_with(&config, seed)
}

fn build<F: Field>(
    field: F,
    config: &InstanceConfig,
    seed: u64,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> F::Elem,
) -> Instance<F> {
    let (n, k) = (config.n, config.k);
    assert!(n >= 1, "instances need at least one vertex");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Vertex> = (1..=n).collect();
    labels.shuffle(&mut rng);

    let first = (k + 1).min(n);
    let mut bags: Vec<Vec<Vertex>> = vec![labels[..first].to_vec()];
    let mut edges = Vec::new();
    let mut pairs: Vec<(Vertex, Vertex)> = Vec::new();
    for (i, &u) in labels[..first].iter().enumerate() {
        for &v in &labels[..i] {
            pairs.push((u, v));
        }
    }
    for &v in &labels[first..] {
        let parent = rng.gen_range(0..bags.len());
        let cap = k.min(bags[parent].len()).max(1);
        let size = if rng.gen_bool(0.5) { cap } else { rng.gen_range(1..=cap) };
        let mut bag: Vec<Vertex> = bags[parent].choose_multiple(&mut rng, size).copied().collect();
        pairs.extend(bag.iter().map(|&u| (u, v)));
        bag.push(v);
        bags.push(bag);
        edges.push((parent, bags.len() - 1));
    }

    for _ in 0..config.noise_nodes {
        add_noise(&mut rng, &mut bags, &mut edges);
    }
    let root = config.random_root.then(|| rng.gen_range(0..bags.len()));

    let mut triples = Vec::new();
    for (u, v) in pairs {
        if rng.gen_bool(config.edge_probability) {
            triples.push((u, v, sample(&mut rng)));
        }
    }
    let zeros = (config.zero_diagonal_fraction * n as f64).ceil() as usize;
    let mut order: Vec<Vertex> = (1..=n).collect();
    order.shuffle(&mut rng);
    for &v in &order[zeros.min(n)..] {
        triples.push((v, v, sample(&mut rng)));
    }
    let matrix = SparseSymmetricMatrix::from_entries(field, n, triples)
        .expect("generated entries are in range and unique");
    Instance {
        matrix,
        td: TreeDecomposition::new(n, bags, edges, root),
    }
}

/// Adds one node without changing the width or the covered pairs.
fn add_noise(rng: &mut ChaCha8Rng, bags: &mut Vec<Vec<Vertex>>, edges: &mut Vec<(usize, usize)>) {
    let new = bags.len();
    match rng.gen_range(0..3) {
        0 if !edges.is_empty() => {
            // subdivide an edge with a bag between the two endpoints' bags
            let e = rng.gen_range(0..edges.len());
            let (a, b) = edges[e];
            let cap = bags[a].len().max(bags[b].len());
            let mut bag: Vec<Vertex> = bags[a]
                .iter()
                .copied()
                .filter(|v| bags[b].contains(v))
                .collect();
            let mut extra: Vec<Vertex> = bags[a]
                .iter()
                .chain(&bags[b])
                .copied()
                .filter(|v| !bag.contains(v))
                .collect();
            extra.sort_unstable();
            extra.dedup();
            extra.shuffle(rng);
            let room = cap - bag.len();
            let take = rng.gen_range(0..=room.min(extra.len()));
            bag.extend(&extra[..take]);
            bags.push(bag);
            edges[e] = (a, new);
            edges.push((new, b));
        }
        1 => {
            let x = rng.gen_range(0..new);
            bags.push(bags[x].clone());
            edges.push((x, new));
        }
        _ => {
            let x = rng.gen_range(0..new);
            let size = rng.gen_range(0..=bags[x].len());
            let bag = bags[x].choose_multiple(rng, size).copied().collect();
            bags.push(bag);
            edges.push((x, new));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treedecomp::nicify;

    #[test]
    fn small_instance_validates() {
        let inst = random_instance(6, 2, 7);
        let width = inst.td.validate(&inst.matrix.underlying_graph()).unwrap();
        assert!(width <= 2);
        assert_eq!(inst.matrix.order(), 6);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = random_instance(10, 3, 42);
        let b = random_instance(10, 3, 42);
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.td, b.td);
        assert_ne!(random_instance(10, 3, 43).matrix, a.matrix);
    }

    #[test]
    fn all_zero_diagonal() {
        let mut config = InstanceConfig::new(12, 3);
        config.zero_diagonal_fraction = 1.0;
        let inst = random_instance_with(&config, 3);
        assert!((1..=12).all(|v| inst.matrix.diagonal_entry(v).is_none()));
    }

    #[test]
    fn noisy_decompositions_stay_valid() {
        for seed in 0..50 {
            let inst = random_decomposition(20, 3, seed);
            let g = inst.matrix.underlying_graph();
            assert!(inst.td.validate(&g).unwrap() <= 3, "seed {seed}");
            nicify(&inst.td).unwrap();
        }
    }

    #[test]
    fn real_entries_in_range() {
        let inst = random_real_instance(20, 3, 1);
        assert!(inst.matrix.entries().all(|(_, _, x)| x.abs() < 1.0));
        assert!(inst.td.validate(&inst.matrix.underlying_graph()).is_ok());
    }

    #[test]
    fn single_vertex() {
        let inst = random_instance(1, 1, 0);
        assert_eq!(inst.td.bags, vec![vec![1]]);
    }
}
