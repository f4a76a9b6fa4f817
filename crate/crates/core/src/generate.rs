//! Seeded synthetic networks: planted partitions and an epidemic-like
//! labeled dataset used by the examples, benches and golden runs.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{AttrKind, AttrValue, Direction, EdgeDecl, Network, NodeRecord, Schema};
use crate::seed;

/// Stochastic block model with independent edges.
///
/// Node ids are `b{block}_{index}` zero-padded, so block members are
/// contiguous in id order. Returns the network and each node's block.
pub fn planted_partition(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (Network, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let mut ids = Vec::new();
    let mut block = Vec::new();
    for (b, &size) in block_sizes.iter().enumerate() {
        for i in 0..size {
            ids.push(format!("b{b}_{i:04}"));
            block.push(b);
        }
    }
    let mut decls = Vec::new();
    for u in 0..ids.len() {
        for v in u + 1..ids.len() {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                decls.push(EdgeDecl::new(ids[u].clone(), ids[v].clone()));
            }
        }
    }
    let nodes = ids.into_iter().map(NodeRecord::new).collect();
    let net = Network::build(Schema::new(), nodes, decls).expect("generated graph is valid");
    (net, block)
}

/// Erdős–Rényi graph `G(n, p)` with ids `n{index}`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Network {
    let mut rng = seed::rng(seed);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
    let mut decls = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                decls.push(EdgeDecl::new(ids[u].clone(), ids[v].clone()));
            }
        }
    }
    let nodes = ids.into_iter().map(NodeRecord::new).collect();
    Network::build(Schema::new(), nodes, decls).expect("generated graph is valid")
}

/// Ground truth written next to the synthetic dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticTruth {
    pub nodes: usize,
    pub edges: usize,
    pub oriented_edges: usize,
    /// Planted block of every node id ("A", "B" or "clique").
    pub block: BTreeMap<String, String>,
    pub orientation_counts: BTreeMap<String, usize>,
}

/// Parameters of the epidemic-like synthetic network.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub block_size: usize,
    pub clique_size: usize,
    /// Mean within-block degree.
    pub mean_degree: f64,
    pub cross_edges: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            block_size: 290,
            clique_size: 12,
            mean_degree: 2.6,
            cross_edges: 6,
            seed: 7,
        }
    }
}

/// Orientation shares per block, in the order msm, het, woman.
const ORIENTATION_SHARES: [(&str, [f64; 3]); 2] =
    [("A", [0.72, 0.10, 0.18]), ("B", [0.18, 0.30, 0.52])];
const ORIENTATIONS: [&str; 3] = ["msm", "het", "woman"];

fn pick(rng: &mut ChaCha8Rng, shares: &[f64; 3]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, s) in shares.iter().enumerate() {
        acc += s;
        if x < acc {
            return i;
        }
    }
    shares.len() - 1
}

/// Two sparse planted communities with skewed categorical attributes, a
/// small clique hanging off block A, detection years and partial edge
/// orientation. Some attribute values are left missing.
pub fn synthetic_epidemic(spec: &SyntheticSpec) -> (Network, SyntheticTruth) {
    let mut rng = seed::rng(spec.seed);
    let schema: Schema = [
        ("gender".to_string(), AttrKind::Categorical),
        ("orientation".to_string(), AttrKind::Categorical),
        ("year".to_string(), AttrKind::Integer),
    ]
    .into();

    let mut nodes = Vec::new();
    let mut truth_block = BTreeMap::new();
    let mut orientation_counts = BTreeMap::new();
    let mut groups: Vec<Vec<String>> = Vec::new();
    let blocks = [
        ("A", spec.block_size, 1986),
        ("B", spec.block_size, 1992),
        ("clique", spec.clique_size, 1990),
    ];
    for (bi, &(name, size, first_year)) in blocks.iter().enumerate() {
        let mut ids = Vec::with_capacity(size);
        for i in 0..size {
            let id = format!("p{}{i:04}", ["a", "b", "c"][bi]);
            let shares = if name == "B" {
                ORIENTATION_SHARES[1].1
            } else {
                ORIENTATION_SHARES[0].1
            };
            let mut record = NodeRecord::new(id.clone());
            if rng.random_bool(0.98) {
                let o = if name == "clique" {
                    0
                } else {
                    pick(&mut rng, &shares)
                };
                let orientation = ORIENTATIONS[o];
                *orientation_counts
                    .entry(orientation.to_string())
                    .or_insert(0) += 1;
                record = record.with("orientation", AttrValue::Categorical(orientation.into()));
                let gender = if orientation == "woman" { "f" } else { "m" };
                record = record.with("gender", AttrValue::Categorical(gender.into()));
            }
            if rng.random_bool(0.97) {
                let year = first_year + rng.random_range(0..13);
                record = record.with("year", AttrValue::Integer(year));
            }
            truth_block.insert(id.clone(), name.to_string());
            nodes.push(record);
            ids.push(id);
        }
        groups.push(ids);
    }

    let mut decls = Vec::new();
    let mut orient = |rng: &mut ChaCha8Rng, mut d: EdgeDecl| {
        if rng.random_bool(0.55) {
            d.direction = if rng.random_bool(0.5) {
                Direction::UToV
            } else {
                Direction::VToU
            };
        }
        decls.push(d);
    };
    for group in &groups[..2] {
        let n = group.len();
        // A random spanning tree keeps each block connected, then extra
        // uniform edges bring the mean degree up.
        for i in 1..n {
            let j = rng.random_range(0..i);
            orient(&mut rng, EdgeDecl::new(group[i].clone(), group[j].clone()));
        }
        let extra = ((spec.mean_degree * n as f64 / 2.0) as usize).saturating_sub(n - 1);
        for _ in 0..extra {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                orient(&mut rng, EdgeDecl::new(group[i].clone(), group[j].clone()));
            }
        }
    }
    let clique = &groups[2];
    for i in 0..clique.len() {
        for j in i + 1..clique.len() {
            orient(
                &mut rng,
                EdgeDecl::new(clique[i].clone(), clique[j].clone()),
            );
        }
    }
    if !clique.is_empty() {
        let anchor = rng.random_range(0..groups[0].len());
        orient(
            &mut rng,
            EdgeDecl::new(clique[0].clone(), groups[0][anchor].clone()),
        );
    }
    for _ in 0..spec.cross_edges {
        let i = rng.random_range(0..groups[0].len());
        let j = rng.random_range(0..groups[1].len());
        orient(
            &mut rng,
            EdgeDecl::new(groups[0][i].clone(), groups[1][j].clone()),
        );
    }
    // A few small detached pairs outside the giant component.
    for k in 0..4 {
        let u = format!("q{k:02}a");
        let v = format!("q{k:02}b");
        nodes.push(NodeRecord::new(u.clone()));
        nodes.push(NodeRecord::new(v.clone()));
        truth_block.insert(u.clone(), "detached".into());
        truth_block.insert(v.clone(), "detached".into());
        decls.push(EdgeDecl::new(u, v));
    }

    let net = Network::build(schema, nodes, decls).expect("generated dataset is valid");
    let truth = SyntheticTruth {
        nodes: net.node_count(),
        edges: net.edge_count(),
        oriented_edges: net
            .edges()
            .iter()
            .filter(|e| e.direction != Direction::None)
            .count(),
        block: truth_block,
        orientation_counts,
    };
    (net, truth)
}
