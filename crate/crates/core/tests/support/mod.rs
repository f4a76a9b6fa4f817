//! Reference implementations used as test oracles. Deliberately naive.
#![allow(dead_code)]

use netmine_core::{AttrKind, AttrValue, EdgeDecl, Network, NodeRecord, Schema};

pub fn node_id(i: usize) -> String {
    format!("v{i:03}")
}

pub fn graph(n: usize, edges: &[(usize, usize)]) -> Network {
    let nodes = (0..n).map(|i| NodeRecord::new(node_id(i))).collect();
    Network::build(
        Schema::new(),
        nodes,
        edges
            .iter()
            .map(|&(u, v)| EdgeDecl::new(node_id(u), node_id(v))),
    )
    .unwrap()
}

/// Same as [`graph`] with one categorical attribute `label`.
pub fn labeled_graph(labels: &[&str], edges: &[(usize, usize)]) -> Network {
    let schema: Schema = [("label".to_string(), AttrKind::Categorical)].into();
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            NodeRecord::new(node_id(i)).with("label", AttrValue::Categorical((*l).into()))
        })
        .collect();
    Network::build(
        schema,
        nodes,
        edges
            .iter()
            .map(|&(u, v)| EdgeDecl::new(node_id(u), node_id(v))),
    )
    .unwrap()
}

pub fn two_triangles_bridge() -> Network {
    graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
}

pub fn clique_chain() -> Network {
    graph(
        9,
        &[
            (0, 1),
            (1, 2),
            (2, 0),
            (3, 4),
            (4, 5),
            (5, 3),
            (6, 7),
            (7, 8),
            (8, 6),
            (2, 3),
            (5, 6),
        ],
    )
}

pub fn adjacency(net: &Network) -> Vec<Vec<u8>> {
    let n = net.node_count();
    let mut a = vec![vec![0u8; n]; n];
    for e in net.edges() {
        a[e.u][e.v] = 1;
        a[e.v][e.u] = 1;
    }
    a
}

/// Q = 1/2m Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j) over all node pairs.
pub fn brute_modularity(net: &Network, labels: &[usize]) -> f64 {
    let a = adjacency(net);
    let n = a.len();
    let k: Vec<f64> = a
        .iter()
        .map(|row| row.iter().map(|&x| x as f64).sum())
        .collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] as f64 - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, n, cur, max.max(c), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0];
    rec(1, n, &mut cur, 0, &mut out);
    out
}

pub fn exhaustive_optimum(net: &Network) -> f64 {
    set_partitions(net.node_count())
        .iter()
        .map(|labels| brute_modularity(net, labels))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut uf = UnionFind::new(n);
    for &(u, v) in edges {
        uf.union(u, v);
    }
    (0..n).all(|i| uf.find(i) == uf.find(0))
}

/// Every connected labeled simple graph on `n` nodes, as edge lists.
pub fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect::<Vec<_>>()
        })
        .filter(|edges| n > 1 && !edges.is_empty() && is_connected(n, edges))
        .collect()
}

pub fn floyd_warshall(net: &Network) -> Vec<Vec<Option<u32>>> {
    let n = net.node_count();
    const INF: u64 = u64::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in net.edges() {
        d[e.u][e.v] = 1;
        d[e.v][e.u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| (x < INF).then_some(x as u32))
                .collect()
        })
        .collect()
}

/// Relabels arbitrary cluster labels to first-appearance order.
pub fn densify(labels: &[usize]) -> Vec<usize> {
    let mut seen = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = seen.len();
            *seen.entry(*l).or_insert(next)
        })
        .collect()
}

/// Pearson chi-squared statistic and residuals of observed counts against
/// the given expected proportions.
pub fn pearson(observed: &[u64], proportions: &[f64]) -> (f64, Vec<f64>) {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut residuals = Vec::new();
    for (&o, &p) in observed.iter().zip(proportions) {
        let e = n as f64 * p;
        let r = (o as f64 - e) / e.sqrt();
        stat += r * r;
        residuals.push(r);
    }
    (stat, residuals)
}
