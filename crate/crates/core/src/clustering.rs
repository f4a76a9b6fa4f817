//! Modularity, its maximization, and the coarsen/refine hierarchy.
//!
//! All merge and move decisions compare gains scaled by `2m²`, which turns
//! every ΔQ into an exact integer. Ties are therefore real ties and are
//! resolved by the documented ordering rather than by rounding noise.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{GraphError, Network, NodeIdx};
use crate::seed;

pub type ClusterId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("modularity is undefined on a graph without edges")]
    EmptyGraph,
    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterId),
    #[error("cannot merge cluster {0} with itself")]
    SameCluster(ClusterId),
    #[error("target cluster count {target} must satisfy 1 <= target < {k}")]
    BadTarget { target: usize, k: usize },
    #[error("cluster {0} has no group label")]
    UnlabeledCluster(ClusterId),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Assignment of every node of a scope to exactly one of `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    scope: Vec<NodeIdx>,
    labels: Vec<ClusterId>,
    k: usize,
    modularity: f64,
}

impl Partition {
    /// Validates and stores a partition. `labels[i]` is the cluster of
    /// `scope[i]`; cluster ids must be dense (`0..k`, each used).
    pub fn new(
        net: &Network,
        scope: Vec<NodeIdx>,
        labels: Vec<ClusterId>,
    ) -> Result<Self, ClusterError> {
        if scope.len() != labels.len() {
            return Err(ClusterError::InvalidPartition(format!(
                "{} scope nodes but {} labels",
                scope.len(),
                labels.len()
            )));
        }
        let mut pairs: Vec<(NodeIdx, ClusterId)> = scope.into_iter().zip(labels).collect();
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ClusterError::InvalidPartition(format!(
                "node {} assigned twice",
                w[0].0
            )));
        }
        if let Some(&(bad, _)) = pairs.iter().find(|(n, _)| *n >= net.node_count()) {
            return Err(GraphError::UnknownNodeId(bad).into());
        }
        let (scope, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(ClusterError::InvalidPartition(format!(
                "cluster id {missing} is unused"
            )));
        }
        let mut p = Self {
            scope,
            labels,
            k,
            modularity: 0.0,
        };
        p.modularity = modularity(net, &p)?;
        Ok(p)
    }

    /// Builds a partition from explicit member lists; list `i` becomes cluster `i`.
    pub fn from_clusters(net: &Network, clusters: &[Vec<NodeIdx>]) -> Result<Self, ClusterError> {
        let mut scope = Vec::new();
        let mut labels = Vec::new();
        for (c, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(ClusterError::InvalidPartition(format!(
                    "cluster {c} is empty"
                )));
            }
            for &n in members {
                scope.push(n);
                labels.push(c);
            }
        }
        Self::new(net, scope, labels)
    }

    /// Like [`Partition::new`] but renumbers clusters by their smallest member.
    pub fn canonical(
        net: &Network,
        scope: Vec<NodeIdx>,
        labels: Vec<usize>,
    ) -> Result<Self, ClusterError> {
        let mut pairs: Vec<(NodeIdx, usize)> = scope.into_iter().zip(labels).collect();
        pairs.sort_unstable();
        let mut rename = BTreeMap::new();
        let mut dense = Vec::with_capacity(pairs.len());
        for &(_, l) in &pairs {
            let next = rename.len();
            dense.push(*rename.entry(l).or_insert(next));
        }
        Self::new(net, pairs.into_iter().map(|(n, _)| n).collect(), dense)
    }

    /// Single cluster over all nodes of `net`.
    pub fn whole(net: &Network) -> Result<Self, ClusterError> {
        Self::new(
            net,
            (0..net.node_count()).collect(),
            vec![0; net.node_count()],
        )
    }

    pub fn scope(&self) -> &[NodeIdx] {
        &self.scope
    }

    pub fn labels(&self) -> &[ClusterId] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    pub fn cluster_of(&self, node: NodeIdx) -> Option<ClusterId> {
        self.scope
            .binary_search(&node)
            .ok()
            .map(|pos| self.labels[pos])
    }

    pub fn members(&self, cluster: ClusterId) -> Vec<NodeIdx> {
        self.scope
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == cluster)
            .map(|(&n, _)| n)
            .collect()
    }

    /// Member lists indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<NodeIdx>> {
        let mut out = vec![Vec::new(); self.k];
        for (&n, &l) in self.scope.iter().zip(&self.labels) {
            out[l].push(n);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Content hash of the assignment (hex SHA-256).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (&n, &l) in self.scope.iter().zip(&self.labels) {
            h.update((n as u64).to_le_bytes());
            h.update((l as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Per-node lookup table over all nodes of a network of size `n`.
    fn label_table(&self, n: usize) -> Vec<Option<ClusterId>> {
        let mut table = vec![None; n];
        for (&node, &l) in self.scope.iter().zip(&self.labels) {
            table[node] = Some(l);
        }
        table
    }
}

/// Metagraph of a partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGraph {
    pub sizes: Vec<usize>,
    pub internal: Vec<usize>,
    pub meta_edges: Vec<MetaEdge>,
    /// Edge count of the scoped subgraph.
    pub edge_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaEdge {
    pub a: ClusterId,
    pub b: ClusterId,
    pub weight: usize,
}

impl ClusterGraph {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Total degree of a cluster's members inside the scope.
    pub fn degree(&self, c: ClusterId) -> usize {
        2 * self.internal[c]
            + self
                .meta_edges
                .iter()
                .filter(|e| e.a == c || e.b == c)
                .map(|e| e.weight)
                .sum::<usize>()
    }

    pub fn weight(&self, a: ClusterId, b: ClusterId) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.meta_edges
            .iter()
            .find(|e| e.a == a && e.b == b)
            .map_or(0, |e| e.weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Refine,
    Coarsen,
}

/// One navigation step through the clustering hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyStep {
    pub kind: StepKind,
    /// Fingerprint of the parent partition.
    pub parent: String,
    /// Fingerprint of the child partition.
    pub child: String,
    /// Parent cluster ids that were split or merged.
    pub affected: Vec<ClusterId>,
}

/// Internal edge counts, cluster degrees and `m` of the scoped subgraph.
fn cluster_stats(net: &Network, p: &Partition) -> (Vec<u64>, Vec<u64>, u64) {
    let table = p.label_table(net.node_count());
    let mut internal = vec![0u64; p.k];
    let mut degree = vec![0u64; p.k];
    let mut m = 0u64;
    for e in net.edges() {
        if let (Some(a), Some(b)) = (table[e.u], table[e.v]) {
            m += 1;
            degree[a] += 1;
            degree[b] += 1;
            if a == b {
                internal[a] += 1;
            }
        }
    }
    (internal, degree, m)
}

fn q_from_stats(internal: &[u64], degree: &[u64], m: u64) -> f64 {
    let m = m as f64;
    internal
        .iter()
        .zip(degree)
        .map(|(&e, &d)| {
            let share = d as f64 / (2.0 * m);
            e as f64 / m - share * share
        })
        .sum()
}

/// Newman–Girvan modularity of `p` on the subgraph induced by its scope.
pub fn modularity(net: &Network, p: &Partition) -> Result<f64, ClusterError> {
    let (internal, degree, m) = cluster_stats(net, p);
    if m == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    Ok(q_from_stats(&internal, &degree, m))
}

pub fn build_cluster_graph(net: &Network, p: &Partition) -> ClusterGraph {
    let table = p.label_table(net.node_count());
    let mut internal = vec![0usize; p.k];
    let mut weights: BTreeMap<(ClusterId, ClusterId), usize> = BTreeMap::new();
    let mut m = 0;
    for e in net.edges() {
        if let (Some(a), Some(b)) = (table[e.u], table[e.v]) {
            m += 1;
            if a == b {
                internal[a] += 1;
            } else {
                *weights.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    ClusterGraph {
        sizes: p.sizes(),
        internal,
        meta_edges: weights
            .into_iter()
            .map(|((a, b), weight)| MetaEdge { a, b, weight })
            .collect(),
        edge_count: m,
    }
}

/// Modularity change from merging clusters `a` and `b`.
pub fn delta_q_merge(
    cg: &ClusterGraph,
    m: usize,
    a: ClusterId,
    b: ClusterId,
) -> Result<f64, ClusterError> {
    for c in [a, b] {
        if c >= cg.k() {
            return Err(ClusterError::UnknownCluster(c));
        }
    }
    if a == b {
        return Err(ClusterError::SameCluster(a));
    }
    if m == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let m = m as f64;
    let w = cg.weight(a, b) as f64;
    let da = cg.degree(a) as f64;
    let db = cg.degree(b) as f64;
    Ok(w / m - 2.0 * (da / (2.0 * m)) * (db / (2.0 * m)))
}

/// Merge gain scaled by `2m²`.
fn merge_gain(m: i64, w: i64, da: i64, db: i64) -> i64 {
    2 * m * w - da * db
}

/// Maximizes modularity over all nodes of `net`.
///
/// Starting from singletons, repeatedly merges the adjacent cluster pair with
/// the largest positive gain, then sweeps single-node moves to the best
/// neighboring cluster; both phases alternate until neither improves `Q`.
/// The seed fixes the sweep order and breaks equal-gain ties.
pub fn cluster(net: &Network, seed: u64) -> Result<Partition, ClusterError> {
    if net.edge_count() == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let n = net.node_count();
    let adjacency: Vec<&[NodeIdx]> = (0..n).map(|i| net.neighbors(i)).collect();
    let rank = seed::ranks(n, seed);
    let labels = Optimizer::new(&adjacency, net.edge_count() as i64, &rank).run();
    Partition::canonical(net, (0..n).collect(), labels)
}

/// Clusters the subgraph induced by `scope` and expresses the result in
/// `net`'s indices.
pub fn cluster_scope(
    net: &Network,
    scope: &[NodeIdx],
    seed: u64,
) -> Result<Partition, ClusterError> {
    let mut scope = scope.to_vec();
    scope.sort_unstable();
    scope.dedup();
    let sub = net.induced_subgraph(scope.iter().copied())?;
    let local = cluster(&sub, seed)?;
    // Sub-network index i is scope[i] (both sorted by id).
    Partition::canonical(net, scope, local.labels().to_vec())
}

struct Optimizer<'a> {
    adjacency: &'a [&'a [NodeIdx]],
    m: i64,
    rank: &'a [usize],
    /// Nodes in sweep order.
    order: Vec<NodeIdx>,
    label: Vec<usize>,
    /// Tie-break key of each cluster label: smallest member rank when last rebuilt.
    key: Vec<usize>,
}

impl<'a> Optimizer<'a> {
    fn new(adjacency: &'a [&'a [NodeIdx]], m: i64, rank: &'a [usize]) -> Self {
        let n = adjacency.len();
        let mut order: Vec<NodeIdx> = (0..n).collect();
        order.sort_by_key(|&i| rank[i]);
        Self {
            adjacency,
            m,
            rank,
            order,
            label: (0..n).collect(),
            key: rank.to_vec(),
        }
    }

    fn run(mut self) -> Vec<usize> {
        loop {
            let merged = self.merge_phase();
            let moved = self.move_phase();
            if !merged && !moved {
                return self.label;
            }
        }
    }

    fn node_degree(&self, i: NodeIdx) -> i64 {
        self.adjacency[i].len() as i64
    }

    fn merge_phase(&mut self) -> bool {
        let n = self.adjacency.len();
        let mut members: Vec<Vec<NodeIdx>> = vec![Vec::new(); n];
        for &i in &self.order {
            members[self.label[i]].push(i);
        }
        let mut alive: Vec<bool> = members.iter().map(|m| !m.is_empty()).collect();
        for (c, list) in members.iter().enumerate() {
            if let Some(&first) = list.first() {
                self.key[c] = self.rank[first];
            }
        }
        let mut degree = vec![0i64; n];
        let mut links: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); n];
        for u in 0..n {
            let cu = self.label[u];
            degree[cu] += self.node_degree(u);
            for &v in self.adjacency[u] {
                let cv = self.label[v];
                if cu != cv {
                    *links[cu].entry(cv).or_default() += 1;
                }
            }
        }
        let mut version = vec![0u32; n];
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<_>,
                    key: &[usize],
                    version: &[u32],
                    a: usize,
                    b: usize,
                    gain: i64| {
            let pair = (key[a].min(key[b]), key[a].max(key[b]));
            heap.push((gain, Reverse(pair), a, b, version[a], version[b]));
        };
        for a in 0..n {
            for (&b, &w) in &links[a] {
                if a < b {
                    push(
                        &mut heap,
                        &self.key,
                        &version,
                        a,
                        b,
                        merge_gain(self.m, w, degree[a], degree[b]),
                    );
                }
            }
        }

        let mut changed = false;
        while let Some((gain, _, a, b, va, vb)) = heap.pop() {
            if !alive[a] || !alive[b] || version[a] != va || version[b] != vb {
                continue;
            }
            if gain <= 0 {
                break;
            }
            let (keep, gone) = if self.key[a] < self.key[b] {
                (a, b)
            } else {
                (b, a)
            };
            alive[gone] = false;
            degree[keep] += degree[gone];
            let gone_links = std::mem::take(&mut links[gone]);
            for (x, w) in gone_links {
                if x == keep {
                    continue;
                }
                links[x].remove(&gone);
                *links[x].entry(keep).or_default() += w;
                *links[keep].entry(x).or_default() += w;
            }
            links[keep].remove(&gone);
            let moved = std::mem::take(&mut members[gone]);
            for &i in &moved {
                self.label[i] = keep;
            }
            members[keep].extend(moved);
            version[keep] += 1;
            for (&x, &w) in &links[keep] {
                push(
                    &mut heap,
                    &self.key,
                    &version,
                    keep,
                    x,
                    merge_gain(self.m, w, degree[keep], degree[x]),
                );
            }
            changed = true;
        }
        changed
    }

    fn move_phase(&mut self) -> bool {
        let n = self.adjacency.len();
        let mut degree = vec![0i64; n];
        for i in 0..n {
            degree[self.label[i]] += self.node_degree(i);
        }
        let mut changed = false;
        let mut counts: Vec<(usize, i64)> = Vec::new();
        loop {
            let mut moved = false;
            for idx in 0..self.order.len() {
                let i = self.order[idx];
                let di = self.node_degree(i);
                if di == 0 {
                    continue;
                }
                counts.clear();
                for &j in self.adjacency[i] {
                    let c = self.label[j];
                    match counts.iter_mut().find(|(cl, _)| *cl == c) {
                        Some(slot) => slot.1 += 1,
                        None => counts.push((c, 1)),
                    }
                }
                let own = self.label[i];
                let w_own = counts.iter().find(|(c, _)| *c == own).map_or(0, |s| s.1);
                let own_rest = degree[own] - di;
                let mut best: Option<(i64, usize)> = None;
                for &(c, w) in &counts {
                    if c == own {
                        continue;
                    }
                    let gain = 2 * self.m * (w - w_own) - di * (degree[c] - own_rest);
                    if gain <= 0 {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((g, b)) => gain > g || (gain == g && self.key[c] < self.key[b]),
                    };
                    if better {
                        best = Some((gain, c));
                    }
                }
                if let Some((_, target)) = best {
                    degree[own] -= di;
                    degree[target] += di;
                    self.label[i] = target;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            changed = true;
        }
        changed
    }
}

/// Greedy merge schedule over a cluster graph: each step joins the adjacent
/// pair with the largest ΔQ (ties to the smallest id pair; the merged cluster
/// keeps the smaller id). Falls back to non-adjacent pairs when none remain.
struct GreedyMerger {
    m: i64,
    alive: BTreeSet<ClusterId>,
    degree: Vec<i64>,
    internal: Vec<i64>,
    links: Vec<BTreeMap<ClusterId, i64>>,
    root: Vec<ClusterId>,
}

impl GreedyMerger {
    fn new(cg: &ClusterGraph) -> Self {
        let k = cg.k();
        let mut degree: Vec<i64> = cg.internal.iter().map(|&e| 2 * e as i64).collect();
        let mut links = vec![BTreeMap::new(); k];
        for e in &cg.meta_edges {
            degree[e.a] += e.weight as i64;
            degree[e.b] += e.weight as i64;
            links[e.a].insert(e.b, e.weight as i64);
            links[e.b].insert(e.a, e.weight as i64);
        }
        Self {
            m: cg.edge_count as i64,
            alive: (0..k).collect(),
            degree,
            internal: cg.internal.iter().map(|&e| e as i64).collect(),
            links,
            root: (0..k).collect(),
        }
    }

    fn best_pair(&self) -> Option<(ClusterId, ClusterId)> {
        fn consider(
            best: &mut Option<(i64, ClusterId, ClusterId)>,
            gain: i64,
            a: ClusterId,
            b: ClusterId,
        ) {
            let better = match *best {
                None => true,
                Some((g, ba, bb)) => gain > g || (gain == g && (a, b) < (ba, bb)),
            };
            if better {
                *best = Some((gain, a, b));
            }
        }
        let mut best = None;
        for &a in &self.alive {
            for (&b, &w) in self.links[a].range(a + 1..) {
                consider(
                    &mut best,
                    merge_gain(self.m, w, self.degree[a], self.degree[b]),
                    a,
                    b,
                );
            }
        }
        if best.is_none() {
            let alive: Vec<_> = self.alive.iter().copied().collect();
            for (i, &a) in alive.iter().enumerate() {
                for &b in &alive[i + 1..] {
                    consider(
                        &mut best,
                        merge_gain(self.m, 0, self.degree[a], self.degree[b]),
                        a,
                        b,
                    );
                }
            }
        }
        best.map(|(_, a, b)| (a, b))
    }

    /// Merges the best pair; returns it. `None` when one cluster remains.
    fn step(&mut self) -> Option<(ClusterId, ClusterId)> {
        let (a, b) = self.best_pair()?;
        self.alive.remove(&b);
        let w = self.links[a].remove(&b).unwrap_or(0);
        self.links[b].remove(&a);
        self.internal[a] += self.internal[b] + w;
        self.degree[a] += self.degree[b];
        for (x, wx) in std::mem::take(&mut self.links[b]) {
            self.links[x].remove(&b);
            *self.links[x].entry(a).or_default() += wx;
            *self.links[a].entry(x).or_default() += wx;
        }
        for r in &mut self.root {
            if *r == b {
                *r = a;
            }
        }
        Some((a, b))
    }

    fn modularity(&self) -> f64 {
        let m = self.m as f64;
        self.alive
            .iter()
            .map(|&c| {
                let share = self.degree[c] as f64 / (2.0 * m);
                self.internal[c] as f64 / m - share * share
            })
            .sum()
    }
}

/// Greedily merges clusters until `target_k` remain.
pub fn coarsen(
    net: &Network,
    p: &Partition,
    target_k: usize,
) -> Result<(Partition, HierarchyStep), ClusterError> {
    if target_k < 1 || target_k >= p.k {
        return Err(ClusterError::BadTarget {
            target: target_k,
            k: p.k,
        });
    }
    let cg = build_cluster_graph(net, p);
    if cg.edge_count == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let mut merger = GreedyMerger::new(&cg);
    let mut affected = BTreeSet::new();
    for _ in target_k..p.k {
        let (a, b) = merger.step().expect("more than target_k clusters remain");
        affected.insert(a);
        affected.insert(b);
    }
    // Surviving roots keep their relative order.
    let survivors: Vec<ClusterId> = merger.alive.iter().copied().collect();
    let labels = p
        .labels
        .iter()
        .map(|&l| {
            survivors
                .binary_search(&merger.root[l])
                .expect("root is a survivor")
        })
        .collect();
    let child = Partition::new(net, p.scope.clone(), labels)?;
    let affected = (0..p.k)
        .filter(|c| affected.contains(&merger.root[*c]))
        .collect();
    let step = HierarchyStep {
        kind: StepKind::Coarsen,
        parent: p.fingerprint(),
        child: child.fingerprint(),
        affected,
    };
    Ok((child, step))
}

/// Modularity after each greedy merge, from `p.k` clusters down to one.
/// Entry `i` holds `(k, Q)` with `k = p.k - i`.
pub fn coarsening_profile(net: &Network, p: &Partition) -> Result<Vec<(usize, f64)>, ClusterError> {
    let cg = build_cluster_graph(net, p);
    if cg.edge_count == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let mut merger = GreedyMerger::new(&cg);
    let mut profile = vec![(p.k, merger.modularity())];
    while merger.step().is_some() {
        profile.push((merger.alive.len(), merger.modularity()));
    }
    Ok(profile)
}

/// Re-clusters each target cluster on its induced subgraph in isolation.
///
/// Children of a target take consecutive ids at the target's position;
/// other clusters keep their relative order. Targets whose subgraph has no
/// edges are left whole.
pub fn refine(
    net: &Network,
    p: &Partition,
    targets: &BTreeSet<ClusterId>,
    seed: u64,
) -> Result<(Partition, HierarchyStep), ClusterError> {
    if let Some(&bad) = targets.iter().find(|&&c| c >= p.k) {
        return Err(ClusterError::UnknownCluster(bad));
    }
    let clusters = p.clusters();
    let mut new_clusters: Vec<Vec<NodeIdx>> = Vec::with_capacity(p.k);
    for (c, members) in clusters.into_iter().enumerate() {
        if !targets.contains(&c) {
            new_clusters.push(members);
            continue;
        }
        let sub = net.induced_subgraph(members.iter().copied())?;
        if sub.edge_count() == 0 {
            new_clusters.push(members);
            continue;
        }
        let sub_p = cluster(&sub, seed)?;
        // Sub-network index i is members[i] (both sorted by id).
        new_clusters.extend(
            sub_p
                .clusters()
                .into_iter()
                .map(|local| local.into_iter().map(|i| members[i]).collect()),
        );
    }
    let child = Partition::from_clusters(net, &new_clusters)?;
    let step = HierarchyStep {
        kind: StepKind::Refine,
        parent: p.fingerprint(),
        child: child.fingerprint(),
        affected: targets.iter().copied().collect(),
    };
    Ok((child, step))
}

/// Merges clusters sharing a label. Returns the grouped partition and its
/// labels; group `i` carries `labels[i]` (labels sorted).
pub fn merge_into_groups(
    net: &Network,
    p: &Partition,
    groups: &BTreeMap<ClusterId, String>,
) -> Result<(Partition, Vec<String>), ClusterError> {
    if let Some(&bad) = groups.keys().find(|&&c| c >= p.k) {
        return Err(ClusterError::UnknownCluster(bad));
    }
    let names: Vec<String> = groups
        .values()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut group_of = Vec::with_capacity(p.k);
    for c in 0..p.k {
        let label = groups.get(&c).ok_or(ClusterError::UnlabeledCluster(c))?;
        group_of.push(names.binary_search(label).expect("label collected above"));
    }
    let labels = p.labels.iter().map(|&l| group_of[l]).collect();
    Ok((Partition::new(net, p.scope.clone(), labels)?, names))
}
