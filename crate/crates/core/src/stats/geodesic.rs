use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{require_kind, StatsError};
use crate::clustering::{ClusterId, Partition};
use crate::graph::{AttrKind, AttrValue, Network, NodeIdx};

const UNREACHED: u32 = u32::MAX;

/// Breadth-first distances from `source`. With `allowed`, paths only visit
/// nodes whose flag is set (the source must be allowed). Unreached nodes
/// get `None`.
pub fn bfs_distances(net: &Network, source: NodeIdx, allowed: Option<&[bool]>) -> Vec<Option<u32>> {
    raw_bfs(net, source, allowed)
        .into_iter()
        .map(|d| (d != UNREACHED).then_some(d))
        .collect()
}

fn raw_bfs(net: &Network, source: NodeIdx, allowed: Option<&[bool]>) -> Vec<u32> {
    let mut dist = vec![UNREACHED; net.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in net.neighbors(u) {
            if dist[v] == UNREACHED && allowed.is_none_or(|a| a[v]) {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Dense all-pairs shortest path lengths by repeated BFS.
pub fn all_pairs_distances(net: &Network) -> Vec<Vec<Option<u32>>> {
    (0..net.node_count())
        .into_par_iter()
        .map(|s| bfs_distances(net, s, None))
        .collect()
}

/// Symmetric table of mean shortest-path lengths between label classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTable {
    pub labels: Vec<String>,
    /// `None` where no connected pair exists.
    pub means: Vec<Vec<Option<f64>>>,
    pub pair_counts: Vec<Vec<u64>>,
    /// Mean over all distinct connected pairs of the scope.
    pub global_mean: Option<f64>,
    pub global_pairs: u64,
}

/// How paths between two groups may travel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathScope {
    /// Only through members of the two groups being compared.
    #[default]
    UnionOfGroups,
    /// Through any node of the partition scope; only endpoints are restricted.
    WholeScope,
}

/// Distance sums and pair counts; integer so reductions are order-free.
#[derive(Clone)]
struct Accumulator {
    sums: Vec<u64>,
    counts: Vec<u64>,
    global_sum: u64,
    global_count: u64,
    width: usize,
}

impl Accumulator {
    fn new(width: usize) -> Self {
        Self {
            sums: vec![0; width * width],
            counts: vec![0; width * width],
            global_sum: 0,
            global_count: 0,
            width,
        }
    }

    fn add_cell(&mut self, a: usize, b: usize, d: u32) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.sums[a * self.width + b] += d as u64;
        self.counts[a * self.width + b] += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (x, y) in self.sums.iter_mut().zip(other.sums) {
            *x += y;
        }
        for (x, y) in self.counts.iter_mut().zip(other.counts) {
            *x += y;
        }
        self.global_sum += other.global_sum;
        self.global_count += other.global_count;
        self
    }

    fn into_table(self, labels: Vec<String>) -> GeodesicTable {
        let w = self.width;
        let mut means = vec![vec![None; w]; w];
        let mut pair_counts = vec![vec![0; w]; w];
        for a in 0..w {
            for b in a..w {
                let count = self.counts[a * w + b];
                let mean = (count > 0).then(|| self.sums[a * w + b] as f64 / count as f64);
                means[a][b] = mean;
                means[b][a] = mean;
                pair_counts[a][b] = count;
                pair_counts[b][a] = count;
            }
        }
        GeodesicTable {
            labels,
            means,
            pair_counts,
            global_mean: (self.global_count > 0)
                .then(|| self.global_sum as f64 / self.global_count as f64),
            global_pairs: self.global_count,
        }
    }
}

fn scope_mask(net: &Network, scope: &[NodeIdx]) -> Vec<bool> {
    let mut mask = vec![false; net.node_count()];
    for &n in scope {
        mask[n] = true;
    }
    mask
}

/// Sums over unordered distinct pairs of `scope` connected inside `scope`.
/// `class[n]` assigns table cells; nodes without a class count only globally.
fn accumulate_pairs(
    net: &Network,
    scope: &[NodeIdx],
    class: &[Option<usize>],
    width: usize,
) -> Accumulator {
    let mask = scope_mask(net, scope);
    scope
        .par_iter()
        .fold(
            || Accumulator::new(width),
            |mut acc, &s| {
                let dist = raw_bfs(net, s, Some(&mask));
                for &t in scope {
                    if t <= s || dist[t] == UNREACHED {
                        continue;
                    }
                    acc.global_sum += dist[t] as u64;
                    acc.global_count += 1;
                    if let (Some(a), Some(b)) = (class[s], class[t]) {
                        acc.add_cell(a, b, dist[t]);
                    }
                }
                acc
            },
        )
        .reduce(|| Accumulator::new(width), Accumulator::merge)
}

/// Mean geodesic distance per pair of attribute categories, paths restricted
/// to the scope-induced subgraph.
pub fn geodesic_table_by_attribute(
    net: &Network,
    scope: &[NodeIdx],
    attribute: &str,
) -> Result<GeodesicTable, StatsError> {
    require_kind(net, attribute, AttrKind::Categorical)?;
    let scope: Vec<NodeIdx> = scope
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels: Vec<String> = scope
        .iter()
        .filter_map(|&n| net.attribute(n, attribute).and_then(AttrValue::as_category))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let mut class = vec![None; net.node_count()];
    for &n in &scope {
        if let Some(v) = net.attribute(n, attribute).and_then(AttrValue::as_category) {
            class[n] = labels.binary_search_by(|l| l.as_str().cmp(v)).ok();
        }
    }
    Ok(accumulate_pairs(net, &scope, &class, labels.len()).into_table(labels))
}

/// Mean geodesic distance between groups of clusters.
///
/// For groups A and B, distances are measured on the subgraph induced by
/// A ∪ B (or by the whole scope, per `paths`), over unordered pairs with one
/// endpoint in each group (both in A on the diagonal).
pub fn geodesic_table_by_groups(
    net: &Network,
    p: &Partition,
    groups: &BTreeMap<ClusterId, String>,
    paths: PathScope,
) -> Result<GeodesicTable, StatsError> {
    if let Some(&bad) = groups.keys().find(|&&c| c >= p.k()) {
        return Err(StatsError::UnknownCluster(bad));
    }
    let labels: Vec<String> = groups
        .values()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut group_of_cluster = Vec::with_capacity(p.k());
    for c in 0..p.k() {
        let label = groups.get(&c).ok_or(StatsError::UnlabeledCluster(c))?;
        group_of_cluster.push(labels.binary_search(label).expect("label collected"));
    }
    let mut class = vec![None; net.node_count()];
    let mut members: Vec<Vec<NodeIdx>> = vec![Vec::new(); labels.len()];
    for (&n, &c) in p.scope().iter().zip(p.labels()) {
        let g = group_of_cluster[c];
        class[n] = Some(g);
        members[g].push(n);
    }
    let width = labels.len();

    let mut acc = match paths {
        PathScope::WholeScope => accumulate_pairs(net, p.scope(), &class, width),
        PathScope::UnionOfGroups => {
            let mut acc = Accumulator::new(width);
            for a in 0..width {
                for b in a..width {
                    let mut union = members[a].clone();
                    if a != b {
                        union.extend(&members[b]);
                    }
                    let mask = scope_mask(net, &union);
                    let part = members[a]
                        .par_iter()
                        .fold(
                            || Accumulator::new(width),
                            |mut local, &s| {
                                let dist = raw_bfs(net, s, Some(&mask));
                                for &t in &members[b] {
                                    if (a == b && t <= s) || dist[t] == UNREACHED {
                                        continue;
                                    }
                                    local.add_cell(a, b, dist[t]);
                                }
                                local
                            },
                        )
                        .reduce(|| Accumulator::new(width), Accumulator::merge);
                    acc = acc.merge(part);
                }
            }
            acc
        }
    };
    if paths == PathScope::UnionOfGroups {
        let global = accumulate_pairs(net, p.scope(), &vec![None; net.node_count()], 0);
        acc.global_sum = global.global_sum;
        acc.global_count = global.global_count;
    }
    Ok(acc.into_table(labels))
}
