//! Degree-preserving null model and the significance gate.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clustering::{cluster, ClusterError, ClusterId, Partition};
use crate::graph::{Network, NodeIdx};
use crate::seed;

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_SWAPS_PER_EDGE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NullModelError {
    #[error("rewiring needs at least two edges, found {0}")]
    TooFewEdges(usize),
    #[error("{0} must be at least 1")]
    BadParameter(&'static str),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Parameters of a null-model run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NullConfig {
    pub replicates: usize,
    pub seed: u64,
    pub swaps_per_edge: usize,
}

impl NullConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelSummary {
    pub config: NullConfig,
    /// Maximal modularity found on each rewired replicate, in replicate order.
    pub values: Vec<f64>,
    pub threshold: f64,
    /// Hash of the source per-node degree sequence.
    pub degree_fingerprint: String,
}

/// Counter shared with long-running computations.
#[derive(Debug, Default)]
pub struct Progress {
    done: AtomicUsize,
    total: AtomicUsize,
}

impl Progress {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_total(&self, n: usize) {
        self.total.fetch_add(n, Ordering::Relaxed);
    }

    pub fn tick(&self) {
        self.done.fetch_add(1, Ordering::Relaxed);
    }

    /// `(done, total)`.
    pub fn snapshot(&self) -> (usize, usize) {
        (
            self.done.load(Ordering::Relaxed),
            self.total.load(Ordering::Relaxed),
        )
    }
}

pub fn degree_fingerprint(net: &Network) -> String {
    let mut h = Sha256::new();
    for d in net.degree_sequence() {
        h.update((d as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Hash of the full structure (degrees and edge list).
pub fn graph_fingerprint(net: &Network) -> String {
    let mut h = Sha256::new();
    h.update((net.node_count() as u64).to_le_bytes());
    for e in net.edges() {
        h.update((e.u as u64).to_le_bytes());
        h.update((e.v as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Uniform double-edge swaps. Swaps creating a self-loop or a duplicate edge
/// are skipped; exactly `swaps_per_edge * m` swaps are attempted.
pub fn rewire(net: &Network, seed: u64, swaps_per_edge: usize) -> Result<Network, NullModelError> {
    let m = net.edge_count();
    if m < 2 {
        return Err(NullModelError::TooFewEdges(m));
    }
    if swaps_per_edge == 0 {
        return Err(NullModelError::BadParameter("swaps_per_edge"));
    }
    let mut edges: Vec<(NodeIdx, NodeIdx)> = net.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut present: HashSet<(NodeIdx, NodeIdx)> = edges.iter().copied().collect();
    let key = |a: NodeIdx, b: NodeIdx| if a < b { (a, b) } else { (b, a) };
    let mut rng = seed::rng(seed);
    for _ in 0..swaps_per_edge * m {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        // (a,b),(c,d) -> (a,d),(c,b)
        if a == d || c == b {
            continue;
        }
        let first = key(a, d);
        let second = key(c, b);
        if present.contains(&first) || present.contains(&second) {
            continue;
        }
        present.remove(&edges[i]);
        present.remove(&edges[j]);
        present.insert(first);
        present.insert(second);
        edges[i] = first;
        edges[j] = second;
    }
    Ok(net.with_edge_pairs(edges))
}

/// Maximal modularity over `replicates` rewired copies of `net`.
pub fn null_threshold(
    net: &Network,
    config: NullConfig,
) -> Result<NullModelSummary, NullModelError> {
    null_threshold_with_progress(net, config, None)
}

pub fn null_threshold_with_progress(
    net: &Network,
    config: NullConfig,
    progress: Option<&Progress>,
) -> Result<NullModelSummary, NullModelError> {
    if config.replicates == 0 {
        return Err(NullModelError::BadParameter("replicates"));
    }
    if net.edge_count() == 0 {
        return Err(ClusterError::EmptyGraph.into());
    }
    let values = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let replicate_seed = seed::mix(config.seed, i as u64);
            let random = rewire(net, replicate_seed, config.swaps_per_edge)?;
            let q = cluster(&random, replicate_seed)?.modularity();
            if let Some(p) = progress {
                p.tick();
            }
            Ok(q)
        })
        .collect::<Result<Vec<f64>, NullModelError>>()?;
    let threshold = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NullModelSummary {
        config,
        values,
        threshold,
        degree_fingerprint: degree_fingerprint(net),
    })
}

/// Strictly above the null threshold.
pub fn is_significant(q_observed: f64, summary: &NullModelSummary) -> bool {
    q_observed > summary.threshold
}

/// Outcome of testing one cluster for significant substructure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub cluster: ClusterId,
    pub accepted: bool,
    /// Number of clusters found in isolation (1 when not split).
    pub k_sub: usize,
    /// Modularity of the isolated clustering, if the subgraph has edges.
    pub q_sub: Option<f64>,
    /// Null model of the isolated subgraph; only run when `k_sub >= 2`.
    pub summary: Option<NullModelSummary>,
    /// Sub-clusters as lists of node indices of the parent network.
    #[serde(skip)]
    pub split: Vec<Vec<NodeIdx>>,
}

/// Clusters `target` in isolation and accepts the split iff it has at least
/// two clusters and beats the null threshold of the isolated subgraph.
pub fn gate_refinement(
    net: &Network,
    p: &Partition,
    target: ClusterId,
    config: NullConfig,
) -> Result<GateVerdict, NullModelError> {
    gate_refinement_with_progress(net, p, target, config, None)
}

pub fn gate_refinement_with_progress(
    net: &Network,
    p: &Partition,
    target: ClusterId,
    config: NullConfig,
    progress: Option<&Progress>,
) -> Result<GateVerdict, NullModelError> {
    gate_refinement_using(net, p, target, config.seed, |sub| {
        null_threshold_with_progress(sub, config, progress)
    })
}

/// Gate with the null summary of the target's subgraph supplied by `null`,
/// which is only called when the subgraph splits into two or more clusters.
pub fn gate_refinement_using(
    net: &Network,
    p: &Partition,
    target: ClusterId,
    seed: u64,
    null: impl FnOnce(&Network) -> Result<NullModelSummary, NullModelError>,
) -> Result<GateVerdict, NullModelError> {
    if target >= p.k() {
        return Err(ClusterError::UnknownCluster(target).into());
    }
    let members = p.members(target);
    let sub = net
        .induced_subgraph(members.iter().copied())
        .map_err(ClusterError::from)?;
    let rejected = |q_sub| GateVerdict {
        cluster: target,
        accepted: false,
        k_sub: 1,
        q_sub,
        summary: None,
        split: vec![members.clone()],
    };
    if sub.edge_count() < 2 {
        return Ok(rejected(None));
    }
    let sub_p = cluster(&sub, seed)?;
    if sub_p.k() < 2 {
        return Ok(rejected(Some(sub_p.modularity())));
    }
    let summary = null(&sub)?;
    Ok(GateVerdict {
        cluster: target,
        accepted: is_significant(sub_p.modularity(), &summary),
        k_sub: sub_p.k(),
        q_sub: Some(sub_p.modularity()),
        summary: Some(summary),
        split: sub_p
            .clusters()
            .into_iter()
            .map(|local| local.into_iter().map(|i| members[i]).collect())
            .collect(),
    })
}
