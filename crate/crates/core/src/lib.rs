//! Visual mining of large attribute-labeled networks.
//!
//! The crate clusters a network by maximal modularity, gates refinements and
//! coarsenings against degree-preserving random graphs, and computes the
//! statistical overlays and layouts that a cluster-metagraph display needs.

pub mod clustering;
pub mod generate;
pub mod graph;
pub mod io;
pub mod layout;
pub mod seed;
pub mod session;
pub mod significance;
pub mod stats;

pub use clustering::{
    build_cluster_graph, cluster, cluster_scope, coarsen, coarsening_profile, delta_q_merge,
    merge_into_groups, modularity, refine, ClusterError, ClusterGraph, ClusterId, HierarchyStep,
    MetaEdge, Partition, StepKind,
};
pub use graph::{
    AttrKind, AttrValue, Direction, Edge, EdgeDecl, GraphError, Network, NodeIdx, NodeRecord,
    Schema,
};
