//! Shared inputs for the criterion benches.

use netmine_core::generate::{synthetic_epidemic, SyntheticSpec};
use netmine_core::{cluster_scope, Network, NodeIdx, Partition};

/// The synthetic dataset with its giant component and a seed-7 clustering.
pub struct Fixture {
    pub net: Network,
    pub giant: Vec<NodeIdx>,
    pub partition: Partition,
}

pub fn synthetic(block_size: usize) -> Fixture {
    let spec = SyntheticSpec {
        block_size,
        ..SyntheticSpec::default()
    };
    let (net, _) = synthetic_epidemic(&spec);
    let giant = net.connected_components().remove(0);
    let partition = cluster_scope(&net, &giant, 7).expect("synthetic giant component has edges");
    Fixture {
        net,
        giant,
        partition,
    }
}
