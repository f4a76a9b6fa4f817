//! Statistical overlays on partitions: chi-squared goodness of fit against
//! the scope-wide distribution, geodesic distance tables, and per-year
//! class distributions.

mod chi2;
mod geodesic;
mod overlay;
mod yearly;

use thiserror::Error;

use crate::clustering::ClusterId;
use crate::graph::{AttrKind, Network};

pub use chi2::{chi_squared_upper_tail, gamma_q, ln_gamma};
pub use geodesic::{
    all_pairs_distances, bfs_distances, geodesic_table_by_attribute, geodesic_table_by_groups,
    GeodesicTable, PathScope,
};
pub use overlay::{
    attribute_distribution, auto_groups, chi_squared_overlay, chi_squared_overlay_with,
    CategoricalDistribution, ClusterTest, GlobalReference, TestOverlay, LOW_EXPECTED_COUNT,
};
pub use yearly::{yearly_distribution, ClassSource, YearRow, YearlyTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{attribute}` has no tested category `{category}`")]
    UnknownCategory { attribute: String, category: String },
    #[error("attribute `{0}` is not categorical")]
    NotCategorical(String),
    #[error("attribute `{0}` is not integer-typed")]
    NotIntegerAttribute(String),
    #[error(
        "attribute `{attribute}` takes {categories} value(s) in scope; at least two are needed"
    )]
    DegenerateGlobal {
        attribute: String,
        categories: usize,
    },
    #[error("cluster {0} has no group label")]
    UnlabeledCluster(ClusterId),
    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterId),
}

fn require_kind(net: &Network, attribute: &str, kind: AttrKind) -> Result<(), StatsError> {
    match net.schema().get(attribute) {
        None => Err(StatsError::UnknownAttribute(attribute.to_owned())),
        Some(&k) if k == kind => Ok(()),
        Some(_) => Err(match kind {
            AttrKind::Categorical => StatsError::NotCategorical(attribute.to_owned()),
            AttrKind::Integer => StatsError::NotIntegerAttribute(attribute.to_owned()),
        }),
    }
}
