//! Dataset ingestion and canonical export of every artifact.

mod dataset;
mod json;
mod svg;
mod tables;

use thiserror::Error;

use crate::clustering::ClusterError;
use crate::graph::GraphError;

pub use dataset::{read_dataset, read_dataset_from, DatasetManifest};
pub use json::{
    canonical_json, from_document, network_from_json, network_to_json, partition_from_json,
    partition_to_json, to_document, NetworkDoc, PartitionDoc, FORMAT_VERSION,
};
pub use svg::render_svg;
pub use tables::{
    components_csv, geodesic_csv, overlay_csv, partition_csv, profile_csv, yearly_csv,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: {message}")]
    SchemaMismatch { file: String, message: String },
    #[error("{file}:{line}: {source}")]
    Graph {
        file: String,
        line: u64,
        source: GraphError,
    },
    #[error("invalid document: {0}")]
    Json(String),
    #[error("unsupported format version `{0}`")]
    FormatVersion(String),
    #[error("expected a `{expected}` document, found `{found}`")]
    WrongKind { expected: String, found: String },
    #[error("artifact `{0}` is not available")]
    MissingArtifact(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Export flavours of a session or pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportKind {
    Json,
    Svg,
    Csv,
}

impl std::str::FromStr for ExportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            "csv" | "csv-tables" => Ok(Self::Csv),
            other => Err(format!(
                "unknown export kind `{other}` (expected json, svg or csv)"
            )),
        }
    }
}
