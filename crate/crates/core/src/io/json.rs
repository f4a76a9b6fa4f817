use std::collections::BTreeMap;
use std::fmt::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IoError;
use crate::clustering::{ClusterId, Partition};
use crate::graph::{EdgeDecl, Network, NodeRecord, Schema};

pub const FORMAT_VERSION: &str = "1";

/// Renders a JSON value with object keys sorted byte-wise, two-space
/// indentation and a trailing newline. Numbers keep serde_json's shortest
/// round-trip rendering.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Array(items) if !items.is_empty() => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(out, item, depth + 1);
            }
            newline(out, depth);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push('{');
            for (i, (key, item)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write!(out, "{}: ", Value::String(key.clone())).unwrap();
                write_value(out, item, depth + 1);
            }
            newline(out, depth);
            out.push('}');
        }
        other => write!(out, "{other}").unwrap(),
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Wraps `value` as `{"data": ..., "format_version": "1", "kind": kind}`.
pub fn to_document<T: Serialize + ?Sized>(kind: &str, value: &T) -> String {
    let data = serde_json::to_value(value).expect("artifact serializes to JSON");
    let doc = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "data": data,
    });
    canonical_json(&doc)
}

/// Parses a document written by [`to_document`], checking version and kind.
pub fn from_document<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T, IoError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    let version = doc
        .get("format_version")
        .and_then(Value::as_str)
        .unwrap_or("");
    if version != FORMAT_VERSION {
        return Err(IoError::FormatVersion(version.to_owned()));
    }
    let found = doc.get("kind").and_then(Value::as_str).unwrap_or("");
    if found != kind {
        return Err(IoError::WrongKind {
            expected: kind.to_owned(),
            found: found.to_owned(),
        });
    }
    let data = doc
        .get_mut("data")
        .map(Value::take)
        .ok_or_else(|| IoError::Json("missing `data`".into()))?;
    serde_json::from_value(data).map_err(|e| IoError::Json(e.to_string()))
}

/// Serialized form of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub schema: Schema,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeDecl>,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        Self {
            schema: net.schema().clone(),
            nodes: net.nodes().to_vec(),
            edges: net.edge_decls(),
        }
    }
}

pub fn network_to_json(net: &Network) -> String {
    to_document("network", &NetworkDoc::from(net))
}

pub fn network_from_json(text: &str) -> Result<Network, IoError> {
    let doc: NetworkDoc = from_document("network", text)?;
    Network::build(doc.schema, doc.nodes, doc.edges).map_err(|e| IoError::Graph {
        file: "network".into(),
        line: 0,
        source: e,
    })
}

/// Serialized form of a [`Partition`]: member ids per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub k: usize,
    pub modularity: f64,
    pub fingerprint: String,
    pub sizes: Vec<usize>,
    pub clusters: Vec<Vec<String>>,
}

impl PartitionDoc {
    pub fn new(net: &Network, p: &Partition) -> Self {
        Self {
            k: p.k(),
            modularity: p.modularity(),
            fingerprint: p.fingerprint(),
            sizes: p.sizes(),
            clusters: p
                .clusters()
                .iter()
                .map(|members| members.iter().map(|&n| net.id(n).to_owned()).collect())
                .collect(),
        }
    }

    /// Cluster id of every member, keyed by node id.
    pub fn assignments(&self) -> BTreeMap<&str, ClusterId> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, ids)| ids.iter().map(move |id| (id.as_str(), c)))
            .collect()
    }

    pub fn to_partition(&self, net: &Network) -> Result<Partition, IoError> {
        let clusters = self
            .clusters
            .iter()
            .map(|ids| {
                ids.iter()
                    .map(|id| {
                        net.index_of(id)
                            .ok_or_else(|| IoError::Json(format!("unknown node id `{id}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let p = Partition::from_clusters(net, &clusters)?;
        if p.fingerprint() != self.fingerprint {
            return Err(IoError::Json(
                "partition fingerprint does not match its members".into(),
            ));
        }
        Ok(p)
    }
}

pub fn partition_to_json(net: &Network, p: &Partition) -> String {
    to_document("partition", &PartitionDoc::new(net, p))
}

pub fn partition_from_json(net: &Network, text: &str) -> Result<Partition, IoError> {
    from_document::<PartitionDoc>("partition", text)?.to_partition(net)
}
