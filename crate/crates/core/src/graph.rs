//! Attribute-labeled undirected simple graphs.
//!
//! Nodes are stored sorted by id (byte-wise lexicographic), so a node index
//! order is the same as the id order. Every "smallest id wins" rule in the
//! crate therefore reduces to "smallest index wins".

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node inside a [`Network`]. Indices follow id order.
pub type NodeIdx = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("empty node id")]
    EmptyNodeId,
    #[error("edge references undeclared node `{0}`")]
    UnknownEndpoint(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("node `{node}`: attribute `{attribute}` is not declared in the schema")]
    UndeclaredAttribute { node: String, attribute: String },
    #[error("node `{node}`: attribute `{attribute}` expects a {expected} value")]
    AttributeType {
        node: String,
        attribute: String,
        expected: AttrKind,
    },
    #[error("unknown node index {0}")]
    UnknownNodeId(NodeIdx),
}

/// Declared type of an attribute column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Categorical,
    Integer,
}

impl std::fmt::Display for AttrKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttrKind::Categorical => f.write_str("categorical"),
            AttrKind::Integer => f.write_str("integer"),
        }
    }
}

/// A single attribute value. Missing values are represented by absence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Integer(i64),
    Categorical(String),
}

impl AttrValue {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttrValue::Integer(_) => AttrKind::Integer,
            AttrValue::Categorical(_) => AttrKind::Categorical,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            AttrValue::Categorical(s) => Some(s),
            AttrValue::Integer(_) => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            AttrValue::Integer(v) => Some(*v),
            AttrValue::Categorical(_) => None,
        }
    }
}

pub type Schema = BTreeMap<String, AttrKind>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: AttrValue) -> Self {
        self.attributes.insert(name.into(), value);
        self
    }
}

/// Orientation metadata carried by an edge. Structural operations ignore it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "uv")]
    UToV,
    #[serde(rename = "vu")]
    VToU,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::None => Direction::None,
            Direction::UToV => Direction::VToU,
            Direction::VToU => Direction::UToV,
        }
    }
}

/// An edge declaration as read from input, before deduplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDecl {
    pub u: String,
    pub v: String,
    #[serde(default)]
    pub direction: Direction,
}

impl EdgeDecl {
    pub fn new(u: impl Into<String>, v: impl Into<String>) -> Self {
        Self {
            u: u.into(),
            v: v.into(),
            direction: Direction::None,
        }
    }

    pub fn directed(u: impl Into<String>, v: impl Into<String>) -> Self {
        Self {
            u: u.into(),
            v: v.into(),
            direction: Direction::UToV,
        }
    }
}

/// A stored edge. Always `u < v`; `direction` is relative to that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: NodeIdx,
    pub v: NodeIdx,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct Network {
    schema: Schema,
    nodes: Vec<NodeRecord>,
    index: HashMap<String, NodeIdx>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<NodeIdx>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for Network {}

impl Network {
    /// Builds a network from node records and raw edge declarations.
    ///
    /// Duplicate unordered pairs collapse into one edge, keeping the
    /// direction of the first oriented declaration.
    pub fn build(
        schema: Schema,
        node_records: Vec<NodeRecord>,
        decls: impl IntoIterator<Item = EdgeDecl>,
    ) -> Result<Self, GraphError> {
        let mut nodes = node_records;
        for node in &nodes {
            if node.id.is_empty() {
                return Err(GraphError::EmptyNodeId);
            }
            for (name, value) in &node.attributes {
                match schema.get(name) {
                    None => {
                        return Err(GraphError::UndeclaredAttribute {
                            node: node.id.clone(),
                            attribute: name.clone(),
                        })
                    }
                    Some(&kind) if kind != value.kind() => {
                        return Err(GraphError::AttributeType {
                            node: node.id.clone(),
                            attribute: name.clone(),
                            expected: kind,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        nodes.sort_by(|a, b| a.id.as_bytes().cmp(b.id.as_bytes()));
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GraphError::DuplicateNodeId(w[0].id.clone()));
        }
        let index: HashMap<String, NodeIdx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        let mut merged: BTreeMap<(NodeIdx, NodeIdx), Direction> = BTreeMap::new();
        for decl in decls {
            let u = *index
                .get(&decl.u)
                .ok_or_else(|| GraphError::UnknownEndpoint(decl.u.clone()))?;
            let v = *index
                .get(&decl.v)
                .ok_or_else(|| GraphError::UnknownEndpoint(decl.v.clone()))?;
            if u == v {
                return Err(GraphError::SelfLoop(decl.u));
            }
            let (key, dir) = if u < v {
                ((u, v), decl.direction)
            } else {
                ((v, u), decl.direction.reversed())
            };
            let slot = merged.entry(key).or_insert(Direction::None);
            if *slot == Direction::None {
                *slot = dir;
            }
        }
        let edges = merged
            .into_iter()
            .map(|((u, v), direction)| Edge { u, v, direction })
            .collect();
        Ok(Self::assemble(schema, nodes, index, edges))
    }

    /// Assembles a network from already-validated parts. `nodes` must be
    /// sorted by id and `edges` sorted, simple and with `u < v`.
    fn assemble(
        schema: Schema,
        nodes: Vec<NodeRecord>,
        index: HashMap<String, NodeIdx>,
        edges: Vec<Edge>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            schema,
            nodes,
            index,
            edges,
            adjacency,
        }
    }

    /// Same nodes, different (undirected, simple) edge set.
    pub(crate) fn with_edge_pairs(&self, mut pairs: Vec<(NodeIdx, NodeIdx)>) -> Self {
        for p in &mut pairs {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let edges = pairs
            .into_iter()
            .map(|(u, v)| Edge {
                u,
                v,
                direction: Direction::None,
            })
            .collect();
        Self::assemble(
            self.schema.clone(),
            self.nodes.clone(),
            self.index.clone(),
            edges,
        )
    }

    pub fn empty() -> Self {
        Self::assemble(Schema::new(), Vec::new(), HashMap::new(), Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &NodeRecord {
        &self.nodes[idx]
    }

    pub fn id(&self, idx: NodeIdx) -> &str {
        &self.nodes[idx].id
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, idx: NodeIdx) -> &[NodeIdx] {
        &self.adjacency[idx]
    }

    pub fn degree(&self, idx: NodeIdx) -> usize {
        self.adjacency[idx].len()
    }

    pub fn has_edge(&self, u: NodeIdx, v: NodeIdx) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    pub fn attribute(&self, idx: NodeIdx, name: &str) -> Option<&AttrValue> {
        self.nodes[idx].attributes.get(name)
    }

    /// Edge declarations reproducing this network through [`Network::build`].
    pub fn edge_decls(&self) -> Vec<EdgeDecl> {
        self.edges
            .iter()
            .map(|e| EdgeDecl {
                u: self.id(e.u).to_owned(),
                v: self.id(e.v).to_owned(),
                direction: e.direction,
            })
            .collect()
    }

    /// Per-node degree, in node order. Sums to `2m`.
    pub fn degree_sequence(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Connected components, largest first; equal sizes ordered by smallest id.
    /// Each component lists its nodes in increasing index order.
    pub fn connected_components(&self) -> Vec<Vec<NodeIdx>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        // Discovery order already follows the smallest member, so a stable
        // sort by size keeps the tie rule.
        components.sort_by_key(|c| std::cmp::Reverse(c.len()));
        components
    }

    /// Subgraph induced by `keep`, with full attribute records.
    ///
    /// Node `keep[i]` (in increasing order) becomes index `i` of the result.
    pub fn induced_subgraph<I>(&self, keep: I) -> Result<Network, GraphError>
    where
        I: IntoIterator<Item = NodeIdx>,
    {
        let keep: BTreeSet<NodeIdx> = keep.into_iter().collect();
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.node_count()) {
            return Err(GraphError::UnknownNodeId(bad));
        }
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut nodes = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
            nodes.push(self.nodes[old].clone());
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| remap[e.u] != usize::MAX && remap[e.v] != usize::MAX)
            .map(|e| Edge {
                u: remap[e.u],
                v: remap[e.v],
                direction: e.direction,
            })
            .collect();
        Ok(Self::assemble(self.schema.clone(), nodes, index, edges))
    }

    /// Values taken by a categorical attribute anywhere in the network, sorted.
    pub fn categories(&self, attribute: &str) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .nodes
            .iter()
            .filter_map(|n| n.attributes.get(attribute).and_then(AttrValue::as_category))
            .collect();
        set.into_iter().map(str::to_owned).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(ids: &[&str]) -> Vec<NodeRecord> {
        ids.iter().map(|id| NodeRecord::new(*id)).collect()
    }

    fn net(ids: &[&str], edges: &[(&str, &str)]) -> Network {
        Network::build(
            Schema::new(),
            plain(ids),
            edges.iter().map(|(u, v)| EdgeDecl::new(*u, *v)),
        )
        .unwrap()
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let g = net(&["a", "b", "c"], &[("a", "b"), ("b", "a"), ("b", "c")]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 2));
    }

    #[test]
    fn empty_network() {
        let g = net(&[], &[]);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert!(g.connected_components().is_empty());
        assert!(g.degree_sequence().is_empty());
    }

    #[test]
    fn self_loop_rejected() {
        let err = Network::build(Schema::new(), plain(&["a", "b"]), [EdgeDecl::new("a", "a")])
            .unwrap_err();
        assert_eq!(err, GraphError::SelfLoop("a".into()));
    }

    #[test]
    fn unknown_endpoint_and_duplicate_id() {
        let err =
            Network::build(Schema::new(), plain(&["a"]), [EdgeDecl::new("a", "z")]).unwrap_err();
        assert_eq!(err, GraphError::UnknownEndpoint("z".into()));
        let err = Network::build(Schema::new(), plain(&["a", "a"]), []).unwrap_err();
        assert_eq!(err, GraphError::DuplicateNodeId("a".into()));
        let err = Network::build(Schema::new(), plain(&[""]), []).unwrap_err();
        assert_eq!(err, GraphError::EmptyNodeId);
    }

    #[test]
    fn direction_kept_from_first_oriented_declaration() {
        let g = Network::build(
            Schema::new(),
            plain(&["a", "b"]),
            [
                EdgeDecl::new("a", "b"),
                EdgeDecl::directed("b", "a"),
                EdgeDecl::directed("a", "b"),
            ],
        )
        .unwrap();
        assert_eq!(g.edges()[0].direction, Direction::VToU);
    }

    #[test]
    fn attribute_types_checked() {
        let schema: Schema = [("year".to_string(), AttrKind::Integer)].into();
        let bad = NodeRecord::new("a").with("year", AttrValue::Categorical("1990".into()));
        assert!(matches!(
            Network::build(schema.clone(), vec![bad], []),
            Err(GraphError::AttributeType { .. })
        ));
        let undeclared = NodeRecord::new("a").with("sex", AttrValue::Categorical("f".into()));
        assert!(matches!(
            Network::build(schema, vec![undeclared], []),
            Err(GraphError::UndeclaredAttribute { .. })
        ));
    }

    #[test]
    fn components_path_plus_isolated() {
        let g = net(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c")]);
        assert_eq!(g.connected_components(), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn components_tie_broken_by_smallest_id() {
        let g = net(
            &["a", "b", "c", "d", "e", "f"],
            &[
                ("d", "e"),
                ("e", "f"),
                ("f", "d"),
                ("a", "b"),
                ("b", "c"),
                ("c", "a"),
            ],
        );
        assert_eq!(g.connected_components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn induced_subgraph_cases() {
        let tri = net(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        let sub = tri.induced_subgraph([0, 1]).unwrap();
        assert_eq!((sub.node_count(), sub.edge_count()), (2, 1));
        assert_eq!(tri.induced_subgraph(0..3).unwrap(), tri);

        let star = net(&["p", "q", "r", "x"], &[("x", "p"), ("x", "q"), ("x", "r")]);
        let leaves = star.induced_subgraph([0, 1, 2]).unwrap();
        assert_eq!((leaves.node_count(), leaves.edge_count()), (3, 0));

        assert_eq!(
            tri.induced_subgraph([5]).unwrap_err(),
            GraphError::UnknownNodeId(5)
        );
    }

    #[test]
    fn degree_sequences() {
        let tri = net(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        assert_eq!(tri.degree_sequence(), vec![2, 2, 2]);
        let path = net(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(path.degree_sequence(), vec![1, 2, 1]);
    }

    #[test]
    fn rebuild_from_own_output_is_identity() {
        let g = Network::build(
            Schema::new(),
            plain(&["c", "a", "b"]),
            [EdgeDecl::directed("c", "a"), EdgeDecl::new("a", "b")],
        )
        .unwrap();
        let again = Network::build(g.schema().clone(), g.nodes().to_vec(), g.edge_decls()).unwrap();
        assert_eq!(g, again);
    }
}
