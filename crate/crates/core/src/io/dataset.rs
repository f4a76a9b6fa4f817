use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::graph::{
    AttrKind, AttrValue, Direction, EdgeDecl, GraphError, Network, NodeRecord, Schema,
};

/// Describes a node table and an edge table on disk.
///
/// Relative paths are resolved against the manifest's own directory when
/// loaded with [`read_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(default = "default_id_column")]
    pub node_id_column: String,
    #[serde(default = "default_source_column")]
    pub source_column: String,
    #[serde(default = "default_target_column")]
    pub target_column: String,
    #[serde(default)]
    pub direction_column: Option<String>,
    #[serde(default)]
    pub attributes: Schema,
    #[serde(default)]
    pub year_attribute: Option<String>,
    /// `","` or `"\t"`; inferred from the file extension when absent.
    #[serde(default)]
    pub delimiter: Option<String>,
}

fn default_id_column() -> String {
    "id".into()
}
fn default_source_column() -> String {
    "source".into()
}
fn default_target_column() -> String {
    "target".into()
}

impl DatasetManifest {
    pub fn new(nodes: impl Into<PathBuf>, edges: impl Into<PathBuf>) -> Self {
        Self {
            nodes: nodes.into(),
            edges: edges.into(),
            node_id_column: default_id_column(),
            source_column: default_source_column(),
            target_column: default_target_column(),
            direction_column: None,
            attributes: Schema::new(),
            year_attribute: None,
            delimiter: None,
        }
    }

    /// Parses a manifest file and resolves its table paths.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let mut manifest: Self = serde_json::from_str(&text).map_err(|e| IoError::Parse {
            file: path.display().to_string(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        manifest.nodes = base.join(&manifest.nodes);
        manifest.edges = base.join(&manifest.edges);
        Ok(manifest)
    }

    fn delimiter_for(&self, file: &Path) -> Result<u8, IoError> {
        match self.delimiter.as_deref() {
            Some(",") => Ok(b','),
            Some("\t") => Ok(b'\t'),
            Some(other) => Err(IoError::SchemaMismatch {
                file: "manifest".into(),
                message: format!("unsupported delimiter {other:?}"),
            }),
            None if file.extension().is_some_and(|e| e == "tsv" || e == "tab") => Ok(b'\t'),
            None => Ok(b','),
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        if let Some(year) = &self.year_attribute {
            if self.attributes.get(year) != Some(&AttrKind::Integer) {
                return Err(IoError::SchemaMismatch {
                    file: "manifest".into(),
                    message: format!("year attribute `{year}` must be declared as integer"),
                });
            }
        }
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Reads the manifest at `path` and the tables it names.
pub fn read_dataset(path: &Path) -> Result<Network, IoError> {
    let manifest = DatasetManifest::load(path)?;
    let nodes = File::open(&manifest.nodes).map_err(|e| io_error(&manifest.nodes, e))?;
    let edges = File::open(&manifest.edges).map_err(|e| io_error(&manifest.edges, e))?;
    read_dataset_from(&manifest, nodes, edges)
}

/// Reads a dataset from already-open node and edge tables.
pub fn read_dataset_from(
    manifest: &DatasetManifest,
    nodes: impl Read,
    edges: impl Read,
) -> Result<Network, IoError> {
    manifest.validate()?;
    let node_file = manifest.nodes.display().to_string();
    let edge_file = manifest.edges.display().to_string();

    let mut reader = table_reader(nodes, manifest.delimiter_for(&manifest.nodes)?);
    let header = headers(&mut reader, &node_file)?;
    let id_col = column(&header, &manifest.node_id_column, &node_file)?;
    let attr_cols: Vec<(&String, AttrKind, usize)> = manifest
        .attributes
        .iter()
        .map(|(name, &kind)| Ok((name, kind, column(&header, name, &node_file)?)))
        .collect::<Result<_, IoError>>()?;

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&node_file, e))?;
        let line = line_of(&row);
        let id = row.get(id_col).unwrap_or("").trim().to_owned();
        if id.is_empty() {
            return Err(graph_error(&node_file, line, GraphError::EmptyNodeId));
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(graph_error(
                &node_file,
                line,
                GraphError::DuplicateNodeId(id),
            ));
        }
        let mut record = NodeRecord::new(id);
        for &(name, kind, col) in &attr_cols {
            let raw = row.get(col).unwrap_or("").trim();
            if raw.is_empty() || raw == "NA" {
                continue;
            }
            let value = match kind {
                AttrKind::Categorical => AttrValue::Categorical(raw.to_owned()),
                AttrKind::Integer => {
                    AttrValue::Integer(raw.parse().map_err(|_| IoError::Parse {
                        file: node_file.clone(),
                        line,
                        message: format!("attribute `{name}`: `{raw}` is not an integer"),
                    })?)
                }
            };
            record.attributes.insert(name.clone(), value);
        }
        records.push(record);
    }

    let mut reader = table_reader(edges, manifest.delimiter_for(&manifest.edges)?);
    let header = headers(&mut reader, &edge_file)?;
    let source_col = column(&header, &manifest.source_column, &edge_file)?;
    let target_col = column(&header, &manifest.target_column, &edge_file)?;
    let direction_col = manifest
        .direction_column
        .as_ref()
        .map(|c| column(&header, c, &edge_file))
        .transpose()?;
    let mut decls = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&edge_file, e))?;
        let line = line_of(&row);
        let u = row.get(source_col).unwrap_or("").trim();
        let v = row.get(target_col).unwrap_or("").trim();
        for end in [u, v] {
            if !seen.contains_key(end) {
                return Err(graph_error(
                    &edge_file,
                    line,
                    GraphError::UnknownEndpoint(end.to_owned()),
                ));
            }
        }
        if u == v {
            return Err(graph_error(
                &edge_file,
                line,
                GraphError::SelfLoop(u.to_owned()),
            ));
        }
        let direction = match direction_col.map(|c| row.get(c).unwrap_or("").trim()) {
            None | Some("") => Direction::None,
            Some("uv") => Direction::UToV,
            Some("vu") => Direction::VToU,
            Some(other) => {
                return Err(IoError::Parse {
                    file: edge_file.clone(),
                    line,
                    message: format!("direction must be empty, `uv` or `vu`, found `{other}`"),
                })
            }
        };
        decls.push(EdgeDecl {
            u: u.to_owned(),
            v: v.to_owned(),
            direction,
        });
    }
    Network::build(manifest.attributes.clone(), records, decls).map_err(|e| IoError::Graph {
        file: node_file,
        line: 0,
        source: e,
    })
}

fn table_reader<R: Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn headers<R: Read>(reader: &mut csv::Reader<R>, file: &str) -> Result<Vec<String>, IoError> {
    let header = reader.headers().map_err(|e| csv_error(file, e))?;
    if header.is_empty() {
        return Err(IoError::Parse {
            file: file.to_owned(),
            line: 1,
            message: "missing header row".into(),
        });
    }
    Ok(header.iter().map(|h| h.trim().to_owned()).collect())
}

fn column(header: &[String], name: &str, file: &str) -> Result<usize, IoError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IoError::SchemaMismatch {
            file: file.to_owned(),
            message: format!("declared column `{name}` is not in the header"),
        })
}

fn line_of(row: &csv::StringRecord) -> u64 {
    row.position().map_or(0, |p| p.line())
}

fn graph_error(file: &str, line: u64, source: GraphError) -> IoError {
    IoError::Graph {
        file: file.to_owned(),
        line,
        source,
    }
}

fn csv_error(file: &str, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    IoError::Parse {
        file: file.to_owned(),
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        let mut m = DatasetManifest::new("nodes.csv", "edges.csv");
        m.attributes.insert("kind".into(), AttrKind::Categorical);
        m.attributes.insert("year".into(), AttrKind::Integer);
        m.direction_column = Some("direction".into());
        m.year_attribute = Some("year".into());
        m
    }

    const NODES: &str = "id,kind,year\na,X,1990\nb,NA,\nc,Y,1991\n";

    fn read(nodes: &str, edges: &str) -> Result<Network, IoError> {
        read_dataset_from(&manifest(), nodes.as_bytes(), edges.as_bytes())
    }

    #[test]
    fn reads_tables_with_missing_values() {
        let net = read(NODES, "source,target,direction\na,b,uv\nb,c,\n").unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 2);
        assert!(net.attribute(1, "kind").is_none());
        assert!(net.attribute(1, "year").is_none());
        assert_eq!(net.attribute(2, "year"), Some(&AttrValue::Integer(1991)));
        assert_eq!(net.edges()[0].direction, Direction::UToV);
    }

    #[test]
    fn duplicate_id_names_line() {
        let err = read(
            "id,kind,year\na,X,1\nb,X,2\na,Y,3\n",
            "source,target,direction\n",
        )
        .unwrap_err();
        assert_eq!(
            err,
            IoError::Graph {
                file: "nodes.csv".into(),
                line: 4,
                source: GraphError::DuplicateNodeId("a".into())
            }
        );
    }

    #[test]
    fn unknown_endpoint_names_line() {
        let err = read(NODES, "source,target,direction\na,b,\na,z,\n").unwrap_err();
        assert_eq!(
            err,
            IoError::Graph {
                file: "edges.csv".into(),
                line: 3,
                source: GraphError::UnknownEndpoint("z".into())
            }
        );
    }

    #[test]
    fn rejects_bad_rows() {
        let err = read(NODES, "source,target,direction\na,a,\n").unwrap_err();
        assert!(matches!(
            err,
            IoError::Graph {
                line: 2,
                source: GraphError::SelfLoop(_),
                ..
            }
        ));
        let err = read(NODES, "source,target,direction\na,b,up\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
        let err = read("id,kind,year\na,X,old\n", "source,target,direction\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
        let err = read("id,kind\na,X\n", "source,target,direction\n").unwrap_err();
        assert!(matches!(err, IoError::SchemaMismatch { .. }));
        let err = read(NODES, "source,target,direction\na,b\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
    }

    #[test]
    fn tab_delimited_by_extension() {
        let mut m = DatasetManifest::new("n.tsv", "e.tsv");
        m.attributes.insert("kind".into(), AttrKind::Categorical);
        let net = read_dataset_from(
            &m,
            "id\tkind\na\tX\nb\tY\n".as_bytes(),
            "source\ttarget\na\tb\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn year_must_be_integer() {
        let mut m = manifest();
        m.attributes.insert("year".into(), AttrKind::Categorical);
        assert!(matches!(
            read_dataset_from(&m, NODES.as_bytes(), "source,target\n".as_bytes()),
            Err(IoError::SchemaMismatch { .. })
        ));
    }
}
