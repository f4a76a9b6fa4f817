mod support;

use std::fs;

use netmine_core::generate::{random_graph, synthetic_epidemic, SyntheticSpec};
use netmine_core::io::{
    canonical_json, from_document, network_from_json, network_to_json, partition_from_json,
    partition_to_json, read_dataset, to_document, IoError,
};
use netmine_core::stats::{
    chi_squared_overlay, geodesic_table_by_attribute, GeodesicTable, TestOverlay,
};
use netmine_core::{cluster, cluster_scope, Partition};
use proptest::prelude::*;
use serde_json::json;

#[test]
fn network_round_trips() {
    let (net, _) = synthetic_epidemic(&SyntheticSpec::default());
    let text = network_to_json(&net);
    let back = network_from_json(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(network_to_json(&back), text);
}

#[test]
fn partition_round_trips() {
    let (net, _) = synthetic_epidemic(&SyntheticSpec::default());
    let giant = net.connected_components().remove(0);
    let p = cluster_scope(&net, &giant, 7).unwrap();
    let text = partition_to_json(&net, &p);
    let back = partition_from_json(&net, &text).unwrap();
    assert_eq!(back.clusters(), p.clusters());
    assert_eq!(back.fingerprint(), p.fingerprint());
    assert_eq!(partition_to_json(&net, &back), text);
}

#[test]
fn tampered_partition_is_rejected() {
    let net = random_graph(20, 0.2, 1);
    let p = cluster(&net, 1).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&partition_to_json(&net, &p)).unwrap();
    doc["data"]["fingerprint"] = json!("00");
    assert!(partition_from_json(&net, &doc.to_string()).is_err());
}

#[test]
fn overlay_and_geodesic_tables_round_trip() {
    let (net, _) = synthetic_epidemic(&SyntheticSpec::default());
    let giant = net.connected_components().remove(0);
    let p = cluster_scope(&net, &giant, 7).unwrap();
    let overlay = chi_squared_overlay(&net, &p, "orientation").unwrap();
    let text = to_document("overlay", &overlay);
    assert_eq!(
        from_document::<TestOverlay>("overlay", &text).unwrap(),
        overlay
    );
    let table = geodesic_table_by_attribute(&net, p.scope(), "orientation").unwrap();
    let text = to_document("geodesics", &table);
    assert_eq!(
        from_document::<GeodesicTable>("geodesics", &text).unwrap(),
        table
    );
}

#[test]
fn documents_check_kind_and_version() {
    let text = to_document("overlay", &json!({"a": 1}));
    assert!(matches!(
        from_document::<serde_json::Value>("partition", &text),
        Err(IoError::WrongKind { .. })
    ));
    let bumped = text.replace("\"1\"", "\"9\"");
    assert!(from_document::<serde_json::Value>("overlay", &bumped).is_err());
}

#[test]
fn canonical_json_sorts_keys_and_ends_with_newline() {
    let text = canonical_json(&json!({"b": [1, {"z": 0, "a": 0.1}], "a": null}));
    assert_eq!(text, "{\n  \"a\": null,\n  \"b\": [\n    1,\n    {\n      \"a\": 0.1,\n      \"z\": 0\n    }\n  ]\n}\n");
}

fn write_dataset(dir: &std::path::Path, nodes: &str, edges: &str) -> std::path::PathBuf {
    fs::write(dir.join("nodes.csv"), nodes).unwrap();
    fs::write(dir.join("edges.csv"), edges).unwrap();
    let manifest = json!({
        "nodes": "nodes.csv",
        "edges": "edges.csv",
        "attributes": {"kind": "categorical", "year": "integer"},
    });
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_string()).unwrap();
    path
}

#[test]
fn dataset_reads_with_missing_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(
        dir.path(),
        "id,kind,year\na,x,1990\nb,NA,\nc,y,1991\n",
        "source,target\na,b\nb,c\n",
    );
    let net = read_dataset(&path).unwrap();
    assert_eq!(net.node_count(), 3);
    assert_eq!(net.edge_count(), 2);
    let b = net.index_of("b").unwrap();
    assert!(net.attribute(b, "kind").is_none());
    assert!(net.attribute(b, "year").is_none());
}

#[test]
fn dataset_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(
        dir.path(),
        "id,kind,year\na,x,1990\nb,y,soon\n",
        "source,target\na,b\n",
    );
    match read_dataset(&path).unwrap_err() {
        IoError::Parse { file, line, .. } => {
            assert!(file.ends_with("nodes.csv"));
            assert_eq!(line, 3);
        }
        other => panic!("unexpected {other:?}"),
    }
    let path = write_dataset(
        dir.path(),
        "id,kind,year\na,x,1\nb,y,2\n",
        "source,target\na,b\na,zz\n",
    );
    match read_dataset(&path).unwrap_err() {
        IoError::Graph { file, line, .. } => {
            assert!(file.ends_with("edges.csv"));
            assert_eq!(line, 3);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_node_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "id\n", "source,target\n");
    fs::remove_file(dir.path().join("nodes.csv")).unwrap();
    assert!(matches!(read_dataset(&path), Err(IoError::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_networks_round_trip(seed in any::<u64>(), n in 2usize..40) {
        let net = random_graph(n, 0.15, seed);
        let back = network_from_json(&network_to_json(&net)).unwrap();
        prop_assert_eq!(&back, &net);
        if net.edge_count() > 0 {
            let p = cluster(&net, seed).unwrap();
            let q: Partition = partition_from_json(&net, &partition_to_json(&net, &p)).unwrap();
            prop_assert_eq!(q.clusters(), p.clusters());
        }
    }
}
