use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn synthetic_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/manifest.json")
}

fn netmine(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netmine"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data(path: &Path) -> Value {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["format_version"], "1");
    doc["data"].clone()
}

fn ingest_and_cluster(out: &Path) {
    let m = synthetic_manifest();
    assert!(
        netmine(out, &["components", "--manifest", m.to_str().unwrap()])
            .status
            .success()
    );
    assert!(netmine(out, &["cluster"]).status.success());
}

#[test]
fn zero_replicates_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = synthetic_manifest();
    let o = netmine(
        dir.path(),
        &[
            "run",
            "--manifest",
            m.to_str().unwrap(),
            "--attribute",
            "orientation",
            "--replicates",
            "0",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--replicates"), "{}", stderr(&o));
}

#[test]
fn bad_alpha_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = synthetic_manifest();
    let o = netmine(
        dir.path(),
        &[
            "run",
            "--manifest",
            m.to_str().unwrap(),
            "--attribute",
            "orientation",
            "--alpha",
            "1.5",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--alpha"));
}

#[test]
fn missing_node_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(
        &manifest,
        r#"{"nodes": "absent.csv", "edges": "edges.csv"}"#,
    )
    .unwrap();
    fs::write(dir.path().join("edges.csv"), "source,target\n").unwrap();
    let o = netmine(
        &dir.path().join("out"),
        &["components", "--manifest", manifest.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"), "{}", stderr(&o));
}

#[test]
fn steps_out_of_order_report_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = netmine(dir.path(), &["refine", "--cluster", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("network.json"), "{}", stderr(&o));

    let m = synthetic_manifest();
    assert!(netmine(
        dir.path(),
        &["components", "--manifest", m.to_str().unwrap()]
    )
    .status
    .success());
    let o = netmine(dir.path(), &["test", "--attribute", "orientation"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("partition.json"), "{}", stderr(&o));
}

#[test]
fn refined_artifact_references_its_parent() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_cluster(dir.path());
    let o = netmine(
        dir.path(),
        &["refine", "--cluster", "3", "--replicates", "20"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let parent = data(&dir.path().join("partition.json"))["fingerprint"].clone();
    let refined = data(&dir.path().join("refined.json"));
    assert_eq!(refined["parent"], parent);
    let verdicts = refined["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 1);
    assert_eq!(verdicts[0]["cluster"], 3);
}

#[test]
fn unknown_cluster_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_cluster(dir.path());
    let o = netmine(dir.path(), &["refine", "--cluster", "999"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("999"));
}

#[test]
fn geodesics_by_attribute_on_a_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("nodes.csv"), "id,kind\na,x\nb,y\nc,x\n").unwrap();
    fs::write(dir.path().join("edges.csv"), "source,target\na,b\nb,c\n").unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(
        &manifest,
        r#"{"nodes": "nodes.csv", "edges": "edges.csv", "attributes": {"kind": "categorical"}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert!(netmine(
        &out,
        &["components", "--manifest", manifest.to_str().unwrap()]
    )
    .status
    .success());
    assert!(netmine(&out, &["cluster"]).status.success());
    let o = netmine(
        &out,
        &["geodesics", "--by", "attribute", "--attribute", "kind"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("geodesics_kind.csv")).unwrap();
    assert_eq!(csv, ",x,y\nx,2,1\ny,1,\n");
}

/// Orientation of every node, read straight from the dataset file.
fn orientations() -> HashMap<String, String> {
    let text = fs::read_to_string(synthetic_manifest().with_file_name("nodes.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "orientation").unwrap();
    lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (!f[col].is_empty()).then(|| (f[0].to_owned(), f[col].to_owned()))
        })
        .collect()
}

#[test]
fn test_overlay_has_oracle_residual_signs() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_cluster(dir.path());
    let o = netmine(
        dir.path(),
        &["test", "--attribute", "orientation", "--category", "msm"],
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let labels = orientations();
    let partition = data(&dir.path().join("partition.json"));
    let clusters: Vec<BTreeMap<String, f64>> = partition["clusters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|members| {
            let mut counts = BTreeMap::new();
            for id in members.as_array().unwrap() {
                if let Some(l) = labels.get(id.as_str().unwrap()) {
                    *counts.entry(l.clone()).or_insert(0.0) += 1.0;
                }
            }
            counts
        })
        .collect();
    let mut global: BTreeMap<String, f64> = BTreeMap::new();
    for c in &clusters {
        for (k, v) in c {
            *global.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let total: f64 = global.values().sum();

    let artifact = data(&dir.path().join("overlay.json"));
    assert_eq!(artifact["category"], "msm");
    let tests = artifact["overlay"]["clusters"].as_array().unwrap();
    assert_eq!(tests.len(), clusters.len());
    for (t, counts) in tests.iter().zip(&clusters) {
        let n: f64 = counts.values().sum();
        let mut statistic = 0.0;
        for (cat, g) in &global {
            let expected = n * g / total;
            let observed = counts.get(cat).copied().unwrap_or(0.0);
            let r = (observed - expected) / expected.sqrt();
            statistic += r * r;
            let got = t["residuals"][cat].as_f64().unwrap();
            assert_eq!(
                got.signum(),
                r.signum(),
                "cluster {} category {cat}",
                t["cluster"]
            );
            assert!((got - r).abs() < 1e-9);
        }
        assert!((t["statistic"].as_f64().unwrap() - statistic).abs() < 1e-9);
    }
    let csv = fs::read_to_string(dir.path().join("overlay.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("residual:msm"));
}

#[test]
fn subcommands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    ingest_and_cluster(dir.path());
    let first = fs::read(dir.path().join("partition.json")).unwrap();
    assert!(netmine(dir.path(), &["cluster"]).status.success());
    assert_eq!(fs::read(dir.path().join("partition.json")).unwrap(), first);
    assert!(netmine(dir.path(), &["coarsen", "--k", "3"])
        .status
        .success());
    let coarse = fs::read(dir.path().join("partition_coarsened.json")).unwrap();
    assert!(netmine(dir.path(), &["coarsen", "--k", "3"])
        .status
        .success());
    assert_eq!(
        fs::read(dir.path().join("partition_coarsened.json")).unwrap(),
        coarse
    );
    let o = netmine(
        dir.path(),
        &["layout", "--partition", "partition_coarsened.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("metagraph_coarsened.svg").exists());
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = synthetic_manifest();
    let o = Command::new(env!("CARGO_BIN_EXE_netmine"))
        .env("NETMINE_OUT", dir.path())
        .args(["components", "--manifest", m.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("components.csv").exists());
}
