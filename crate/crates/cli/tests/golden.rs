//! Golden run on the bundled synthetic dataset. Set `NETMINE_BLESS=1` to
//! rewrite the committed files after an intended change.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn run_pipeline(out: &Path) {
    let manifest = root().join("../../data/synthetic/manifest.json");
    let o = Command::new(env!("CARGO_BIN_EXE_netmine"))
        .arg("--out")
        .arg(out)
        .args(["run", "--manifest"])
        .arg(manifest)
        .args([
            "--attribute",
            "orientation",
            "--category",
            "msm",
            "--coarsen-to",
            "2",
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn pipeline_matches_committed_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path());
    let golden = root().join("tests/golden/synthetic");
    if std::env::var_os("NETMINE_BLESS").is_some() {
        let _ = fs::remove_dir_all(&golden);
        fs::create_dir_all(&golden).unwrap();
        for (name, bytes) in snapshot(dir.path()) {
            fs::write(golden.join(name), bytes).unwrap();
        }
    }
    let got = snapshot(dir.path());
    let want = snapshot(&golden);
    assert_eq!(
        got.keys().collect::<Vec<_>>(),
        want.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &want {
        assert!(got[name] == *bytes, "{name} differs from the golden copy");
    }
}

#[test]
fn pipeline_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}
