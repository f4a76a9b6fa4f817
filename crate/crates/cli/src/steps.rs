//! Workflow steps. Each reads its inputs from the output directory and
//! writes canonical artifacts back into it, so the steps can run one at a
//! time or chained by the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use netmine_core::io::{
    self, components_csv, from_document, geodesic_csv, network_from_json, network_to_json,
    overlay_csv, partition_csv, profile_csv, read_dataset, render_svg, to_document, yearly_csv,
    DatasetManifest, IoError,
};
use netmine_core::layout::{fr_layout, style_overlay, LayoutError, LayoutResult, StyledLayout};
use netmine_core::session::{NullCache, ScopeMode};
use netmine_core::significance::{
    gate_refinement_using, is_significant, GateVerdict, NullConfig, NullModelError,
    NullModelSummary,
};
use netmine_core::stats::{
    auto_groups, chi_squared_overlay_with, geodesic_table_by_attribute, geodesic_table_by_groups,
    yearly_distribution, ClassSource, GlobalReference, PathScope, StatsError, TestOverlay,
};
use netmine_core::{
    build_cluster_graph, cluster_scope, coarsen, coarsening_profile, refine, ClusterError,
    ClusterId, HierarchyStep, Network, Partition,
};
use serde::{Deserialize, Serialize};

pub const BASE_PARTITION: &str = "partition.json";

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs or artifacts missing: exit 2.
    Validation(String),
    /// The analysis itself failed: exit 3.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Cluster(c) => c.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::UnknownCluster(_) | ClusterError::BadTarget { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<NullModelError> for CliError {
    fn from(e: NullModelError) -> Self {
        match e {
            NullModelError::Cluster(c) => c.into(),
            NullModelError::BadParameter(_) => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::DegenerateGlobal { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::EmptyClusterGraph => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// The output directory holding every artifact of a run.
pub struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_owned(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    pub fn read(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        if !path.exists() {
            return Err(IoError::MissingArtifact(format!(
                "{} (run the step that produces it first)",
                path.display()
            ))
            .into());
        }
        std::fs::read_to_string(&path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn network(&self) -> Result<Network> {
        Ok(network_from_json(&self.read("network.json")?)?)
    }

    pub fn dataset(&self) -> Result<DatasetInfo> {
        Ok(from_document("dataset", &self.read("dataset.json")?)?)
    }

    pub fn partition(&self, net: &Network, name: &str) -> Result<Partition> {
        Ok(io::partition_from_json(net, &self.read(name)?)?)
    }
}

/// Artifact-name suffix for a partition file: `partition_coarsened.json`
/// gives `_coarsened`, the base partition gives nothing.
pub fn suffix_of(partition: &str) -> String {
    let stem = partition.strip_suffix(".json").unwrap_or(partition);
    match stem.strip_prefix("partition") {
        Some(rest) => rest.to_owned(),
        None => format!("_{stem}"),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    /// File name of the manifest, without its directory.
    pub manifest: String,
    pub year_attribute: Option<String>,
    pub nodes: usize,
    pub edges: usize,
    pub components: Vec<usize>,
}

pub fn ingest(ws: &Workspace, manifest_path: &Path) -> Result<DatasetInfo> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let net = read_dataset(manifest_path)?;
    let components: Vec<usize> = net.connected_components().iter().map(Vec::len).collect();
    let info = DatasetInfo {
        manifest: manifest_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        year_attribute: manifest.year_attribute.clone(),
        nodes: net.node_count(),
        edges: net.edge_count(),
        components: components.clone(),
    };
    ws.write("dataset.json", to_document("dataset", &info))?;
    ws.write("network.json", network_to_json(&net))?;
    ws.write("components.csv", components_csv(&components))?;
    Ok(info)
}

pub fn cluster(ws: &Workspace, seed: u64, scope: ScopeMode) -> Result<Partition> {
    let net = ws.network()?;
    let nodes: Vec<usize> = match scope {
        ScopeMode::Giant => net
            .connected_components()
            .into_iter()
            .next()
            .unwrap_or_default(),
        ScopeMode::All => (0..net.node_count()).collect(),
    };
    let p = cluster_scope(&net, &nodes, seed)?;
    ws.write(BASE_PARTITION, io::partition_to_json(&net, &p))?;
    ws.write("partition.csv", partition_csv(&net, &p))?;
    ws.write(
        "cluster_graph.json",
        to_document("cluster_graph", &build_cluster_graph(&net, &p)),
    )?;
    ws.write("profile.csv", profile_csv(&coarsening_profile(&net, &p)?))?;
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullReport {
    pub partition: String,
    pub modularity: f64,
    pub significant: bool,
    pub summary: NullModelSummary,
}

fn null_for(
    net: &Network,
    p: &Partition,
    config: NullConfig,
    cache: &NullCache,
) -> Result<NullReport> {
    let sub = net
        .induced_subgraph(p.scope().iter().copied())
        .map_err(ClusterError::from)?;
    let summary = cache.get_or_compute(&sub, config, None)?;
    Ok(NullReport {
        partition: p.fingerprint(),
        modularity: p.modularity(),
        significant: is_significant(p.modularity(), &summary),
        summary,
    })
}

pub fn null(
    ws: &Workspace,
    partition: &str,
    config: NullConfig,
    cache: &NullCache,
) -> Result<NullReport> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let report = null_for(&net, &p, config, cache)?;
    ws.write(
        &format!("null{}.json", suffix_of(partition)),
        to_document("null", &report),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineReport {
    pub parent: String,
    pub verdicts: Vec<GateVerdict>,
    pub applied: Vec<ClusterId>,
    pub step: Option<HierarchyStep>,
}

/// Gates each target (every cluster when `targets` is `None`) and applies
/// the accepted splits.
pub fn refine_step(
    ws: &Workspace,
    partition: &str,
    targets: Option<&[ClusterId]>,
    config: NullConfig,
    cache: &NullCache,
) -> Result<RefineReport> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let targets: BTreeSet<ClusterId> = match targets {
        Some(t) => t.iter().copied().collect(),
        None => (0..p.k()).collect(),
    };
    if let Some(&bad) = targets.iter().find(|&&c| c >= p.k()) {
        return Err(ClusterError::UnknownCluster(bad).into());
    }
    let verdicts = targets
        .iter()
        .map(|&t| {
            gate_refinement_using(&net, &p, t, config.seed, |sub| {
                cache.get_or_compute(sub, config, None)
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let accepted: BTreeSet<ClusterId> = verdicts
        .iter()
        .filter(|v| v.accepted)
        .map(|v| v.cluster)
        .collect();
    let step = if accepted.is_empty() {
        None
    } else {
        let (child, step) = refine(&net, &p, &accepted, config.seed)?;
        ws.write(
            "partition_refined.json",
            io::partition_to_json(&net, &child),
        )?;
        Some(step)
    };
    let report = RefineReport {
        parent: p.fingerprint(),
        verdicts,
        applied: accepted.into_iter().collect(),
        step,
    };
    ws.write("refined.json", to_document("refine", &report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarsenReport {
    pub parent: String,
    pub step: HierarchyStep,
    pub k: usize,
    pub modularity: f64,
    /// Compared against the base partition's null when one is available.
    pub threshold: Option<f64>,
    pub significant: Option<bool>,
}

pub fn coarsen_step(ws: &Workspace, partition: &str, target_k: usize) -> Result<CoarsenReport> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let (child, step) = coarsen(&net, &p, target_k)?;
    let null: Option<NullReport> = if ws.exists("null.json") {
        Some(from_document("null", &ws.read("null.json")?)?)
    } else {
        None
    };
    let threshold = null.map(|n| n.summary.threshold);
    let report = CoarsenReport {
        parent: p.fingerprint(),
        step,
        k: child.k(),
        modularity: child.modularity(),
        threshold,
        significant: threshold.map(|t| child.modularity() > t),
    };
    ws.write(
        "partition_coarsened.json",
        io::partition_to_json(&net, &child),
    )?;
    ws.write("coarsened.json", to_document("coarsen", &report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlayArtifact {
    pub partition: String,
    pub category: Option<String>,
    pub alpha: f64,
    pub overlay: TestOverlay,
    /// Cluster verdicts for `category`, when one is given.
    pub groups: Option<BTreeMap<ClusterId, String>>,
}

pub fn test_step(
    ws: &Workspace,
    partition: &str,
    attribute: &str,
    category: Option<&str>,
    alpha: f64,
    reference: GlobalReference,
) -> Result<OverlayArtifact> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let overlay = chi_squared_overlay_with(&net, &p, attribute, reference)?;
    let groups = category
        .map(|c| auto_groups(&overlay, c, alpha))
        .transpose()?;
    let artifact = OverlayArtifact {
        partition: p.fingerprint(),
        category: category.map(str::to_owned),
        alpha,
        overlay,
        groups,
    };
    let suffix = suffix_of(partition);
    ws.write(
        &format!("overlay{suffix}.json"),
        to_document("overlay", &artifact),
    )?;
    ws.write(
        &format!("overlay{suffix}.csv"),
        overlay_csv(&artifact.overlay),
    )?;
    Ok(artifact)
}

fn current_overlay(
    ws: &Workspace,
    partition: &str,
    p: &Partition,
) -> Result<Option<OverlayArtifact>> {
    let name = format!("overlay{}.json", suffix_of(partition));
    if !ws.exists(&name) {
        return Ok(None);
    }
    let artifact: OverlayArtifact = from_document("overlay", &ws.read(&name)?)?;
    Ok((artifact.partition == p.fingerprint()).then_some(artifact))
}

pub fn layout_step(
    ws: &Workspace,
    partition: &str,
    seed: u64,
    iterations: usize,
) -> Result<LayoutResult> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let layout = fr_layout(&build_cluster_graph(&net, &p), seed, iterations)?;
    let suffix = suffix_of(partition);
    let styled: Option<StyledLayout> = match current_overlay(ws, partition, &p)? {
        Some(o) => Some(style_overlay(
            &layout,
            &o.overlay,
            o.category.as_deref(),
            o.alpha,
        )?),
        None => None,
    };
    ws.write(
        &format!("layout{suffix}.json"),
        to_document("layout", &layout),
    )?;
    if let Some(s) = &styled {
        ws.write(
            &format!("styled{suffix}.json"),
            to_document("styled_layout", s),
        )?;
    }
    ws.write(
        &format!("metagraph{suffix}.svg"),
        render_svg(&layout, styled.as_ref()),
    )?;
    Ok(layout)
}

/// Where group labels come from.
pub enum GroupSource<'a> {
    /// A JSON object mapping cluster ids to labels.
    File(&'a Path),
    /// Verdicts recorded in the partition's overlay.
    Overlay,
}

pub fn geodesics_by_attribute(
    ws: &Workspace,
    partition: &str,
    attribute: &str,
    years: Option<RangeInclusive<i64>>,
) -> Result<()> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let table = geodesic_table_by_attribute(&net, p.scope(), attribute)?;
    let suffix = suffix_of(partition);
    ws.write(
        &format!("geodesics_{attribute}{suffix}.json"),
        to_document("geodesic_table", &table),
    )?;
    ws.write(
        &format!("geodesics_{attribute}{suffix}.csv"),
        geodesic_csv(&table),
    )?;
    if let Some(year) = ws.dataset()?.year_attribute {
        let yearly = yearly_distribution(
            &net,
            p.scope(),
            &year,
            ClassSource::Attribute(attribute),
            years,
        )?;
        ws.write(
            &format!("yearly_{attribute}{suffix}.json"),
            to_document("yearly_table", &yearly),
        )?;
        ws.write(
            &format!("yearly_{attribute}{suffix}.csv"),
            yearly_csv(&yearly),
        )?;
    }
    Ok(())
}

pub fn geodesics_by_groups(
    ws: &Workspace,
    partition: &str,
    source: GroupSource<'_>,
    paths: PathScope,
    years: Option<RangeInclusive<i64>>,
) -> Result<BTreeMap<ClusterId, String>> {
    let net = ws.network()?;
    let p = ws.partition(&net, partition)?;
    let labels: BTreeMap<ClusterId, String> = match source {
        GroupSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        GroupSource::Overlay => current_overlay(ws, partition, &p)?
            .and_then(|o| o.groups)
            .ok_or_else(|| {
                CliError::from(IoError::MissingArtifact(format!(
                    "overlay{}.json with a category for this partition (run `test --category`)",
                    suffix_of(partition)
                )))
            })?,
    };
    let table = geodesic_table_by_groups(&net, &p, &labels, paths)?;
    let suffix = suffix_of(partition);
    ws.write(
        &format!("groups{suffix}.json"),
        to_document("groups", &labels),
    )?;
    ws.write(
        &format!("geodesics_groups{suffix}.json"),
        to_document("geodesic_table", &table),
    )?;
    ws.write(
        &format!("geodesics_groups{suffix}.csv"),
        geodesic_csv(&table),
    )?;
    if let Some(year) = ws.dataset()?.year_attribute {
        let source = ClassSource::Groups {
            partition: &p,
            labels: &labels,
        };
        let yearly = yearly_distribution(&net, p.scope(), &year, source, years)?;
        ws.write(
            &format!("yearly_groups{suffix}.json"),
            to_document("yearly_table", &yearly),
        )?;
        ws.write(&format!("yearly_groups{suffix}.csv"), yearly_csv(&yearly))?;
    }
    Ok(labels)
}

/// Year range for yearly tables: an explicit range, optionally dropping the
/// latest year present in the data.
pub fn year_filter(
    ws: &Workspace,
    explicit: Option<RangeInclusive<i64>>,
    drop_last: bool,
) -> Result<Option<RangeInclusive<i64>>> {
    if !drop_last {
        return Ok(explicit);
    }
    let Some(year) = ws.dataset()?.year_attribute else {
        return Ok(explicit);
    };
    let net = ws.network()?;
    let years: Vec<i64> = (0..net.node_count())
        .filter_map(|n| net.attribute(n, &year).and_then(|v| v.as_integer()))
        .collect();
    let (Some(&lo), Some(&hi)) = (years.iter().min(), years.iter().max()) else {
        return Ok(explicit);
    };
    let (lo, hi) = explicit.map_or((lo, hi), |r| (*r.start(), (*r.end()).min(hi)));
    Ok(Some(lo..=hi - 1))
}
