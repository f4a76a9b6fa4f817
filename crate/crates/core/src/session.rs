//! Interactive exploration state: the current partition with its layout and
//! overlays, an undo/redo history, and a cache of null-model runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{
    build_cluster_graph, cluster_scope, coarsen, refine, ClusterError, ClusterGraph, ClusterId,
    HierarchyStep, Partition,
};
use crate::graph::{Network, NodeIdx};
use crate::io::{
    self, geodesic_csv, overlay_csv, partition_csv, render_svg, yearly_csv, ExportKind, IoError,
    PartitionDoc,
};
use crate::layout::{
    fr_layout_warm, style_overlay, LayoutError, LayoutResult, StyledLayout, DEFAULT_ITERATIONS,
};
use crate::significance::{
    gate_refinement_using, graph_fingerprint, is_significant, null_threshold_with_progress,
    GateVerdict, NullConfig, NullModelError, NullModelSummary, Progress,
};
use crate::stats::{
    auto_groups, chi_squared_overlay_with, geodesic_table_by_groups, yearly_distribution,
    ClassSource, GeodesicTable, GlobalReference, PathScope, StatsError, TestOverlay, YearlyTable,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Null(#[from] NullModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("no overlay has been computed yet")]
    NoOverlay,
}

/// Which nodes a session clusters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeMode {
    /// The largest connected component.
    #[default]
    Giant,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub seed: u64,
    pub replicates: usize,
    pub swaps_per_edge: usize,
    pub alpha: f64,
    pub layout_iterations: usize,
    pub scope: ScopeMode,
    pub year_attribute: Option<String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            replicates: crate::significance::DEFAULT_REPLICATES,
            swaps_per_edge: crate::significance::DEFAULT_SWAPS_PER_EDGE,
            alpha: 0.05,
            layout_iterations: DEFAULT_ITERATIONS,
            scope: ScopeMode::Giant,
            year_attribute: None,
        }
    }
}

impl SessionConfig {
    pub fn null_config(&self) -> NullConfig {
        NullConfig {
            replicates: self.replicates,
            seed: self.seed,
            swaps_per_edge: self.swaps_per_edge,
        }
    }
}

/// Null-model summaries keyed by graph fingerprint and parameters. Clones
/// share storage, so sessions over one dataset can reuse each other's runs.
#[derive(Debug, Clone, Default)]
pub struct NullCache {
    entries: Arc<Mutex<HashMap<(String, NullConfig), NullModelSummary>>>,
}

impl NullCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(
        &self,
        net: &Network,
        config: NullConfig,
        progress: Option<&Progress>,
    ) -> Result<NullModelSummary, NullModelError> {
        let key = (graph_fingerprint(net), config);
        if let Some(hit) = self.entries.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let summary = null_threshold_with_progress(net, config, progress)?;
        self.entries.lock().unwrap().insert(key, summary.clone());
        Ok(summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlaySpec {
    pub attribute: String,
    pub category: Option<String>,
    pub reference: GlobalReference,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayState {
    pub spec: OverlaySpec,
    pub overlay: TestOverlay,
    pub styled: StyledLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTables {
    pub labels: BTreeMap<ClusterId, String>,
    pub paths: PathScope,
    pub geodesics: GeodesicTable,
    pub yearly: Option<YearlyTable>,
}

/// Significance of a coarsened partition against the scope's own null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsenReport {
    pub k: usize,
    pub modularity: f64,
    pub threshold: f64,
    pub significant: bool,
}

/// Everything observable at one point of the history.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub partition: Partition,
    pub cluster_graph: ClusterGraph,
    pub layout: LayoutResult,
    pub step: Option<HierarchyStep>,
    pub coarsen: Option<CoarsenReport>,
    pub overlay: Option<OverlayState>,
    pub groups: Option<GroupTables>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub verdicts: Vec<GateVerdict>,
    /// Targets whose split was applied.
    pub applied: Vec<ClusterId>,
    pub step: Option<HierarchyStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsenOutcome {
    pub step: HierarchyStep,
    pub report: CoarsenReport,
}

#[derive(Debug, Clone)]
pub struct Session {
    net: Arc<Network>,
    config: SessionConfig,
    cache: NullCache,
    history: Vec<Arc<Snapshot>>,
    cursor: usize,
}

impl Session {
    /// Clusters the configured scope and lays out its metagraph.
    pub fn new(
        net: Arc<Network>,
        config: SessionConfig,
        cache: NullCache,
    ) -> Result<Self, SessionError> {
        let scope: Vec<NodeIdx> = match config.scope {
            ScopeMode::Giant => net
                .connected_components()
                .into_iter()
                .next()
                .unwrap_or_default(),
            ScopeMode::All => (0..net.node_count()).collect(),
        };
        let partition = cluster_scope(&net, &scope, config.seed)?;
        let cluster_graph = build_cluster_graph(&net, &partition);
        let layout = fr_layout_warm(
            &cluster_graph,
            config.seed,
            config.layout_iterations,
            &BTreeMap::new(),
        )?;
        let first = Snapshot {
            partition,
            cluster_graph,
            layout,
            step: None,
            coarsen: None,
            overlay: None,
            groups: None,
        };
        Ok(Self {
            net,
            config,
            cache,
            history: vec![Arc::new(first)],
            cursor: 0,
        })
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn cache(&self) -> &NullCache {
        &self.cache
    }

    pub fn current(&self) -> &Arc<Snapshot> {
        &self.history[self.cursor]
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn can_undo(&self) -> bool {
        self.cursor > 0
    }

    pub fn can_redo(&self) -> bool {
        self.cursor + 1 < self.history.len()
    }

    fn push(&mut self, snapshot: Snapshot) {
        self.history.truncate(self.cursor + 1);
        self.history.push(Arc::new(snapshot));
        self.cursor += 1;
    }

    /// Positions of `next`'s clusters seeded from the current layout: each
    /// new cluster starts at the size-weighted mean of the old clusters its
    /// members came from.
    fn inherited_positions(&self, next: &Partition) -> BTreeMap<ClusterId, (f64, f64)> {
        let current = self.current();
        let mut sums: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); next.k()];
        for &n in next.scope() {
            let (Some(new), Some(old)) = (next.cluster_of(n), current.partition.cluster_of(n))
            else {
                continue;
            };
            let node = &current.layout.nodes[old];
            sums[new].0 += node.x;
            sums[new].1 += node.y;
            sums[new].2 += 1.0;
        }
        sums.into_iter()
            .enumerate()
            .filter(|(_, s)| s.2 > 0.0)
            .map(|(c, (x, y, w))| (c, (x / w, y / w)))
            .collect()
    }

    fn snapshot_for(
        &self,
        partition: Partition,
        step: HierarchyStep,
        coarsen: Option<CoarsenReport>,
    ) -> Result<Snapshot, SessionError> {
        let cluster_graph = build_cluster_graph(&self.net, &partition);
        let initial = self.inherited_positions(&partition);
        let layout = fr_layout_warm(
            &cluster_graph,
            self.config.seed,
            self.config.layout_iterations,
            &initial,
        )?;
        let mut snapshot = Snapshot {
            partition,
            cluster_graph,
            layout,
            step: Some(step),
            coarsen,
            overlay: None,
            groups: None,
        };
        // Keep the analyst's overlay selection across hierarchy steps.
        if let Some(state) = &self.current().overlay {
            snapshot.overlay = self.compute_overlay(&snapshot, state.spec.clone()).ok();
        }
        Ok(snapshot)
    }

    /// Gates every target and splits the accepted ones. Rejected targets
    /// stay whole; when nothing is accepted the history is untouched.
    pub fn refine(
        &mut self,
        targets: &[ClusterId],
        progress: Option<&Progress>,
    ) -> Result<RefineOutcome, SessionError> {
        let current = Arc::clone(self.current());
        let targets: BTreeSet<ClusterId> = targets.iter().copied().collect();
        if let Some(&bad) = targets.iter().find(|&&c| c >= current.partition.k()) {
            return Err(ClusterError::UnknownCluster(bad).into());
        }
        let config = self.config.null_config();
        let mut verdicts = Vec::with_capacity(targets.len());
        for &t in &targets {
            let verdict =
                gate_refinement_using(&self.net, &current.partition, t, config.seed, |sub| {
                    self.cache.get_or_compute(sub, config, progress)
                })?;
            verdicts.push(verdict);
        }
        let accepted: BTreeSet<ClusterId> = verdicts
            .iter()
            .filter(|v| v.accepted)
            .map(|v| v.cluster)
            .collect();
        if accepted.is_empty() {
            return Ok(RefineOutcome {
                verdicts,
                applied: Vec::new(),
                step: None,
            });
        }
        let (next, step) = refine(&self.net, &current.partition, &accepted, config.seed)?;
        let snapshot = self.snapshot_for(next, step.clone(), None)?;
        self.push(snapshot);
        Ok(RefineOutcome {
            verdicts,
            applied: accepted.into_iter().collect(),
            step: Some(step),
        })
    }

    /// Null summary of the whole scope, computed once and cached.
    pub fn global_null(
        &self,
        progress: Option<&Progress>,
    ) -> Result<NullModelSummary, SessionError> {
        let scope = self.current().partition.scope().to_vec();
        let sub = self
            .net
            .induced_subgraph(scope)
            .map_err(ClusterError::from)?;
        Ok(self
            .cache
            .get_or_compute(&sub, self.config.null_config(), progress)?)
    }

    pub fn coarsen(
        &mut self,
        target_k: usize,
        progress: Option<&Progress>,
    ) -> Result<CoarsenOutcome, SessionError> {
        let (next, step) = coarsen(&self.net, &self.current().partition, target_k)?;
        let summary = self.global_null(progress)?;
        let report = CoarsenReport {
            k: next.k(),
            modularity: next.modularity(),
            threshold: summary.threshold,
            significant: is_significant(next.modularity(), &summary),
        };
        let snapshot = self.snapshot_for(next, step.clone(), Some(report.clone()))?;
        self.push(snapshot);
        Ok(CoarsenOutcome { step, report })
    }

    fn compute_overlay(
        &self,
        snapshot: &Snapshot,
        spec: OverlaySpec,
    ) -> Result<OverlayState, SessionError> {
        let overlay = chi_squared_overlay_with(
            &self.net,
            &snapshot.partition,
            &spec.attribute,
            spec.reference,
        )?;
        let styled = style_overlay(
            &snapshot.layout,
            &overlay,
            spec.category.as_deref(),
            spec.alpha,
        )?;
        Ok(OverlayState {
            spec,
            overlay,
            styled,
        })
    }

    /// Tests every cluster against the scope distribution of `attribute`
    /// and restyles the layout (positions unchanged).
    pub fn overlay(&mut self, spec: OverlaySpec) -> Result<OverlayState, SessionError> {
        let state = self.compute_overlay(self.current(), spec)?;
        let mut snapshot = Snapshot::clone(self.current());
        snapshot.step = None;
        snapshot.coarsen = None;
        snapshot.overlay = Some(state.clone());
        self.push(snapshot);
        Ok(state)
    }

    /// Merges clusters into named groups and tabulates distances between
    /// groups and, when a year attribute is configured, their yearly counts.
    pub fn groups(
        &mut self,
        labels: BTreeMap<ClusterId, String>,
        paths: PathScope,
    ) -> Result<GroupTables, SessionError> {
        let current = Arc::clone(self.current());
        let p = &current.partition;
        let geodesics = geodesic_table_by_groups(&self.net, p, &labels, paths)?;
        let yearly = self
            .config
            .year_attribute
            .as_deref()
            .map(|year| {
                yearly_distribution(
                    &self.net,
                    p.scope(),
                    year,
                    ClassSource::Groups {
                        partition: p,
                        labels: &labels,
                    },
                    None,
                )
            })
            .transpose()?;
        let tables = GroupTables {
            labels,
            paths,
            geodesics,
            yearly,
        };
        let mut snapshot = Snapshot::clone(&current);
        snapshot.step = None;
        snapshot.coarsen = None;
        snapshot.groups = Some(tables.clone());
        self.push(snapshot);
        Ok(tables)
    }

    /// Groups clusters by their verdict for `category` in the current overlay.
    pub fn auto_groups(
        &mut self,
        category: &str,
        paths: PathScope,
    ) -> Result<GroupTables, SessionError> {
        let state = self
            .current()
            .overlay
            .clone()
            .ok_or(SessionError::NoOverlay)?;
        let labels = auto_groups(&state.overlay, category, state.spec.alpha)?;
        self.groups(labels, paths)
    }

    pub fn undo(&mut self) -> Result<&Arc<Snapshot>, SessionError> {
        if !self.can_undo() {
            return Err(SessionError::NothingToUndo);
        }
        self.cursor -= 1;
        Ok(self.current())
    }

    pub fn redo(&mut self) -> Result<&Arc<Snapshot>, SessionError> {
        if !self.can_redo() {
            return Err(SessionError::NothingToRedo);
        }
        self.cursor += 1;
        Ok(self.current())
    }

    pub fn history(&self) -> HistoryView {
        HistoryView {
            cursor: self.cursor,
            len: self.history.len(),
            can_undo: self.can_undo(),
            can_redo: self.can_redo(),
        }
    }

    /// Serializable projection of the current state. Contains no history
    /// bookkeeping, so undoing a step reproduces the earlier bytes.
    pub fn view(&self) -> SessionView {
        let s = self.current();
        let cg = &s.cluster_graph;
        let m = cg.edge_count as f64;
        let contributions = (0..cg.k())
            .map(|c| {
                let share = cg.degree(c) as f64 / (2.0 * m);
                cg.internal[c] as f64 / m - share * share
            })
            .collect();
        SessionView {
            seed: self.config.seed,
            scope_nodes: s.partition.scope().len(),
            scope_edges: cg.edge_count,
            partition: PartitionDoc::new(&self.net, &s.partition),
            contributions,
            cluster_graph: cg.clone(),
            layout: s.layout.clone(),
            steps: self.history[1..=self.cursor]
                .iter()
                .filter_map(|h| h.step.clone())
                .collect(),
            coarsen: s.coarsen.clone(),
            overlay: s.overlay.clone(),
            groups: s.groups.clone(),
        }
    }

    /// Canonical bytes of the current state in the requested flavour.
    pub fn export(&self, kind: ExportKind) -> Result<Vec<u8>, IoError> {
        let s = self.current();
        let text = match kind {
            ExportKind::Json => io::to_document("session", &self.view()),
            ExportKind::Svg => render_svg(&s.layout, s.overlay.as_ref().map(|o| &o.styled)),
            ExportKind::Csv => {
                let mut sections = vec![("partition", partition_csv(&self.net, &s.partition))];
                if let Some(o) = &s.overlay {
                    sections.push(("overlay", overlay_csv(&o.overlay)));
                }
                if let Some(g) = &s.groups {
                    sections.push(("geodesics", geodesic_csv(&g.geodesics)));
                    if let Some(y) = &g.yearly {
                        sections.push(("yearly", yearly_csv(y)));
                    }
                }
                sections
                    .into_iter()
                    .map(|(name, body)| format!("# {name}\n{body}"))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
        };
        Ok(text.into_bytes())
    }
}

/// Position in the undo/redo history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryView {
    pub cursor: usize,
    pub len: usize,
    pub can_undo: bool,
    pub can_redo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub seed: u64,
    pub scope_nodes: usize,
    pub scope_edges: usize,
    pub partition: PartitionDoc,
    /// Each cluster's term of the modularity sum.
    pub contributions: Vec<f64>,
    pub cluster_graph: ClusterGraph,
    pub layout: LayoutResult,
    /// Hierarchy steps from the initial clustering to the current state.
    pub steps: Vec<HierarchyStep>,
    pub coarsen: Option<CoarsenReport>,
    pub overlay: Option<OverlayState>,
    pub groups: Option<GroupTables>,
}
