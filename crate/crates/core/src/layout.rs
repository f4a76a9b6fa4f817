//! Fruchterman–Reingold placement of a cluster metagraph, plus the visual
//! encodings: disk radius from cluster size, stroke thickness from crossing
//! edge count, and shading/shape from test results.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusterGraph, ClusterId};
use crate::seed;
use crate::stats::TestOverlay;

pub const DEFAULT_ITERATIONS: usize = 500;
/// Ideal edge length `k`; a component of `n` meta-nodes gets a square frame
/// of area `n·k²`.
pub const IDEAL_EDGE_LENGTH: f64 = 100.0;
pub const MIN_RADIUS: f64 = 6.0;
pub const MAX_RADIUS: f64 = 40.0;
pub const MAX_THICKNESS: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("cluster graph has no meta-nodes")]
    EmptyClusterGraph,
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("overlay references unknown cluster {0}")]
    UnknownCluster(ClusterId),
    #[error("category `{0}` is not part of the overlay")]
    UnknownCategory(String),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    pub cluster: ClusterId,
    pub size: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub a: ClusterId,
    pub b: ClusterId,
    pub weight: usize,
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub nodes: Vec<LayoutNode>,
    pub edges: Vec<LayoutEdge>,
    pub bbox: BoundingBox,
    pub iterations: usize,
    pub seed: u64,
}

impl LayoutResult {
    pub fn position(&self, cluster: ClusterId) -> Option<(f64, f64)> {
        self.nodes
            .iter()
            .find(|n| n.cluster == cluster)
            .map(|n| (n.x, n.y))
    }
}

/// `r_min + s·√size`, scaled so the largest cluster gets `r_max`.
pub fn radii(sizes: &[usize]) -> Vec<f64> {
    let largest = sizes.iter().copied().max().unwrap_or(0);
    if largest == 0 {
        return vec![MIN_RADIUS; sizes.len()];
    }
    let scale = (MAX_RADIUS - MIN_RADIUS) / (largest as f64).sqrt();
    sizes
        .iter()
        .map(|&s| MIN_RADIUS + scale * (s as f64).sqrt())
        .collect()
}

/// `1 + 2·log₂(1 + weight)`, capped.
pub fn edge_thickness(weight: usize) -> f64 {
    (1.0 + 2.0 * (1.0 + weight as f64).log2()).min(MAX_THICKNESS)
}

pub fn fr_layout(
    cg: &ClusterGraph,
    seed: u64,
    iterations: usize,
) -> Result<LayoutResult, LayoutError> {
    fr_layout_warm(cg, seed, iterations, &BTreeMap::new())
}

/// Fruchterman–Reingold layout starting from `initial` positions where
/// given (in any coordinate frame; they are rescaled per component) and
/// seeded uniform positions elsewhere.
pub fn fr_layout_warm(
    cg: &ClusterGraph,
    seed: u64,
    iterations: usize,
    initial: &BTreeMap<ClusterId, (f64, f64)>,
) -> Result<LayoutResult, LayoutError> {
    let k = cg.k();
    if k == 0 {
        return Err(LayoutError::EmptyClusterGraph);
    }
    if iterations == 0 {
        return Err(LayoutError::ZeroIterations);
    }
    let components = metagraph_components(cg);
    let mut rng = seed::rng(seed);
    let sides: Vec<f64> = components
        .iter()
        .map(|c| IDEAL_EDGE_LENGTH * (c.len() as f64).sqrt())
        .collect();
    let cell = sides.iter().copied().fold(0.0, f64::max);
    let columns = (components.len() as f64).sqrt().ceil() as usize;
    let rows = components.len().div_ceil(columns);

    let mut position = vec![(0.0, 0.0); k];
    for (ci, members) in components.iter().enumerate() {
        let side = sides[ci];
        let local: BTreeMap<ClusterId, usize> =
            members.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let edges: Vec<(usize, usize)> = cg
            .meta_edges
            .iter()
            .filter_map(|e| Some((*local.get(&e.a)?, *local.get(&e.b)?)))
            .collect();
        let start = initial_positions(members, side, initial, &mut rng);
        let placed = run_fruchterman_reingold(start, &edges, side, iterations);
        let offset_x = (ci % columns) as f64 * cell + (cell - side) / 2.0;
        let offset_y = (ci / columns) as f64 * cell + (cell - side) / 2.0;
        for (&c, (x, y)) in members.iter().zip(placed) {
            position[c] = (offset_x + x, offset_y + y);
        }
    }

    let radius = radii(&cg.sizes);
    let nodes = (0..k)
        .map(|c| LayoutNode {
            cluster: c,
            size: cg.sizes[c],
            x: position[c].0,
            y: position[c].1,
            radius: radius[c],
        })
        .collect();
    let edges = cg
        .meta_edges
        .iter()
        .map(|e| LayoutEdge {
            a: e.a,
            b: e.b,
            weight: e.weight,
            thickness: edge_thickness(e.weight),
        })
        .collect();
    Ok(LayoutResult {
        nodes,
        edges,
        bbox: BoundingBox {
            min_x: 0.0,
            min_y: 0.0,
            max_x: columns as f64 * cell,
            max_y: rows as f64 * cell,
        },
        iterations,
        seed,
    })
}

/// Connected components of the metagraph, largest first, ties by smallest id.
fn metagraph_components(cg: &ClusterGraph) -> Vec<Vec<ClusterId>> {
    let k = cg.k();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &cg.meta_edges {
        let (a, b) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<ClusterId>> = BTreeMap::new();
    for c in 0..k {
        let root = find(&mut parent, c);
        groups.entry(root).or_default().push(c);
    }
    let mut out: Vec<Vec<ClusterId>> = groups.into_values().collect();
    out.sort_by_key(|g| std::cmp::Reverse(g.len()));
    out
}

fn initial_positions(
    members: &[ClusterId],
    side: f64,
    initial: &BTreeMap<ClusterId, (f64, f64)>,
    rng: &mut impl Rng,
) -> Vec<(f64, f64)> {
    if members.len() == 1 {
        return vec![(side / 2.0, side / 2.0)];
    }
    let jitter = 1e-4 * side;
    let given: Vec<(f64, f64)> = members
        .iter()
        .filter_map(|c| initial.get(c).copied())
        .collect();
    let (min_x, max_x, min_y, max_y) = given.iter().fold(
        (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let span = (max_x - min_x).max(max_y - min_y);
    let mut out: Vec<(f64, f64)> = members
        .iter()
        .map(|c| {
            let random = (rng.random::<f64>() * side, rng.random::<f64>() * side);
            match initial.get(c) {
                Some(&(x, y)) if span > 0.0 => (
                    0.1 * side + 0.8 * side * (x - min_x) / span,
                    0.1 * side + 0.8 * side * (y - min_y) / span,
                ),
                Some(_) => (side / 2.0, side / 2.0),
                None => random,
            }
        })
        .collect();
    // Separate coincident starts.
    for i in 1..out.len() {
        while out[..i].contains(&out[i]) {
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            out[i].0 = (out[i].0 + jitter * angle.cos()).clamp(0.0, side);
            out[i].1 = (out[i].1 + jitter * angle.sin()).clamp(0.0, side);
        }
    }
    out
}

/// Classic FR iterations in a `side × side` frame with `k = side/√n`:
/// repulsion `k²/d` between all pairs, attraction `d²/k` along edges,
/// displacement capped by a temperature cooling linearly from `side/10`.
fn run_fruchterman_reingold(
    mut pos: Vec<(f64, f64)>,
    edges: &[(usize, usize)],
    side: f64,
    iterations: usize,
) -> Vec<(f64, f64)> {
    let n = pos.len();
    if n < 2 {
        return pos;
    }
    let k = (side * side / n as f64).sqrt();
    let k2 = k * k;
    let t0 = 0.1 * side;
    let min_distance = 1e-9 * side;
    let mut disp = vec![(0.0f64, 0.0f64); n];
    for it in 0..iterations {
        let temperature = t0 * (1.0 - it as f64 / iterations as f64);
        disp.iter_mut().for_each(|d| *d = (0.0, 0.0));
        for i in 0..n {
            for j in i + 1..n {
                let (mut dx, mut dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let mut d = (dx * dx + dy * dy).sqrt();
                if d < min_distance {
                    // Deterministic split direction for coincident nodes.
                    let angle = (i * 7 + j * 13) as f64;
                    dx = min_distance * angle.cos();
                    dy = min_distance * angle.sin();
                    d = min_distance;
                }
                let f = k2 / d;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i].0 += fx;
                disp[i].1 += fy;
                disp[j].0 -= fx;
                disp[j].1 -= fy;
            }
        }
        for &(a, b) in edges {
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let d = (dx * dx + dy * dy).sqrt();
            if d < min_distance {
                continue;
            }
            let f = d * d / k;
            let (fx, fy) = (dx / d * f, dy / d * f);
            disp[a].0 -= fx;
            disp[a].1 -= fy;
            disp[b].0 += fx;
            disp[b].1 += fy;
        }
        for (p, &(dx, dy)) in pos.iter_mut().zip(&disp) {
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = len.min(temperature);
                p.0 = (p.0 + dx / len * step).clamp(0.0, side);
                p.1 = (p.1 + dy / len * step).clamp(0.0, side);
            }
        }
    }
    pos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyledNode {
    pub cluster: ClusterId,
    /// 0 is lightest, 1 darkest.
    pub darkness: f64,
    pub shape: Shape,
    pub p_value: f64,
    pub atypical: bool,
    pub low_count: bool,
    /// Pearson residual of the styled category, when one is selected.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyledLayout {
    pub attribute: String,
    pub category: Option<String>,
    pub alpha: f64,
    pub nodes: Vec<StyledNode>,
}

impl StyledLayout {
    pub fn node(&self, cluster: ClusterId) -> Option<&StyledNode> {
        self.nodes.iter().find(|n| n.cluster == cluster)
    }
}

/// Darkness for a residual magnitude: `|r| / (1 + |r|)`.
pub fn residual_darkness(residual: f64) -> f64 {
    let r = residual.abs();
    r / (1.0 + r)
}

/// Maps test results onto node styling. Without a category, darkness is
/// `1 − p`; with one, the shape follows the residual sign (circle for
/// `r ≥ 0`) and darkness grows with `|r|`.
pub fn style_overlay(
    layout: &LayoutResult,
    overlay: &TestOverlay,
    category: Option<&str>,
    alpha: f64,
) -> Result<StyledLayout, LayoutError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LayoutError::InvalidAlpha(alpha));
    }
    if let Some(cat) = category {
        if !overlay.tested_categories().contains(&cat) {
            return Err(LayoutError::UnknownCategory(cat.to_owned()));
        }
    }
    let nodes = overlay
        .clusters
        .iter()
        .map(|t| {
            if layout.position(t.cluster).is_none() {
                return Err(LayoutError::UnknownCluster(t.cluster));
            }
            let atypical = t.p_value < alpha;
            let (darkness, shape, residual) = match category {
                None => (1.0 - t.p_value, Shape::Circle, None),
                Some(cat) => match t.residuals.get(cat) {
                    Some(&r) => (
                        residual_darkness(r),
                        if r >= 0.0 {
                            Shape::Circle
                        } else {
                            Shape::Square
                        },
                        Some(r),
                    ),
                    None => (0.0, Shape::Circle, None),
                },
            };
            Ok(StyledNode {
                cluster: t.cluster,
                darkness,
                shape,
                p_value: t.p_value,
                atypical,
                low_count: t.low_count,
                residual,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StyledLayout {
        attribute: overlay.attribute.clone(),
        category: category.map(str::to_owned),
        alpha,
        nodes,
    })
}
