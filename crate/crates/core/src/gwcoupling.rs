//! Marked two-stage Galton-Watson trees and the thinning that turns them into
//! multigraph clusters.
//!
//! Node `v` of a tree carries a mark `M_v` in `[N]` (or the cemetery mark `†`
//! with weight zero) and `X_v ~ Pois(w(M_v))` children; the root has mark `k`.
//! Nodes are stored in breadth-first order (shorter Ulam-Harris labels first,
//! lexicographic within a length), so thinning is one forward scan.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec, Variant};
use crate::graphgen::Weights;
use crate::rng::{poisson, RngStream};
use crate::stats::{least_squares, quantile_sorted, Summary};

pub const DEFAULT_SIZE_GUARD: usize = 10_000_000;
const NO_PARENT: usize = usize::MAX;

/// Mark law `P(M = m) ~ m^-gamma` on `[N]`; with truncation level `z`, marks `m <= z` become `†`.
#[derive(Debug, Clone)]
pub struct MarkLaw {
    weights: Weights,
    truncation: Option<usize>,
}

impl MarkLaw {
    pub fn new(spec: &GraphSpec, truncation: Option<usize>) -> Self {
        Self::from_weights(Weights::new(spec), truncation)
    }

    pub fn from_weights(weights: Weights, truncation: Option<usize>) -> Self {
        Self { weights, truncation }
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// `P(M = m)`, zero for truncated marks.
    pub fn probability(&self, m: usize) -> f64 {
        if m == 0 || m > self.n() || self.truncation.is_some_and(|z| m <= z) {
            return 0.0;
        }
        (m as f64).powf(-self.weights.gamma()) / self.weights.normalizer()
    }

    /// `None` stands for `†`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let m = self.weights.sample_above(rng, 0);
        match self.truncation {
            Some(z) if m <= z => None,
            _ => Some(m),
        }
    }

    /// `w(m)`, with `w(†) = 0`.
    pub fn weight(&self, mark: Option<usize>) -> f64 {
        mark.map_or(0.0, |m| self.weights.get(m))
    }

    /// `E w(M)` under this law: the mean offspring of a non-root node.
    pub fn mean_offspring(&self) -> f64 {
        let z = self.truncation.unwrap_or(0).min(self.n());
        let tail: f64 = (z + 1..=self.n()).map(|m| (m as f64).powf(-2.0 * self.weights.gamma())).sum();
        self.weights.scale() * tail
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Index of the parent, `usize::MAX` for the root.
    pub parent: usize,
    /// `None` is the cemetery mark `†`.
    pub mark: Option<usize>,
    pub offspring: usize,
    /// Children occupy `first_child..first_child + offspring`.
    pub first_child: usize,
    pub thinned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedTree {
    pub root_mark: usize,
    pub nodes: Vec<TreeNode>,
}

impl MarkedTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        let p = self.nodes[i].parent;
        (p != NO_PARENT).then_some(p)
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        let node = &self.nodes[i];
        node.first_child..node.first_child + node.offspring
    }

    /// Ulam-Harris label of node `i`, 1-based child indices; empty for the root.
    pub fn ulam_label(&self, i: usize) -> Vec<usize> {
        let mut label = Vec::new();
        let mut v = i;
        while let Some(p) = self.parent(v) {
            label.push(v - self.nodes[p].first_child + 1);
            v = p;
        }
        label.reverse();
        label
    }

    /// Builds a tree from `(parent, mark)` pairs listed in breadth-first order.
    pub fn from_parents(root_mark: usize, entries: &[(Option<usize>, Option<usize>)]) -> Result<Self> {
        if entries.is_empty() || entries[0].0.is_some() {
            return Err(Error::InvalidParameter("first node must be the root".into()));
        }
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(entries.len());
        for (i, &(parent, mark)) in entries.iter().enumerate() {
            if i > 0 {
                let p = parent.ok_or_else(|| Error::InvalidParameter(format!("node {i} has no parent")))?;
                let last_parent = nodes[i - 1].parent;
                if p >= i || (last_parent != NO_PARENT && p < last_parent) {
                    return Err(Error::InvalidParameter(format!("node {i} breaks breadth-first order")));
                }
                if nodes[p].offspring == 0 {
                    nodes[p].first_child = i;
                } else if nodes[p].first_child + nodes[p].offspring != i {
                    return Err(Error::InvalidParameter(format!("children of node {p} are not contiguous")));
                }
                nodes[p].offspring += 1;
            }
            nodes.push(TreeNode {
                parent: parent.unwrap_or(NO_PARENT),
                mark: if i == 0 { Some(root_mark) } else { mark },
                offspring: 0,
                first_child: 0,
                thinned: false,
            });
        }
        for node in nodes.iter_mut() {
            if node.offspring == 0 {
                node.first_child = entries.len();
            }
        }
        Ok(Self { root_mark, nodes })
    }

    /// One line per node: `label mark offspring thinned`, with `∅` for the root
    /// label, dot-separated child indices otherwise, and `†` for the cemetery mark.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let label = self.ulam_label(i);
            let label = if label.is_empty() {
                "∅".to_string()
            } else {
                label.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".")
            };
            let mark = node.mark.map_or("†".to_string(), |m| m.to_string());
            out.push_str(&format!("{label} {mark} {} {}\n", node.offspring, u8::from(node.thinned)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut entries = Vec::new();
        let mut declared = Vec::new();
        let mut flags = Vec::new();
        let mut previous: Option<Vec<usize>> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: lineno + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(perr(format!("expected 4 fields, found {}", fields.len())));
            }
            let label: Vec<usize> = if fields[0] == "∅" {
                Vec::new()
            } else {
                fields[0]
                    .split('.')
                    .map(|c| c.parse::<usize>().ok().filter(|&c| c > 0))
                    .collect::<Option<_>>()
                    .ok_or_else(|| perr(format!("bad label {:?}", fields[0])))?
            };
            if let Some(prev) = &previous {
                if (prev.len(), prev) >= (label.len(), &label) {
                    return Err(perr("labels not in breadth-first order".into()));
                }
            }
            let mark = match fields[1] {
                "†" => None,
                s => Some(s.parse::<usize>().map_err(|_| perr(format!("bad mark {s:?}")))?),
            };
            let offspring: usize = fields[2].parse().map_err(|_| perr(format!("bad offspring {:?}", fields[2])))?;
            let thinned = match fields[3] {
                "0" => false,
                "1" => true,
                s => return Err(perr(format!("bad thinned flag {s:?}"))),
            };
            let parent = if label.is_empty() {
                None
            } else {
                let p = *index
                    .get(&label[..label.len() - 1])
                    .ok_or_else(|| perr("label has no parent".into()))?;
                Some(p)
            };
            index.insert(label.clone(), entries.len());
            entries.push((parent, mark));
            declared.push(offspring);
            flags.push(thinned);
            previous = Some(label);
        }
        let root_mark = entries
            .first()
            .and_then(|e| e.1)
            .ok_or_else(|| Error::Parse { line: 1, message: "missing root".into() })?;
        let mut tree = Self::from_parents(root_mark, &entries)?;
        for (i, node) in tree.nodes.iter_mut().enumerate() {
            if node.offspring != declared[i] {
                return Err(Error::InvalidParameter(format!(
                    "node {i} declares {} children but has {}",
                    declared[i], node.offspring
                )));
            }
            node.thinned = flags[i];
        }
        Ok(tree)
    }
}

/// Samples `T^k`: root mark `k` with `Pois(w(k))` children; every other node
/// draws a mark from `law` and `Pois(w(mark))` children.
pub fn sample_tree<R: Rng + ?Sized>(k: usize, law: &MarkLaw, rng: &mut R, size_guard: usize) -> Result<MarkedTree> {
    if k == 0 || k > law.n() {
        return Err(Error::VertexOutOfRange { vertex: k, n: law.n() });
    }
    let mut nodes = vec![TreeNode { parent: NO_PARENT, mark: Some(k), offspring: 0, first_child: 1, thinned: false }];
    let mut i = 0;
    while i < nodes.len() {
        let x = poisson(rng, law.weight(nodes[i].mark)) as usize;
        let first = nodes.len();
        if first + x > size_guard {
            return Err(Error::SizeGuard { limit: size_guard });
        }
        nodes[i].offspring = x;
        nodes[i].first_child = first;
        for _ in 0..x {
            nodes.push(TreeNode { parent: i, mark: law.sample(rng), offspring: 0, first_child: 0, thinned: false });
        }
        i += 1;
    }
    Ok(MarkedTree { root_mark: k, nodes })
}

/// Trees `T^1, ..., T^N` with independent streams.
pub fn sample_forest(spec: &GraphSpec, stream: &RngStream) -> Result<Vec<MarkedTree>> {
    let law = MarkLaw::new(spec, None);
    (1..=spec.n)
        .map(|k| sample_tree(k, &law, &mut stream.fork("tree", k as u64).rng(), DEFAULT_SIZE_GUARD))
        .collect()
}

/// Multigraph obtained by thinning.
#[derive(Debug, Clone)]
pub struct ThinnedForest {
    /// On `[N]`; marks of thinned or absent nodes are isolated.
    pub graph: Graph,
    /// Marks of unthinned nodes, in scan order.
    pub vertices: Vec<usize>,
}

/// Thins `trees` in order and assembles edges: for unthinned `v` before
/// unthinned `w` (in scan order, `v = w` allowed), the multiplicity of
/// `{M_v, M_w}` is the number of children of `v` carrying mark `M_w`.
/// Nodes marked `†` are always thinned.
pub fn thin_forest(trees: &mut [MarkedTree], n: usize) -> Result<ThinnedForest> {
    const FREE: (usize, usize) = (usize::MAX, usize::MAX);
    let mut owner = vec![FREE; n + 1];
    let mut vertices = Vec::new();
    for (t, tree) in trees.iter_mut().enumerate() {
        for i in 0..tree.nodes.len() {
            let parent_thinned = tree.parent(i).is_some_and(|p| tree.nodes[p].thinned);
            let thinned = match tree.nodes[i].mark {
                None => true,
                Some(m) => {
                    if m == 0 || m > n {
                        return Err(Error::VertexOutOfRange { vertex: m, n });
                    }
                    parent_thinned || owner[m] != FREE
                }
            };
            tree.nodes[i].thinned = thinned;
            if !thinned {
                let m = tree.nodes[i].mark.unwrap();
                owner[m] = (t, i);
                vertices.push(m);
            }
        }
    }
    let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
    for (t, tree) in trees.iter().enumerate() {
        for (i, node) in tree.nodes.iter().enumerate() {
            if node.thinned {
                continue;
            }
            let mv = node.mark.unwrap();
            for c in tree.children(i) {
                let Some(m) = tree.nodes[c].mark else { continue };
                let u = owner[m];
                if u != FREE && u >= (t, i) {
                    *edges.entry((mv.min(m), mv.max(m))).or_default() += 1;
                }
            }
        }
    }
    let mut list: Vec<_> = edges.into_iter().map(|((a, b), m)| (a, b, m)).collect();
    list.sort_unstable();
    let graph = Graph::from_edges(n, list)?;
    Ok(ThinnedForest { graph, vertices })
}

/// `thin(T^k)` for one freshly sampled tree: the coupled cluster of `k`.
pub fn sample_thinned_cluster(k: usize, spec: &GraphSpec, stream: &RngStream) -> Result<ThinnedForest> {
    let law = MarkLaw::new(spec, None);
    let mut tree = [sample_tree(k, &law, &mut stream.rng(), DEFAULT_SIZE_GUARD)?];
    thin_forest(&mut tree, spec.n)
}

/// Multigraph on `[N]` from the thinned forest `T^1, ..., T^N`.
pub fn sample_forest_graph(spec: &GraphSpec, stream: &RngStream) -> Result<Graph> {
    let mut trees = sample_forest(spec, stream)?;
    let thinned = thin_forest(&mut trees, spec.n)?;
    Ok(thinned.graph.with_spec(spec.with_variant(Variant::Mnr)))
}

/// Weak limit `W*` of the weight of a random mark: Pareto with minimum
/// `beta / (1 - gamma)` and tail index `1 / gamma - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitWeight {
    pub beta: f64,
    pub gamma: f64,
}

impl LimitWeight {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0 && gamma > 0.0 && gamma < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "limit weight needs beta > 0 and 0 < gamma < 1/2 (beta = {beta}, gamma = {gamma})"
            )));
        }
        Ok(Self { beta, gamma })
    }

    pub fn x_min(&self) -> f64 {
        self.beta / (1.0 - self.gamma)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.x_min() {
            return 0.0;
        }
        let g = self.gamma;
        (1.0 - g) / g * self.x_min().powf(1.0 / g - 1.0) * x.powf(-1.0 / g)
    }

    /// `P(W* > x)`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= self.x_min() {
            1.0
        } else {
            (x / self.x_min()).powf(1.0 - 1.0 / self.gamma)
        }
    }

    pub fn median(&self) -> f64 {
        self.x_min() * 2f64.powf(self.gamma / (1.0 - self.gamma))
    }

    pub fn mean(&self) -> f64 {
        self.beta / (1.0 - 2.0 * self.gamma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1].
        let u: f64 = 1.0 - rng.random::<f64>();
        self.x_min() * u.powf(-self.gamma / (1.0 - self.gamma))
    }
}

pub fn sample_limit_weight<R: Rng + ?Sized>(lw: &LimitWeight, rng: &mut R) -> f64 {
    lw.sample(rng)
}

/// Total progeny of a GW tree whose every node has `Pois(alpha W*)` children.
pub fn sample_gw_size<R: Rng + ?Sized>(lw: &LimitWeight, alpha: f64, rng: &mut R, size_guard: usize) -> Result<usize> {
    let mut size = 0usize;
    let mut pending = 1usize;
    while pending > 0 {
        pending -= 1;
        size += 1;
        let w = lw.sample(rng);
        pending += poisson(rng, alpha * w) as usize;
        if size + pending > size_guard {
            return Err(Error::SizeGuard { limit: size_guard });
        }
    }
    Ok(size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFitOptions {
    /// Smallest size included in the CCDF fit.
    pub k_min: usize,
    /// The fit stops at the last size with at least this many exceedances.
    pub min_exceedances: usize,
    pub grid_points: usize,
    pub bootstrap: usize,
}

impl Default for TailFitOptions {
    fn default() -> Self {
        Self { k_min: 10, min_exceedances: 30, grid_points: 20, bootstrap: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub samples: usize,
    /// Log-log slope of `P(|T| > k)`.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    /// `1 - 1/gamma`.
    pub predicted_slope: f64,
    pub mean_size: f64,
    pub mean_stderr: f64,
    /// `1 / (1 - alpha beta / (1 - 2 gamma))`.
    pub predicted_mean: f64,
    pub fit_range: (usize, usize),
}

/// Log-log least-squares slope of the empirical CCDF of `sizes` on a geometric grid.
pub fn ccdf_slope(sizes: &[usize], opts: &TailFitOptions) -> Option<(f64, (usize, usize))> {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n <= opts.min_exceedances {
        return None;
    }
    // Largest k with at least min_exceedances values strictly above it.
    let k_max = sorted[n - opts.min_exceedances - 1];
    if k_max <= opts.k_min {
        return None;
    }
    let (lo, hi) = ((opts.k_min as f64).ln(), (k_max as f64).ln());
    let mut ks: Vec<usize> = (0..opts.grid_points)
        .map(|s| (lo + (hi - lo) * s as f64 / (opts.grid_points - 1) as f64).exp().round() as usize)
        .collect();
    ks.dedup();
    if ks.len() < 3 {
        return None;
    }
    let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = ks
        .iter()
        .map(|&k| ((n - sorted.partition_point(|&s| s <= k)) as f64 / n as f64).ln())
        .collect();
    Some((least_squares(&x, &y).slope, (opts.k_min, k_max)))
}

pub fn gw_tail_statistics(
    spec: &GraphSpec,
    alpha: f64,
    samples: usize,
    stream: &RngStream,
    opts: &TailFitOptions,
) -> Result<TailReport> {
    let upper = (1.0 - 2.0 * spec.gamma) / spec.beta;
    if !(alpha > 1.0 && alpha < upper) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (1, {upper})")));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let lw = LimitWeight::new(spec.beta, spec.gamma)?;
    let sizes: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|i| sample_gw_size(&lw, alpha, &mut stream.fork("gw-tree", i as u64).rng(), DEFAULT_SIZE_GUARD))
        .collect::<Result<_>>()?;
    let (slope, fit_range) = ccdf_slope(&sizes, opts)
        .ok_or_else(|| Error::Numerical("too few large trees for a tail fit".into()))?;
    let mut boot_rng = stream.fork("bootstrap", 0).rng();
    let mut boot = Vec::with_capacity(opts.bootstrap);
    let mut resample = vec![0usize; sizes.len()];
    for _ in 0..opts.bootstrap {
        for r in resample.iter_mut() {
            *r = sizes[boot_rng.random_range(0..sizes.len())];
        }
        if let Some((s, _)) = ccdf_slope(&resample, opts) {
            boot.push(s);
        }
    }
    boot.sort_by(f64::total_cmp);
    let slope_ci = if boot.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975))
    };
    let summary = Summary::of(&sizes.iter().map(|&s| s as f64).collect::<Vec<_>>());
    Ok(TailReport {
        beta: spec.beta,
        gamma: spec.gamma,
        alpha,
        samples,
        slope,
        slope_ci,
        predicted_slope: 1.0 - 1.0 / spec.gamma,
        mean_size: summary.mean,
        mean_stderr: summary.stderr,
        predicted_mean: 1.0 / (1.0 - alpha * lw.mean()),
        fit_range,
    })
}
