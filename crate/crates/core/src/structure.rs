//! Component structure of sampled graphs.
//!
//! A component is *big* when it contains a vertex of index at most
//! `K_gamma = N^((1 - 2 gamma) / (2 - 2 gamma)) ln N`, i.e. when its minimal
//! vertex (its representative) lies below the threshold.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec};

/// Partition of `1..=n` into connected components, ordered by representative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDecomposition {
    /// `component_id[v - 1]` is the index into `components` of the component of `v`.
    pub component_id: Vec<usize>,
    /// Ascending vertex lists.
    pub components: Vec<Vec<usize>>,
    /// Minimal vertex of each component.
    pub rep: Vec<usize>,
}

impl ComponentDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn of(&self, v: usize) -> &[usize] {
        &self.components[self.component_id[v - 1]]
    }

    pub fn id_of(&self, v: usize) -> usize {
        self.component_id[v - 1]
    }
}

/// Breadth-first labelling; scanning vertices in ascending order makes each
/// component's first vertex its minimum.
pub fn components(g: &Graph) -> ComponentDecomposition {
    let n = g.n();
    let mut component_id = vec![usize::MAX; n];
    let mut components = Vec::new();
    let mut rep = Vec::new();
    let mut queue = VecDeque::new();
    for start in 1..=n {
        if component_id[start - 1] != usize::MAX {
            continue;
        }
        let id = components.len();
        component_id[start - 1] = id;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(v) = queue.pop_front() {
            members.push(v);
            for w in g.neighbors(v) {
                if component_id[w - 1] == usize::MAX {
                    component_id[w - 1] = id;
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        rep.push(start);
        components.push(members);
    }
    ComponentDecomposition { component_id, components, rep }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "K_gamma needs 0 < gamma < 1/2, got gamma = {gamma}"
        )));
    }
    Ok(())
}

/// `K_gamma = N^((1 - 2 gamma) / (2 - 2 gamma)) ln N` (natural logarithm).
pub fn k_gamma(n: usize, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(double_star_window_low(n, gamma) * (n as f64).ln())
}

/// Lower end `N^((1 - 2 gamma) / (2 - 2 gamma))` of the double-star index window.
pub fn double_star_window_low(n: usize, gamma: f64) -> f64 {
    (n as f64).powf((1.0 - 2.0 * gamma) / (2.0 - 2.0 * gamma))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiameterMode {
    /// BFS from every vertex.
    #[default]
    Exact,
    /// Double-sweep lower bound: BFS from the representative, then from the farthest vertex found.
    TwoSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub rep: usize,
    pub size: usize,
    /// Edges counted with multiplicity, loops included.
    pub edges: usize,
    pub degree_sum: usize,
    pub diameter: usize,
    pub is_tree: bool,
    /// `|E| - |V| + 1`.
    pub surplus: usize,
    pub big: bool,
    /// Largest degree sum over the branches (components left after deleting the representative).
    pub max_branch_degree_sum: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarStats {
    pub k: usize,
    pub degree: usize,
    /// Neighbours of `k` with degree one.
    pub leaves: usize,
    /// `d(k) / (N / k)^gamma`.
    pub degree_ratio: f64,
    pub component_rep: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub n: usize,
    pub gamma: f64,
    pub k_gamma: f64,
    pub diameter_mode: DiameterMode,
    pub big_vertices: Vec<usize>,
    pub components: Vec<ComponentStats>,
    /// One entry per vertex `k <= K_gamma`.
    pub stars: Vec<StarStats>,
    pub max_diameter: usize,
    pub all_big_components_are_trees: bool,
}

impl StructureReport {
    pub fn big_components(&self) -> impl Iterator<Item = &ComponentStats> {
        self.components.iter().filter(|c| c.big)
    }
}

/// Eccentricity of `source` within its component, and the farthest vertex reached.
fn eccentricity(g: &Graph, source: usize, dist: &mut [usize], touched: &mut Vec<usize>) -> (usize, usize) {
    let mut queue = VecDeque::new();
    dist[source - 1] = 0;
    touched.push(source);
    queue.push_back(source);
    let (mut far, mut far_v) = (0, source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v - 1];
        if d > far {
            far = d;
            far_v = v;
        }
        for w in g.neighbors(v) {
            if dist[w - 1] == usize::MAX {
                dist[w - 1] = d + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    for &v in touched.iter() {
        dist[v - 1] = usize::MAX;
    }
    touched.clear();
    (far, far_v)
}

pub fn component_diameter(g: &Graph, comp: &[usize], mode: DiameterMode) -> usize {
    let mut dist = vec![usize::MAX; g.n()];
    let mut touched = Vec::new();
    component_diameter_with(g, comp, mode, &mut dist, &mut touched)
}

fn component_diameter_with(
    g: &Graph,
    comp: &[usize],
    mode: DiameterMode,
    dist: &mut [usize],
    touched: &mut Vec<usize>,
) -> usize {
    match mode {
        DiameterMode::Exact => comp.iter().map(|&v| eccentricity(g, v, dist, touched).0).max().unwrap_or(0),
        DiameterMode::TwoSweep => {
            let (_, far) = eccentricity(g, comp[0], dist, touched);
            eccentricity(g, far, dist, touched).0
        }
    }
}

/// Connected components of `comp` with its minimal vertex removed, ordered by minimum.
pub fn branches(g: &Graph, comp: &[usize]) -> Vec<Vec<usize>> {
    let Some(&root) = comp.iter().min() else {
        return Vec::new();
    };
    let members: std::collections::HashSet<usize> = comp.iter().copied().collect();
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::from([root]);
    let mut sorted: Vec<usize> = comp.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &start in &sorted {
        if seen.contains(&start) {
            continue;
        }
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        let mut branch = Vec::new();
        while let Some(v) = queue.pop_front() {
            branch.push(v);
            for w in g.neighbors(v) {
                if members.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        branch.sort_unstable();
        out.push(branch);
    }
    out
}

/// `sum_{v in comp} d(v)^eta`, `eta >= 1`.
pub fn empirical_moment(g: &Graph, comp: &[usize], eta: f64) -> Result<f64> {
    if !(eta >= 1.0) {
        return Err(Error::InvalidParameter(format!("moment order eta = {eta} must be >= 1")));
    }
    Ok(comp.iter().map(|&v| (g.degree(v) as f64).powf(eta)).sum())
}

fn leaf_count(g: &Graph, k: usize) -> usize {
    g.neighbors(k).filter(|&w| g.degree(w) == 1).count()
}

pub fn structure_report(g: &Graph, spec: &GraphSpec) -> Result<StructureReport> {
    structure_report_with(g, spec, DiameterMode::Exact)
}

pub fn structure_report_with(g: &Graph, spec: &GraphSpec, mode: DiameterMode) -> Result<StructureReport> {
    let n = g.n();
    let kg = k_gamma(n, spec.gamma)?;
    let threshold = (kg.floor() as usize).min(n);
    let decomposition = components(g);
    let mut dist = vec![usize::MAX; n];
    let mut touched = Vec::new();

    let mut stats = Vec::with_capacity(decomposition.len());
    let mut big_vertices = Vec::new();
    for (id, comp) in decomposition.components.iter().enumerate() {
        let rep = decomposition.rep[id];
        let degree_sum: usize = comp.iter().map(|&v| g.degree(v)).sum();
        let edges = degree_sum / 2;
        let surplus = edges + 1 - comp.len();
        let big = rep <= threshold;
        if big {
            big_vertices.extend_from_slice(comp);
        }
        let max_branch_degree_sum = if big {
            branches(g, comp)
                .iter()
                .map(|b| b.iter().map(|&v| g.degree(v)).sum::<usize>())
                .max()
                .unwrap_or(0)
        } else {
            0
        };
        stats.push(ComponentStats {
            rep,
            size: comp.len(),
            edges,
            degree_sum,
            diameter: component_diameter_with(g, comp, mode, &mut dist, &mut touched),
            is_tree: surplus == 0,
            surplus,
            big,
            max_branch_degree_sum,
        });
    }
    big_vertices.sort_unstable();

    let stars = (1..=threshold)
        .map(|k| StarStats {
            k,
            degree: g.degree(k),
            leaves: leaf_count(g, k),
            degree_ratio: g.degree(k) as f64 / (n as f64 / k as f64).powf(spec.gamma),
            component_rep: decomposition.rep[decomposition.id_of(k)],
        })
        .collect();

    let max_diameter = stats.iter().map(|c| c.diameter).max().unwrap_or(0);
    let all_big_components_are_trees = stats.iter().filter(|c| c.big).all(|c| c.is_tree);
    Ok(StructureReport {
        n,
        gamma: spec.gamma,
        k_gamma: kg,
        diameter_mode: mode,
        big_vertices,
        components: stats,
        stars,
        max_diameter,
        all_big_components_are_trees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoubleStarKind {
    Simple,
    Long,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleStarWitness {
    pub kind: DoubleStarKind,
    pub hubs: (usize, usize),
    pub path: Vec<usize>,
    pub hub_degrees: (usize, usize),
}

fn is_tree_component(g: &Graph, comp: &[usize]) -> bool {
    let degree_sum: usize = comp.iter().map(|&v| g.degree(v)).sum();
    degree_sum / 2 + 1 == comp.len()
}

/// First adjacent pair `x < y` with both indices in the window
/// `[N^((1 - 2 gamma) / (2 - 2 gamma)), K_gamma]` whose component is a tree.
pub fn find_simple_double_star(g: &Graph, spec: &GraphSpec) -> Result<Option<DoubleStarWitness>> {
    let n = g.n();
    let hi = (k_gamma(n, spec.gamma)?.floor() as usize).min(n);
    let lo = (double_star_window_low(n, spec.gamma).ceil() as usize).max(1);
    let decomposition = components(g);
    for x in lo..=hi {
        for y in g.neighbors(x) {
            if y <= x || y > hi {
                continue;
            }
            if is_tree_component(g, decomposition.of(x)) {
                return Ok(Some(DoubleStarWitness {
                    kind: DoubleStarKind::Simple,
                    hubs: (x, y),
                    path: vec![x, y],
                    hub_degrees: (g.degree(x), g.degree(y)),
                }));
            }
        }
    }
    Ok(None)
}

/// Lexicographically first path `(v1, v2, v3, v4)` with `v1 < v4`, both at most
/// `K_gamma`, and `d(v2) = d(v3) = 2`.
pub fn find_long_double_star(g: &Graph, spec: &GraphSpec) -> Result<Option<DoubleStarWitness>> {
    let n = g.n();
    let hi = (k_gamma(n, spec.gamma)?.floor() as usize).min(n);
    let other = |v: usize, not: usize| g.neighbors(v).find(|&w| w != not);
    let mut best: Option<[usize; 4]> = None;
    for v2 in 1..=n {
        if g.degree(v2) != 2 || g.neighbor_count(v2) != 2 {
            continue;
        }
        for v3 in g.neighbors(v2) {
            if g.degree(v3) != 2 || g.neighbor_count(v3) != 2 {
                continue;
            }
            let (Some(v1), Some(v4)) = (other(v2, v3), other(v3, v2)) else {
                continue;
            };
            if v1 == v4 || v1 > hi || v4 > hi {
                continue;
            }
            let path = if v1 < v4 { [v1, v2, v3, v4] } else { [v4, v3, v2, v1] };
            if best.is_none_or(|b| path < b) {
                best = Some(path);
            }
        }
    }
    Ok(best.map(|p| DoubleStarWitness {
        kind: DoubleStarKind::Long,
        hubs: (p[0], p[3]),
        path: p.to_vec(),
        hub_degrees: (g.degree(p[0]), g.degree(p[3])),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Variant;
    use approx::assert_relative_eq;

    fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (2..=leaves + 1).map(|v| (1, v)).collect();
        Graph::simple(leaves + 1, &edges).unwrap()
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::simple(n, &edges).unwrap()
    }

    fn spec(n: usize, gamma: f64) -> GraphSpec {
        GraphSpec::new(n, 0.05, gamma, Variant::Cl).unwrap()
    }

    #[test]
    fn components_small_cases() {
        let empty = Graph::simple(3, &[]).unwrap();
        assert_eq!(components(&empty).components, vec![vec![1], vec![2], vec![3]]);
        let g = Graph::simple(3, &[(1, 2)]).unwrap();
        let c = components(&g);
        assert_eq!(c.components, vec![vec![1, 2], vec![3]]);
        assert_eq!(c.rep, vec![1, 3]);
        assert_eq!(c.of(2), &[1, 2]);
    }

    #[test]
    fn k_gamma_values() {
        // 10^(4/3) ln 10^4, evaluated at 30 digits.
        assert_relative_eq!(k_gamma(10_000, 0.25).unwrap(), 198.430_768_043_866_5, max_relative = 1e-12);
        assert!(k_gamma(100, 0.5).is_err());
        assert!(k_gamma(100, 0.0).is_err());
        let mut last = f64::INFINITY;
        for g in [0.05, 0.1, 0.2, 0.3, 0.4, 0.49] {
            let k = k_gamma(10_000, g).unwrap();
            assert!(k < last);
            last = k;
        }
    }

    #[test]
    fn star_report() {
        let g = star(5);
        let r = structure_report(&g, &spec(6, 0.2)).unwrap();
        assert_eq!(r.components.len(), 1);
        let c = &r.components[0];
        assert_eq!((c.diameter, c.degree_sum, c.is_tree, c.surplus), (2, 10, true, 0));
        assert_eq!(r.stars[0].leaves, 5);
        assert_eq!(r.stars[0].degree, 5);
    }

    #[test]
    fn path_and_triangle() {
        let r = structure_report(&path(4), &spec(4, 0.2)).unwrap();
        assert_eq!((r.components[0].diameter, r.components[0].surplus), (3, 0));
        let tri = Graph::simple(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let r = structure_report(&tri, &spec(3, 0.2)).unwrap();
        assert_eq!((r.components[0].surplus, r.components[0].is_tree), (1, false));
        for n in 2..12 {
            assert_eq!(component_diameter(&path(n), &(1..=n).collect::<Vec<_>>(), DiameterMode::Exact), n - 1);
            assert_eq!(component_diameter(&path(n), &(1..=n).collect::<Vec<_>>(), DiameterMode::TwoSweep), n - 1);
        }
    }

    #[test]
    fn branches_of_small_trees() {
        let b = branches(&star(3), &[1, 2, 3, 4]);
        assert_eq!(b, vec![vec![2], vec![3], vec![4]]);
        assert_eq!(branches(&path(3), &[1, 2, 3]), vec![vec![2, 3]]);
    }

    #[test]
    fn moments() {
        let g = star(3);
        assert_eq!(empirical_moment(&g, &[1, 2, 3, 4], 2.0).unwrap(), 12.0);
        assert_eq!(empirical_moment(&g, &[1, 2, 3, 4], 1.0).unwrap(), 6.0);
        assert!(empirical_moment(&g, &[1], 0.5).is_err());
    }

    #[test]
    fn simple_double_star_fixture() {
        // N = 10^4, gamma = 1/4: window is [21.5, 198.4].
        let s = spec(10_000, 0.25);
        let g = Graph::simple(10_000, &[(30, 40), (30, 500), (40, 600)]).unwrap();
        let w = find_simple_double_star(&g, &s).unwrap().unwrap();
        assert_eq!(w.hubs, (30, 40));
        assert_eq!(w.hub_degrees, (2, 2));
        let edgeless = Graph::simple(10_000, &[]).unwrap();
        assert!(find_simple_double_star(&edgeless, &s).unwrap().is_none());
        // Outside the window: not reported.
        let low = Graph::simple(10_000, &[(3, 4)]).unwrap();
        assert!(find_simple_double_star(&low, &s).unwrap().is_none());
        // Not a tree: not reported.
        let cyc = Graph::simple(10_000, &[(30, 40), (40, 50), (30, 50)]).unwrap();
        assert!(find_simple_double_star(&cyc, &s).unwrap().is_none());
    }

    #[test]
    fn long_double_star_fixture() {
        let s = spec(10_000, 0.25);
        let mut edges = vec![(1, 500), (500, 600), (600, 2)];
        edges.extend((700..705).map(|v| (1, v)));
        edges.extend((800..805).map(|v| (2, v)));
        let g = Graph::simple(10_000, &edges).unwrap();
        let w = find_long_double_star(&g, &s).unwrap().unwrap();
        assert_eq!(w.path, vec![1, 500, 600, 2]);
        assert_eq!(w.hub_degrees, (6, 6));
        assert!(find_long_double_star(&star(5), &spec(6, 0.2)).unwrap().is_none());
    }
}
