//! Small connected graphs used to exercise the exact solvers.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Graph;
use crate::rng::RngStream;

pub const RANDOM_GRAPHS: usize = 20;
pub const CATALOG_SEED: u64 = 20_240_101;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub graph: Graph,
}

/// A uniformly relabelled random recursive tree on `n` vertices plus each
/// remaining pair with probability `extra`.
pub fn random_connected(n: usize, extra: f64, stream: &RngStream) -> Graph {
    let mut rng = stream.rng();
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(&mut rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = perm[rng.random_range(0..k)];
        let v = perm[k];
        edges.push((parent.min(v), parent.max(v)));
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if !edges.contains(&(i, j)) && rng.random::<f64>() < extra {
                edges.push((i, j));
            }
        }
    }
    Graph::simple(n, &edges).expect("catalog edges are valid")
}

pub fn catalog() -> Vec<CatalogEntry> {
    let named: Vec<(&str, usize, Vec<(usize, usize)>)> = vec![
        ("K2", 2, vec![(1, 2)]),
        ("P3", 3, vec![(1, 2), (2, 3)]),
        ("P4", 4, vec![(1, 2), (2, 3), (3, 4)]),
        ("K1,3", 4, vec![(1, 2), (1, 3), (1, 4)]),
        ("C4", 4, vec![(1, 2), (2, 3), (3, 4), (4, 1)]),
        ("K4", 4, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]),
    ];
    let mut out: Vec<CatalogEntry> = named
        .into_iter()
        .map(|(name, n, edges)| CatalogEntry { name: name.to_string(), graph: Graph::simple(n, &edges).unwrap() })
        .collect();
    let stream = RngStream::new(CATALOG_SEED, "catalog", 0);
    for i in 0..RANDOM_GRAPHS {
        out.push(CatalogEntry {
            name: format!("random5-{i}"),
            graph: random_connected(5, 0.5, &stream.replicate(i as u64)),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::components;

    #[test]
    fn catalog_graphs_are_connected_and_simple() {
        let c = catalog();
        assert_eq!(c.len(), 6 + RANDOM_GRAPHS);
        for entry in &c {
            assert!(entry.graph.is_simple(), "{}", entry.name);
            assert_eq!(components(&entry.graph).len(), 1, "{}", entry.name);
        }
    }
}
