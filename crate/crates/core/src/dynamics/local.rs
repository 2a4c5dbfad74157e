//! Compact per-component adjacency with precomputed walk rates.

use rand::Rng;

use crate::graph::Graph;
use crate::Dynamics;

#[derive(Debug, Clone)]
pub struct LocalChain {
    /// Local index to vertex.
    pub vertices: Vec<usize>,
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    /// Tail of each directed edge.
    pub sources: Vec<u32>,
    /// Index of the opposite directed edge.
    pub reverse: Vec<usize>,
    /// `Q(v, targets[e])` for the directed edge `e`.
    pub rate: Vec<f64>,
    /// Running sum of `rate` within each row.
    pub cumulative: Vec<f64>,
    /// `q(v)`.
    pub exit: Vec<f64>,
    /// `d(v)^theta`.
    pub activation: Vec<f64>,
    pub dynamics: Dynamics,
    pub theta: f64,
}

impl LocalChain {
    /// `index` is scratch space of length `g.n() + 1`, left in an unspecified state.
    pub fn build(g: &Graph, comp: &[usize], dynamics: Dynamics, theta: f64, index: &mut [u32]) -> Self {
        for (i, &v) in comp.iter().enumerate() {
            index[v] = i as u32;
        }
        let n = comp.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut rate = Vec::new();
        let mut cumulative = Vec::new();
        let mut exit = Vec::with_capacity(n);
        let mut activation = Vec::with_capacity(n);
        offsets.push(0);
        for &v in comp {
            let dv = g.degree(v);
            let mut acc = 0.0;
            for w in g.neighbors(v) {
                let r = dynamics.rate(theta, dv, g.degree(w));
                acc += r;
                targets.push(index[w]);
                rate.push(r);
                cumulative.push(acc);
            }
            offsets.push(targets.len());
            exit.push(acc);
            activation.push(if dv == 0 { 0.0 } else { (dv as f64).powf(theta) });
        }
        let mut sources = Vec::with_capacity(targets.len());
        for v in 0..n {
            sources.extend(std::iter::repeat_n(v as u32, offsets[v + 1] - offsets[v]));
        }
        // Rows are sorted because `comp` and every neighbour list are ascending.
        let reverse = (0..targets.len())
            .map(|e| {
                let (v, w) = (sources[e], targets[e] as usize);
                let row = &targets[offsets[w]..offsets[w + 1]];
                offsets[w] + row.binary_search(&v).expect("adjacency is symmetric")
            })
            .collect();
        Self { vertices: comp.to_vec(), offsets, targets, sources, reverse, rate, cumulative, exit, activation, dynamics, theta }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Uniform neighbour of `v`.
    pub fn uniform_neighbor<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> usize {
        let lo = self.offsets[v];
        self.targets[lo + rng.random_range(0..self.degree(v))] as usize
    }

    /// Neighbour `w` of `v` drawn with probability `Q(v, w) / q(v)`.
    pub fn jump_target<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> usize {
        match self.dynamics {
            // Classical rows are constant, so the law is uniform.
            Dynamics::Classical => self.uniform_neighbor(v, rng),
            Dynamics::Discursive => {
                let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
                let u = rng.random::<f64>() * self.exit[v];
                let k = self.cumulative[lo..hi].partition_point(|&c| c <= u);
                self.targets[lo + k.min(hi - lo - 1)] as usize
            }
        }
    }
}
