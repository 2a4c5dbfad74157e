//! Sampling from the rank-one inhomogeneous random graph class.
//!
//! All variants share the Chung-Lu kernel `p_ij = min(beta N^(2 gamma - 1) i^-gamma j^-gamma, 1)`.
//! The simple variants transform it into an edge probability; the multigraph
//! variant uses Poisson multiplicities with mean `w(i) w(j) / w([N])`, which
//! equals the untruncated kernel because `w(i)` is proportional to `i^-gamma`.
//!
//! Two samplers produce the same law:
//!
//! * [`SamplingMode::Skip`] (default) walks each row `i` with geometric jumps
//!   bounded by the current (row-decreasing) probability and accepts candidates
//!   by thinning, so the cost is `O(N + |E|)` in expectation. For the multigraph
//!   it draws the row total from a Poisson law and splits it over `j > i` by the
//!   mark law, which is the Poisson splitting identity.
//! * [`SamplingMode::Enumerate`] visits all `N (N - 1) / 2` pairs. `O(N^2)`;
//!   practical up to a few times `10^4` vertices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec, Variant};
use crate::rng::{poisson, RngStream};

/// The loop mean of the multigraph variant is `LOOP_MEAN_FACTOR * w(i)^2 / w([N])`.
/// Not halved, so that vertex `k` has `Pois(w(k))` incident edges with loops counted once.
pub const LOOP_MEAN_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    Skip,
    Enumerate,
}

/// Law of the pair `{i, j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairLaw {
    /// Edge present with this probability (simple variants).
    Bernoulli(f64),
    /// Poisson multiplicity with this mean (multigraph variant). Not a probability.
    PoissonMean(f64),
}

impl PairLaw {
    pub fn value(self) -> f64 {
        match self {
            PairLaw::Bernoulli(p) | PairLaw::PoissonMean(p) => p,
        }
    }
}

/// Precomputed vertex weights `w(i) = beta N^(2 gamma - 1) i^-gamma sum_j j^-gamma`.
#[derive(Debug, Clone)]
pub struct Weights {
    n: usize,
    gamma: f64,
    scale: f64,
    /// `prefix[k] = sum_{j <= k} j^-gamma`, `prefix[0] = 0`.
    prefix: Vec<f64>,
}

impl Weights {
    pub fn new(spec: &GraphSpec) -> Self {
        Self::from_parts(spec.n, spec.beta, spec.gamma)
    }

    pub fn from_parts(n: usize, beta: f64, gamma: f64) -> Self {
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for j in 1..=n {
            acc += (j as f64).powf(-gamma);
            prefix.push(acc);
        }
        let scale = beta * (n as f64).powf(2.0 * gamma - 1.0);
        Self { n, gamma, scale, prefix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `beta N^(2 gamma - 1)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `sum_{j=1}^N j^-gamma`.
    pub fn normalizer(&self) -> f64 {
        self.prefix[self.n]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.scale * (i as f64).powf(-self.gamma) * self.normalizer()
    }

    /// `w([N])`.
    pub fn total(&self) -> f64 {
        self.scale * self.normalizer() * self.normalizer()
    }

    /// Untruncated kernel `beta N^(2 gamma - 1) (i j)^-gamma`, which is also `w(i) w(j) / w([N])`.
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.scale * ((i as f64) * (j as f64)).powf(-self.gamma)
    }

    /// Mass of the law `P(M = m) ~ m^-gamma` on `m <= k`.
    pub fn mark_cdf(&self, k: usize) -> f64 {
        self.prefix[k.min(self.n)] / self.normalizer()
    }

    /// Draws `m` in `(lo, n]` with probability proportional to `m^-gamma`.
    pub fn sample_above<R: Rng + ?Sized>(&self, rng: &mut R, lo: usize) -> usize {
        let base = self.prefix[lo];
        let target = base + rng.random::<f64>() * (self.prefix[self.n] - base);
        // First index whose prefix exceeds target.
        let k = self.prefix.partition_point(|&p| p <= target);
        k.clamp(lo + 1, self.n)
    }
}

fn check_vertex(v: usize, n: usize) -> Result<()> {
    if v == 0 || v > n {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    Ok(())
}

/// Chung-Lu probability `min(beta N^(2 gamma - 1) i^-gamma j^-gamma, 1)`.
pub fn chung_lu_probability(i: usize, j: usize, spec: &GraphSpec) -> f64 {
    let p = spec.beta * (spec.n as f64).powf(2.0 * spec.gamma - 1.0) * ((i as f64) * (j as f64)).powf(-spec.gamma);
    p.min(1.0)
}

fn transform(variant: Variant, p: f64) -> f64 {
    match variant {
        Variant::Cl => p,
        Variant::Snr => -(-p).exp_m1(),
        Variant::Grg => p / (1.0 + p),
        Variant::Mnr => unreachable!("multigraph pairs have no probability"),
    }
}

/// Pair law of `{i, j}`; `i == j` is only meaningful for the multigraph (loop mean).
pub fn edge_prob(i: usize, j: usize, spec: &GraphSpec) -> Result<PairLaw> {
    check_vertex(i, spec.n)?;
    check_vertex(j, spec.n)?;
    if spec.variant == Variant::Mnr {
        let w = Weights::new(spec);
        let mean = if i == j { LOOP_MEAN_FACTOR * w.kernel(i, i) } else { w.kernel(i, j) };
        return Ok(PairLaw::PoissonMean(mean));
    }
    if i == j {
        return Err(Error::SelfPair(i));
    }
    Ok(PairLaw::Bernoulli(transform(spec.variant, chung_lu_probability(i, j, spec))))
}

/// `w(i)`.
pub fn weight(i: usize, spec: &GraphSpec) -> Result<f64> {
    check_vertex(i, spec.n)?;
    Ok(Weights::new(spec).get(i))
}

/// `w([N])`.
pub fn total_weight(spec: &GraphSpec) -> f64 {
    Weights::new(spec).total()
}

pub fn sample_graph(spec: &GraphSpec, stream: &RngStream) -> Result<Graph> {
    sample_graph_with(spec, stream, SamplingMode::Skip)
}

pub fn sample_graph_with(spec: &GraphSpec, stream: &RngStream, mode: SamplingMode) -> Result<Graph> {
    spec.validate()?;
    let mut rng = stream.rng();
    let edges = match (spec.variant, mode) {
        (Variant::Mnr, SamplingMode::Skip) => multigraph_rows(spec, &mut rng),
        (Variant::Mnr, SamplingMode::Enumerate) => multigraph_pairs(spec, &mut rng),
        (_, SamplingMode::Skip) => simple_rows(spec, &mut rng),
        (_, SamplingMode::Enumerate) => simple_pairs(spec, &mut rng),
    };
    Ok(Graph::from_edges(spec.n, edges)?.with_spec(*spec))
}

fn simple_pairs<R: Rng>(spec: &GraphSpec, rng: &mut R) -> Vec<(usize, usize, u32)> {
    let mut edges = Vec::new();
    for i in 1..=spec.n {
        for j in i + 1..=spec.n {
            let q = transform(spec.variant, chung_lu_probability(i, j, spec));
            if rng.random::<f64>() < q {
                edges.push((i, j, 1));
            }
        }
    }
    edges
}

fn simple_rows<R: Rng>(spec: &GraphSpec, rng: &mut R) -> Vec<(usize, usize, u32)> {
    let n = spec.n;
    let q = |i: usize, j: usize| transform(spec.variant, chung_lu_probability(i, j, spec));
    let mut edges = Vec::new();
    for i in 1..n {
        let mut j = i + 1;
        while j <= n {
            // q(i, .) is non-increasing, so the probability at j bounds the rest of the row.
            let bound = q(i, j);
            if bound <= 0.0 {
                break;
            }
            if bound < 1.0 {
                let u: f64 = rng.random();
                let skip = ((1.0 - u).ln() / (-bound).ln_1p()).floor();
                if skip >= (n - j + 1) as f64 {
                    break;
                }
                j += skip as usize;
            }
            let accept = q(i, j) / bound;
            if accept >= 1.0 || rng.random::<f64>() < accept {
                edges.push((i, j, 1));
            }
            j += 1;
        }
    }
    edges
}

fn multigraph_pairs<R: Rng>(spec: &GraphSpec, rng: &mut R) -> Vec<(usize, usize, u32)> {
    let w = Weights::new(spec);
    let mut edges = Vec::new();
    for i in 1..=spec.n {
        let loops = poisson(rng, LOOP_MEAN_FACTOR * w.kernel(i, i));
        if loops > 0 {
            edges.push((i, i, loops as u32));
        }
        for j in i + 1..=spec.n {
            let m = poisson(rng, w.kernel(i, j));
            if m > 0 {
                edges.push((i, j, m as u32));
            }
        }
    }
    edges
}

fn multigraph_rows<R: Rng>(spec: &GraphSpec, rng: &mut R) -> Vec<(usize, usize, u32)> {
    let w = Weights::new(spec);
    let n = spec.n;
    let mut edges = Vec::new();
    for i in 1..=n {
        let loops = poisson(rng, LOOP_MEAN_FACTOR * w.kernel(i, i));
        if loops > 0 {
            edges.push((i, i, loops as u32));
        }
        if i == n {
            break;
        }
        let row_mass = w.prefix[n] - w.prefix[i];
        let row_mean = w.scale * (i as f64).powf(-w.gamma) * row_mass;
        let count = poisson(rng, row_mean);
        for _ in 0..count {
            edges.push((i, w.sample_above(rng, i), 1));
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chung_lu_closed_form() {
        let spec = GraphSpec::new(100, 0.05, 0.45, Variant::Cl).unwrap();
        // 0.05 * 100^-0.1 * 2^-0.45, evaluated at 30 digits.
        let p = edge_prob(1, 2, &spec).unwrap();
        assert_eq!(p, PairLaw::Bernoulli(chung_lu_probability(1, 2, &spec)));
        assert_relative_eq!(p.value(), 0.023_094_390_570_132_186, max_relative = 1e-13);
    }

    #[test]
    fn truncation_branch_returns_one() {
        let spec = GraphSpec::new_unchecked_regime(10, 20.0, 0.1, Variant::Cl).unwrap();
        assert_eq!(edge_prob(1, 2, &spec).unwrap(), PairLaw::Bernoulli(1.0));
    }

    #[test]
    fn snr_matches_cl_to_first_order() {
        // beta chosen so that p_12 = 1e-8 up to rounding.
        let beta = 1e-8 / (4f64.powf(-0.8) * 2f64.powf(-0.1));
        let spec_cl = GraphSpec::new(4, beta, 0.1, Variant::Cl).unwrap();
        let cl = edge_prob(1, 2, &spec_cl).unwrap().value();
        let snr = edge_prob(1, 2, &spec_cl.with_variant(Variant::Snr)).unwrap().value();
        assert_relative_eq!(cl, 1e-8, max_relative = 1e-12);
        assert_relative_eq!(snr / cl, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn grg_and_snr_transforms() {
        let spec = GraphSpec::new(50, 0.2, 0.3, Variant::Cl).unwrap();
        let p = chung_lu_probability(3, 7, &spec);
        assert_relative_eq!(edge_prob(3, 7, &spec.with_variant(Variant::Grg)).unwrap().value(), p / (1.0 + p));
        assert_relative_eq!(edge_prob(3, 7, &spec.with_variant(Variant::Snr)).unwrap().value(), 1.0 - (-p).exp());
    }

    #[test]
    fn multigraph_mean_is_weight_product_over_total() {
        let spec = GraphSpec::new(40, 0.1, 0.35, Variant::Mnr).unwrap();
        let w = Weights::new(&spec);
        let law = edge_prob(4, 9, &spec).unwrap();
        assert!(matches!(law, PairLaw::PoissonMean(_)));
        assert_relative_eq!(law.value(), w.get(4) * w.get(9) / w.total(), max_relative = 1e-12);
        assert_relative_eq!(edge_prob(4, 4, &spec).unwrap().value(), w.get(4).powi(2) / w.total(), max_relative = 1e-12);
    }

    #[test]
    fn self_pair_rejected_for_simple_variants() {
        let spec = GraphSpec::new(10, 0.1, 0.3, Variant::Grg).unwrap();
        assert!(matches!(edge_prob(3, 3, &spec), Err(Error::SelfPair(3))));
        assert!(matches!(edge_prob(0, 3, &spec), Err(Error::VertexOutOfRange { .. })));
        assert!(matches!(edge_prob(3, 11, &spec), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn weight_small_case() {
        // 0.1 * 2^-0.6 * (1 + 2^-0.2), evaluated at 30 digits.
        let spec = GraphSpec::new(2, 0.1, 0.2, Variant::Cl).unwrap();
        assert_relative_eq!(weight(1, &spec).unwrap(), 0.123_410_313_288_496_46, max_relative = 1e-13);
    }

    #[test]
    fn weight_asymptotics() {
        let spec = GraphSpec::new(1_000_000, 0.1, 0.4, Variant::Mnr).unwrap();
        let w1 = weight(1, &spec).unwrap();
        let approx = spec.beta / (1.0 - spec.gamma) * (spec.n as f64).powf(spec.gamma);
        assert!((w1 / approx - 1.0).abs() < 1e-3, "ratio {}", w1 / approx);
    }

    #[test]
    fn weights_strictly_decreasing_and_total_consistent() {
        let spec = GraphSpec::new(200, 0.1, 0.3, Variant::Mnr).unwrap();
        let w = Weights::new(&spec);
        for i in 1..200 {
            assert!(w.get(i) > w.get(i + 1));
        }
        let sum: f64 = (1..=200).map(|i| w.get(i)).sum();
        assert_relative_eq!(sum, w.total(), max_relative = 1e-12);
    }

    #[test]
    fn mark_sampling_stays_above_cutoff() {
        let spec = GraphSpec::new(30, 0.1, 0.3, Variant::Mnr).unwrap();
        let w = Weights::new(&spec);
        let mut rng = RngStream::new(1, "t", 0).rng();
        for lo in [0, 5, 28, 29] {
            for _ in 0..200 {
                let m = w.sample_above(&mut rng, lo);
                assert!(m > lo && m <= 30);
            }
        }
    }

    #[test]
    fn sampled_simple_graphs_are_simple_and_reproducible() {
        for variant in [Variant::Cl, Variant::Snr, Variant::Grg] {
            let spec = GraphSpec::new(500, 0.2, 0.35, variant).unwrap();
            let s = RngStream::new(3, "graph", 0);
            let g = sample_graph(&spec, &s).unwrap();
            assert!(g.is_simple());
            assert_eq!(g, sample_graph(&spec, &s).unwrap());
            assert_ne!(g, sample_graph(&spec, &s.replicate(1)).unwrap());
        }
    }
}
