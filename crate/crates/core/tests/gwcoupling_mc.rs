use proptest::prelude::*;
use rayon::prelude::*;
use subvoter_core::graphgen::{edge_prob, sample_graph, Weights};
use subvoter_core::gwcoupling::{
    gw_tail_statistics, sample_forest, sample_forest_graph, sample_limit_weight, sample_tree, thin_forest, LimitWeight,
    MarkLaw, TailFitOptions, DEFAULT_SIZE_GUARD,
};
use subvoter_core::stats::{least_squares, Summary};
use subvoter_core::structure::components;
use subvoter_core::{GraphSpec, RngStream, Variant};

#[test]
fn total_progeny_matches_wald_identity() {
    let spec = GraphSpec::new(100, 1e-4, 0.3, Variant::Mnr).unwrap();
    let law = MarkLaw::new(&spec, None);
    let w1 = Weights::new(&spec).get(1);
    let expected = 1.0 + w1 / (1.0 - law.mean_offspring());
    let stream = RngStream::new(21, "wald", 0);
    let sizes: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| sample_tree(1, &law, &mut stream.replicate(i).rng(), DEFAULT_SIZE_GUARD).unwrap().len() as f64)
        .collect();
    let s = Summary::of(&sizes);
    assert!(s.z_score(expected) < 3.0, "{} +- {} vs {expected}", s.mean, s.stderr);
}

#[test]
fn root_offspring_mean_is_root_weight() {
    let spec = GraphSpec::new(300, 0.1, 0.3, Variant::Mnr).unwrap();
    let law = MarkLaw::new(&spec, None);
    let weights = Weights::new(&spec);
    for k in [1usize, 17, 300] {
        let stream = RngStream::new(22, format!("root-{k}"), 0);
        let x: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|i| sample_tree(k, &law, &mut stream.replicate(i).rng(), DEFAULT_SIZE_GUARD).unwrap().nodes[0].offspring as f64)
            .collect();
        let s = Summary::of(&x);
        assert!(s.z_score(weights.get(k)) < 3.0, "k = {k}: {} vs {}", s.mean, weights.get(k));
    }
}

/// Per-pair multiplicity of the thinned forest has the multigraph mean, and
/// collapsing it gives the simple Norros-Reittu marginals.
#[test]
fn thinned_forest_pair_marginals() {
    let n = 50;
    let reps = 100_000;
    let spec = GraphSpec::new(n, 0.3, 0.3, Variant::Mnr).unwrap();
    let pairs = [(1usize, 2usize), (1, 3), (1, 50), (2, 5), (3, 4), (5, 9), (7, 30), (10, 11), (20, 40), (49, 50), (1, 1), (2, 2)];
    let stream = RngStream::new(23, "forest-pairs", 0);
    let (mult, present) = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let g = sample_forest_graph(&spec, &stream.replicate(i)).unwrap();
            let m: Vec<f64> =
                pairs.iter().map(|&(a, b)| if a == b { g.loops(a) } else { g.multiplicity(a, b) } as f64).collect();
            let p: Vec<f64> = m.iter().map(|&x| f64::from(u8::from(x > 0.0))).collect();
            (m, p)
        })
        .reduce(
            || (vec![0.0; pairs.len()], vec![0.0; pairs.len()]),
            |(mut a, mut b), (c, d)| {
                for k in 0..a.len() {
                    a[k] += c[k];
                    b[k] += d[k];
                }
                (a, b)
            },
        );
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let mean = edge_prob(a, b, &spec).unwrap().value();
        let got = mult[k] / reps as f64;
        assert!((got - mean).abs() < 3.0 * (mean / reps as f64).sqrt(), "mean ({a},{b}): {got} vs {mean}");
        if a != b {
            let p = 1.0 - (-mean).exp();
            let got = present[k] / reps as f64;
            assert!((got - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt(), "edge ({a},{b}): {got} vs {p}");
        }
    }
}

#[test]
fn truncated_tree_dominates_cluster() {
    let n = 300;
    let k = n / 2;
    let reps = 10_000u64;
    let spec = GraphSpec::new(n, 0.1, 0.3, Variant::Mnr).unwrap();
    let law = MarkLaw::new(&spec, Some(k));
    let trees: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(24, "truncated", i).rng();
            sample_tree(k, &law, &mut rng, DEFAULT_SIZE_GUARD).unwrap().len() as f64
        })
        .collect();
    // The bound holds on the event that k is the smallest vertex of its
    // cluster, i.e. the root of the k-th tree is not thinned.
    let clusters: Vec<f64> = (0..reps)
        .into_par_iter()
        .filter_map(|i| {
            let g = sample_graph(&spec, &RngStream::new(24, "cluster", i)).unwrap();
            let c = components(&g).of(k).to_vec();
            (c.iter().all(|&v| v >= k)).then_some(c.len() as f64)
        })
        .collect();
    let (t, c) = (Summary::of(&trees), Summary::of(&clusters));
    assert!(t.mean >= c.mean, "{} < {}", t.mean, c.mean);
}

#[test]
fn limit_weight_tail_and_median() {
    let lw = LimitWeight::new(0.1, 0.4).unwrap();
    let mut rng = RngStream::new(25, "limit", 0).rng();
    let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_limit_weight(&lw, &mut rng)).collect();
    assert!(xs.iter().all(|&x| x >= lw.x_min()));
    xs.sort_by(f64::total_cmp);
    let median = xs[xs.len() / 2];
    assert!((median / lw.median() - 1.0).abs() < 0.01, "{median} vs {}", lw.median());
    let (lo, hi) = (lw.x_min().ln() + 0.5, (xs[xs.len() - 1000]).ln());
    let grid: Vec<f64> = (0..20).map(|s| (lo + (hi - lo) * s as f64 / 19.0).exp()).collect();
    let y: Vec<f64> = grid
        .iter()
        .map(|&x| ((xs.len() - xs.partition_point(|&v| v <= x)) as f64 / xs.len() as f64).ln())
        .collect();
    let x: Vec<f64> = grid.iter().map(|g| g.ln()).collect();
    let slope = least_squares(&x, &y).slope;
    assert!((slope - (1.0 - 1.0 / 0.4)).abs() < 0.1, "{slope}");
}

#[test]
fn gw_mean_size_and_range() {
    let spec = GraphSpec::new(1000, 0.1, 0.4, Variant::Mnr).unwrap();
    let r = gw_tail_statistics(&spec, 1.01, 100_000, &RngStream::new(8, "acc-gw", 0), &TailFitOptions::default()).unwrap();
    assert!((r.mean_size - r.predicted_mean).abs() < 3.0 * r.mean_stderr, "{} +- {} vs {}", r.mean_size, r.mean_stderr, r.predicted_mean);
    let upper = (1.0 - 2.0 * spec.gamma) / spec.beta;
    assert!(gw_tail_statistics(&spec, upper, 10, &RngStream::new(8, "x", 0), &TailFitOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn thinning_is_inherited(n in 2usize..120, gamma in 0.05f64..0.45, frac in 0.1f64..0.9, seed in any::<u64>()) {
        let spec = GraphSpec::new(n, frac * (1.0 - 2.0 * gamma), gamma, Variant::Mnr).unwrap();
        let mut trees = sample_forest(&spec, &RngStream::new(seed, "prop-forest", 0)).unwrap();
        let thinned = thin_forest(&mut trees, n).unwrap();
        let mut seen = vec![false; n + 1];
        for tree in &trees {
            for (i, node) in tree.nodes.iter().enumerate() {
                if let Some(p) = tree.parent(i) {
                    prop_assert!(!tree.nodes[p].thinned || node.thinned);
                }
                if !node.thinned {
                    let m = node.mark.unwrap();
                    prop_assert!(!seen[m]);
                    seen[m] = true;
                }
            }
        }
        // Every vertex roots its own tree, so every mark survives exactly once.
        prop_assert_eq!(thinned.vertices.len(), n);
    }
}
