use proptest::prelude::*;
use rayon::prelude::*;
use subvoter_core::graphgen::{edge_prob, sample_graph, sample_graph_with, SamplingMode};
use subvoter_core::{Graph, GraphSpec, RngStream, Variant};

const PAIRS: [(usize, usize); 20] = [
    (1, 2), (1, 3), (1, 20), (2, 3), (2, 7), (3, 4), (3, 15), (4, 5), (4, 19), (5, 6),
    (5, 12), (6, 9), (7, 8), (8, 14), (9, 10), (10, 18), (11, 12), (13, 17), (16, 20), (19, 20),
];

fn frequencies(spec: &GraphSpec, mode: SamplingMode, reps: usize, purpose: &str) -> Vec<f64> {
    let stream = RngStream::new(42, purpose, 0);
    let counts = (0..reps)
        .into_par_iter()
        .map(|i| {
            let g = sample_graph_with(spec, &stream.replicate(i as u64), mode).unwrap();
            PAIRS.map(|(a, b)| usize::from(g.has_edge(a, b)))
        })
        .reduce(|| [0usize; 20], |mut a, b| {
            for k in 0..20 {
                a[k] += b[k];
            }
            a
        });
    counts.iter().map(|&c| c as f64 / reps as f64).collect()
}

#[test]
fn pair_frequencies_match_edge_probabilities() {
    let reps = 100_000;
    // beta large enough that pair probabilities are not tiny at N = 20.
    for variant in [Variant::Cl, Variant::Snr, Variant::Grg] {
        let spec = GraphSpec::new(20, 0.3, 0.3, variant).unwrap();
        for mode in [SamplingMode::Skip, SamplingMode::Enumerate] {
            let freq = frequencies(&spec, mode, reps, &format!("pairs-{variant}-{mode:?}"));
            for (k, &(a, b)) in PAIRS.iter().enumerate() {
                let p = edge_prob(a, b, &spec).unwrap().value();
                let sd = (p * (1.0 - p) / reps as f64).sqrt();
                assert!((freq[k] - p).abs() < 3.0 * sd, "{variant} {mode:?} ({a},{b}): {} vs {p}", freq[k]);
            }
        }
    }
}

#[test]
fn multigraph_multiplicities_have_poisson_means() {
    let reps = 100_000;
    let spec = GraphSpec::new(20, 0.3, 0.3, Variant::Mnr).unwrap();
    let stream = RngStream::new(43, "mnr-mult", 0);
    let sums = (0..reps)
        .into_par_iter()
        .map(|i| {
            let g = sample_graph(&spec, &stream.replicate(i as u64)).unwrap();
            let mut row = [0.0f64; 22];
            for (k, &(a, b)) in PAIRS.iter().enumerate() {
                row[k] = g.multiplicity(a, b) as f64;
            }
            row[20] = g.loops(1) as f64;
            row[21] = g.loops(2) as f64;
            row
        })
        .reduce(|| [0.0; 22], |mut a, b| {
            for k in 0..22 {
                a[k] += b[k];
            }
            a
        });
    let pairs: Vec<(usize, usize)> = PAIRS.iter().copied().chain([(1, 1), (2, 2)]).collect();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let mean = edge_prob(a, b, &spec).unwrap().value();
        let sd = (mean / reps as f64).sqrt();
        let got = sums[k] / reps as f64;
        assert!((got - mean).abs() < 3.0 * sd, "({a},{b}): {got} vs {mean}");
    }
}

#[test]
fn reproducible_across_thread_schedules() {
    let spec = GraphSpec::new(2000, 0.1, 0.4, Variant::Grg).unwrap();
    let stream = RngStream::new(5, "threads", 0);
    let serial: Vec<String> = (0..8).map(|i| sample_graph(&spec, &stream.replicate(i)).unwrap().to_text()).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let parallel: Vec<String> = pool.install(|| {
        (0..8u64).into_par_iter().map(|i| sample_graph(&spec, &stream.replicate(i)).unwrap().to_text()).collect()
    });
    assert_eq!(serial, parallel);
}

fn check_simple(g: &Graph) {
    assert!(g.is_simple());
    for v in 1..=g.n() {
        assert_eq!(g.loops(v), 0);
        for w in g.neighbors(v) {
            assert!(g.has_edge(w, v));
            assert_eq!(g.multiplicity(v, w), 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_simple_graphs_are_simple(
        n in 2usize..400,
        gamma in 0.05f64..0.45,
        frac in 0.05f64..0.95,
        variant in prop::sample::select(vec![Variant::Cl, Variant::Snr, Variant::Grg]),
        seed in any::<u64>(),
    ) {
        let beta = frac * (1.0 - 2.0 * gamma);
        let spec = GraphSpec::new(n, beta, gamma, variant).unwrap();
        let g = sample_graph(&spec, &RngStream::new(seed, "prop", 0)).unwrap();
        check_simple(&g);
        prop_assert_eq!(g.to_text(), sample_graph(&spec, &RngStream::new(seed, "prop", 0)).unwrap().to_text());
    }

    #[test]
    fn gate_rejects_supercritical(beta in 0.0f64..1.0, gamma in 0.0f64..0.6) {
        let ok = beta > 0.0 && gamma > 0.0 && beta + 2.0 * gamma < 1.0;
        prop_assert_eq!(GraphSpec::new(10, beta, gamma, Variant::Cl).is_ok(), ok);
    }
}
