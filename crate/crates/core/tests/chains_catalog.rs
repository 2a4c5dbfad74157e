use subvoter_core::chains::audit::{bound_audit, AuditOptions};
use subvoter_core::chains::catalog::catalog;
use subvoter_core::chains::hitting::hitting_times_by_target;
use subvoter_core::chains::spectral::curve_is_monotone;
use subvoter_core::chains::{
    build_generator, coalescence_time, consensus_time, consensus_time_dual, hitting_times, meeting_times, observed_meeting,
    spectral, Caps, ConsensusInit, RateMatrix,
};
use subvoter_core::Dynamics;

const THETAS: [f64; 5] = [-1.0, 0.0, 0.5, 1.0, 2.0];

fn chains() -> Vec<(String, RateMatrix)> {
    let mut out = Vec::new();
    for entry in catalog() {
        let all: Vec<usize> = (1..=entry.graph.n()).collect();
        for dynamics in Dynamics::ALL {
            for theta in THETAS {
                let rm = build_generator(&entry.graph, &all, dynamics, theta).unwrap();
                out.push((format!("{} {dynamics} theta={theta}", entry.name), rm));
            }
        }
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn detailed_balance_and_stationarity() {
    for (name, rm) in chains() {
        assert!(rm.detailed_balance_residual() < 1e-12, "{name}");
        assert!(rm.stationarity_residual() < 1e-12, "{name}");
    }
}

#[test]
fn unique_consensus_equals_coalescence() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let coal = coalescence_time(&rm, &caps).unwrap();
        let cons = consensus_time(&rm, ConsensusInit::Unique, &caps).unwrap();
        assert!(rel(cons, coal) < 1e-9, "{name}: {cons} vs {coal}");
    }
}

#[test]
fn bernoulli_consensus_routes_and_sandwich() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let coal = coalescence_time(&rm, &caps).unwrap();
        for u in [0.1, 0.3, 0.5] {
            let direct = consensus_time(&rm, ConsensusInit::Bernoulli(u), &caps).unwrap();
            let dual = consensus_time_dual(&rm, ConsensusInit::Bernoulli(u), &caps).unwrap();
            assert!(rel(direct, dual) < 1e-9, "{name} u={u}: {direct} vs {dual}");
            assert!(2.0 * u * (1.0 - u) * coal <= direct * (1.0 + 1e-12), "{name} u={u}");
            assert!(direct <= coal * (1.0 + 1e-12), "{name} u={u}");
        }
    }
}

#[test]
fn hitting_time_routes_agree() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let a = hitting_times(&rm, &caps).unwrap();
        let b = hitting_times_by_target(&rm, &caps).unwrap();
        for (x, y) in a.matrix.iter().zip(b.matrix.iter()) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn mixing_curve_and_relaxation() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let s = spectral(&rm, &caps).unwrap();
        assert!(curve_is_monotone(&s.curve), "{name}");
        assert!(s.curve[0].1 < 1.0, "{name}");
        assert!(s.t_mix >= s.t_rel / (1.0 + 1.0 / std::f64::consts::LN_2) - 1e-6, "{name}");
    }
}

#[test]
fn observed_meeting_on_full_set_is_meeting() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let n = rm.len();
        let full: Vec<usize> = (0..n).collect();
        let m = meeting_times(&rm, &caps).unwrap();
        let o = observed_meeting(&rm, &full, &caps).unwrap();
        assert!(rel(o.stationary, m.t_meet_pi) < 1e-9, "{name}");
        for x in 0..n {
            for y in 0..n {
                let t = o.from_pair(x, y).unwrap();
                assert!((t - m.pair[(x, y)]).abs() <= 1e-9 * m.pair[(x, y)].max(1.0), "{name} ({x},{y})");
            }
        }
    }
}

#[test]
fn bound_audit_passes_on_catalog() {
    let caps = Caps::default();
    for (name, rm) in chains() {
        let report = bound_audit(&rm, &caps, &AuditOptions::default()).unwrap();
        let failed: Vec<&str> = report.items.iter().filter(|i| !i.passed() && i.rhs.is_finite()).map(|i| i.name.as_str()).collect();
        assert!(report.all_pass(), "{name}: {failed:?}");
    }
}
