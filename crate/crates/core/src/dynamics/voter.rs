//! Voter model simulation.
//!
//! In both dynamics vertex `i` adopts the opinion of neighbour `j` at rate
//! `Q(i, j)`. Three schedulers realise this:
//!
//! * [`Scheduler::Activation`] (default). Vertex `v` activates at rate
//!   `d(v)^theta` and picks a uniform neighbour `u`. Classical: `v` copies `u`,
//!   so `i` adopts `j` at rate `d(i)^theta / d(i) = d(i)^(theta-1)`.
//!   Discursive: with probability 1/2 `v` copies `u`, otherwise `u` copies `v`.
//!   Then `i` adopts `j` either when `i` activates and picks `j` (rate
//!   `d(i)^(theta-1) / 2`) or when `j` activates and picks `i` (rate
//!   `d(j)^(theta-1) / 2`), which sums to `Q(i, j)`.
//! * [`Scheduler::ActiveEdge`] only schedules discordant ordered pairs. An
//!   update along a concordant pair changes nothing, so deleting those points
//!   from the superposed Poisson processes leaves the law of the opinion path
//!   unchanged (thinning). The rates are kept in a sum tree and refreshed for
//!   the edges around each vertex that changes opinion.
//! * [`Scheduler::PairClock`] keeps one exponential clock per ordered pair in
//!   a priority queue. It is the slow reference implementation.
//!
//! Two-opinion consensus is detected by a discordant-edge counter reaching 0,
//! unique-opinion consensus by a distinct-opinion counter reaching 1.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::local::LocalChain;
use super::sumtree::SumTree;
use super::{component_stream, require_simple, ComponentTime};
use crate::chains::ConsensusInit;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{exponential, RngStream};
use crate::structure::components;
use crate::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    #[default]
    Activation,
    ActiveEdge,
    PairClock,
}

impl std::str::FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "activation" => Ok(Scheduler::Activation),
            "active-edge" => Ok(Scheduler::ActiveEdge),
            "pair-clock" => Ok(Scheduler::PairClock),
            other => Err(Error::InvalidParameter(format!("unknown scheduler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoterConfig {
    pub dynamics: Dynamics,
    pub theta: f64,
    pub init: ConsensusInit,
    /// Simulations still running at this time are censored.
    pub horizon: Option<f64>,
    #[serde(default)]
    pub scheduler: Scheduler,
}

impl VoterConfig {
    pub fn new(dynamics: Dynamics, theta: f64, init: ConsensusInit) -> Self {
        Self { dynamics, theta, init, horizon: None, scheduler: Scheduler::Activation }
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        Self { horizon: Some(horizon), ..self }
    }

    pub fn with_scheduler(self, scheduler: Scheduler) -> Self {
        Self { scheduler, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.init.validate()?;
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta = {} must be finite", self.theta)));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!("horizon = {h} must be positive")));
            }
        }
        Ok(())
    }

    pub fn init_label(&self) -> String {
        match self.init {
            ConsensusInit::Unique => "unique".into(),
            ConsensusInit::Bernoulli(u) => format!("bernoulli({u})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Maximum over components; the horizon if any component was censored.
    pub tau_cons: f64,
    pub censored: bool,
    /// Components with at least two vertices, ordered by representative.
    pub per_component: Vec<ComponentTime>,
    pub events: u64,
    /// Wall-clock seconds; not part of any serialized record.
    #[serde(skip)]
    pub elapsed: f64,
}

pub fn simulate_voter(g: &Graph, cfg: &VoterConfig, stream: &RngStream) -> Result<SimOutcome> {
    cfg.validate()?;
    require_simple(g)?;
    let start = Instant::now();
    let comps = components(g);
    let mut index = vec![0u32; g.n() + 1];
    let mut per_component = Vec::new();
    for (comp, &rep) in comps.components.iter().zip(&comps.rep) {
        if comp.len() < 2 {
            continue;
        }
        let chain = LocalChain::build(g, comp, cfg.dynamics, cfg.theta, &mut index);
        per_component.push(run_component(&chain, cfg, &component_stream(stream, rep)));
    }
    let censored = per_component.iter().any(|c| c.censored);
    let tau_cons = per_component.iter().map(|c| c.tau).fold(0.0, f64::max);
    let events = per_component.iter().map(|c| c.events).sum();
    Ok(SimOutcome { tau_cons, censored, per_component, events, elapsed: start.elapsed().as_secs_f64() })
}

/// Simulates one component with the same stream it would get inside [`simulate_voter`].
pub fn simulate_voter_component(g: &Graph, comp: &[usize], cfg: &VoterConfig, stream: &RngStream) -> Result<ComponentTime> {
    cfg.validate()?;
    require_simple(g)?;
    let mut comp = comp.to_vec();
    comp.sort_unstable();
    if comp.is_empty() {
        return Err(Error::InvalidParameter("empty component".into()));
    }
    let mut index = vec![0u32; g.n() + 1];
    let chain = LocalChain::build(g, &comp, cfg.dynamics, cfg.theta, &mut index);
    Ok(run_component(&chain, cfg, &component_stream(stream, comp[0])))
}

struct Opinions {
    op: Vec<u32>,
    count: Vec<u32>,
    distinct: usize,
    discordant: usize,
    unique: bool,
}

impl Opinions {
    fn new(op: Vec<u32>, chain: &LocalChain, unique: bool) -> Self {
        let mut count = vec![0u32; if unique { op.len() } else { 2 }];
        for &o in &op {
            count[o as usize] += 1;
        }
        let distinct = count.iter().filter(|&&c| c > 0).count();
        let discordant =
            (0..chain.targets.len()).filter(|&e| op[chain.sources[e] as usize] != op[chain.targets[e] as usize]).count() / 2;
        Self { op, count, distinct, discordant, unique }
    }

    fn done(&self) -> bool {
        if self.unique {
            self.distinct == 1
        } else {
            self.discordant == 0
        }
    }

    /// `v` adopts `new`. Returns whether anything changed.
    fn set(&mut self, chain: &LocalChain, v: usize, new: u32) -> bool {
        let old = self.op[v];
        if old == new {
            return false;
        }
        let c = &mut self.count[old as usize];
        *c -= 1;
        if *c == 0 {
            self.distinct -= 1;
        }
        let c = &mut self.count[new as usize];
        if *c == 0 {
            self.distinct += 1;
        }
        *c += 1;
        if !self.unique {
            for &w in chain.neighbors(v) {
                let ow = self.op[w as usize];
                if ow == old {
                    self.discordant += 1;
                } else if ow == new {
                    self.discordant -= 1;
                }
            }
        }
        self.op[v] = new;
        true
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Clock(f64, usize);

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    // Reversed so that the max-heap pops the earliest clock; ties break by edge index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn run_component(chain: &LocalChain, cfg: &VoterConfig, stream: &RngStream) -> ComponentTime {
    let mut rng = stream.rng();
    let n = chain.len();
    let unique = matches!(cfg.init, ConsensusInit::Unique);
    let op: Vec<u32> = match cfg.init {
        ConsensusInit::Unique => (0..n as u32).collect(),
        ConsensusInit::Bernoulli(u) => (0..n).map(|_| u32::from(rng.random::<f64>() < u)).collect(),
    };
    let mut state = Opinions::new(op, chain, unique);
    let horizon = cfg.horizon.unwrap_or(f64::INFINITY);
    let mut t = 0.0;
    let mut events = 0u64;
    let mut censored = false;

    let discordant_rate = |state: &Opinions, e: usize| {
        if state.op[chain.sources[e] as usize] != state.op[chain.targets[e] as usize] {
            chain.rate[e]
        } else {
            0.0
        }
    };

    match cfg.scheduler {
        Scheduler::Activation => {
            let tree = SumTree::new(&chain.activation);
            let total = tree.total();
            while !state.done() {
                t += exponential(&mut rng, total);
                if t > horizon {
                    censored = true;
                    break;
                }
                events += 1;
                let v = tree.sample(&mut rng);
                let u = chain.uniform_neighbor(v, &mut rng);
                match cfg.dynamics {
                    Dynamics::Classical => {
                        state.set(chain, v, state.op[u]);
                    }
                    Dynamics::Discursive => {
                        if rng.random::<bool>() {
                            state.set(chain, v, state.op[u]);
                        } else {
                            state.set(chain, u, state.op[v]);
                        }
                    }
                }
            }
        }
        Scheduler::ActiveEdge => {
            let weights: Vec<f64> = (0..chain.targets.len()).map(|e| discordant_rate(&state, e)).collect();
            let mut tree = SumTree::new(&weights);
            while !state.done() {
                t += exponential(&mut rng, tree.total());
                if t > horizon {
                    censored = true;
                    break;
                }
                events += 1;
                let e = tree.sample(&mut rng);
                let (i, j) = (chain.sources[e] as usize, chain.targets[e] as usize);
                if state.set(chain, i, state.op[j]) {
                    for f in chain.offsets[i]..chain.offsets[i + 1] {
                        tree.set(f, discordant_rate(&state, f));
                        let r = chain.reverse[f];
                        tree.set(r, discordant_rate(&state, r));
                    }
                }
            }
        }
        Scheduler::PairClock => {
            let mut heap: BinaryHeap<Clock> =
                (0..chain.targets.len()).map(|e| Clock(exponential(&mut rng, chain.rate[e]), e)).collect();
            while !state.done() {
                let Clock(at, e) = heap.pop().expect("a connected component has edges");
                if at > horizon {
                    censored = true;
                    break;
                }
                t = at;
                events += 1;
                let (i, j) = (chain.sources[e] as usize, chain.targets[e] as usize);
                state.set(chain, i, state.op[j]);
                heap.push(Clock(t + exponential(&mut rng, chain.rate[e]), e));
            }
        }
    }
    ComponentTime {
        rep: chain.vertices[0],
        size: n,
        tau: if censored { horizon } else { t },
        censored,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::simple(3, &[(1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn single_edge_first_event_decides() {
        // On K2 the first effective update ends the run in every scheduler.
        let g = Graph::simple(2, &[(1, 2)]).unwrap();
        for scheduler in [Scheduler::Activation, Scheduler::ActiveEdge, Scheduler::PairClock] {
            let cfg = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Unique).with_scheduler(scheduler);
            let o = simulate_voter(&g, &cfg, &RngStream::new(3, "k2", 0)).unwrap();
            assert_eq!(o.per_component.len(), 1);
            assert!(o.tau_cons > 0.0 && !o.censored);
            assert_eq!(o.events, 1);
        }
    }

    #[test]
    fn horizon_censors() {
        let g = Graph::simple(4, &[(1, 2), (2, 3), (3, 4)]).unwrap();
        let cfg = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Unique).with_horizon(1e-9);
        let o = simulate_voter(&g, &cfg, &RngStream::new(3, "h", 0)).unwrap();
        assert!(o.censored);
        assert_eq!(o.tau_cons, 1e-9);
    }

    #[test]
    fn isolated_vertices_and_consensual_starts() {
        let g = Graph::simple(3, &[]).unwrap();
        let cfg = VoterConfig::new(Dynamics::Discursive, 1.0, ConsensusInit::Unique);
        let o = simulate_voter(&g, &cfg, &RngStream::new(3, "iso", 0)).unwrap();
        assert!(o.per_component.is_empty());
        assert_eq!(o.tau_cons, 0.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let g = p3();
        let s = RngStream::new(0, "x", 0);
        let bad_u = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Bernoulli(1.0));
        assert!(simulate_voter(&g, &bad_u, &s).is_err());
        let bad_h = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Unique).with_horizon(0.0);
        assert!(simulate_voter(&g, &bad_h, &s).is_err());
        let multi = Graph::from_edges(2, [(1, 2, 2)]).unwrap();
        let ok = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Unique);
        assert!(simulate_voter(&multi, &ok, &s).is_err());
    }

    #[test]
    fn same_stream_same_outcome() {
        let g = p3();
        let cfg = VoterConfig::new(Dynamics::Discursive, 0.5, ConsensusInit::Bernoulli(0.5));
        let s = RngStream::new(11, "det", 4);
        let a = simulate_voter(&g, &cfg, &s).unwrap();
        let b = simulate_voter(&g, &cfg, &s).unwrap();
        assert_eq!(a.tau_cons.to_bits(), b.tau_cons.to_bits());
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn component_runs_do_not_see_each_other() {
        let both = Graph::simple(5, &[(1, 2), (2, 3), (4, 5)]).unwrap();
        let alone = Graph::simple(5, &[(1, 2), (2, 3)]).unwrap();
        let cfg = VoterConfig::new(Dynamics::Classical, 0.0, ConsensusInit::Unique);
        for r in 0..20 {
            let s = RngStream::new(5, "indep", r);
            let a = simulate_voter(&both, &cfg, &s).unwrap();
            let b = simulate_voter(&alone, &cfg, &s).unwrap();
            assert_eq!(a.per_component[0], b.per_component[0]);
            let c = simulate_voter_component(&both, &[1, 2, 3], &cfg, &s).unwrap();
            assert_eq!(a.per_component[0], c);
        }
    }

    #[test]
    fn discordant_counter_tracks_opinions() {
        let g = Graph::simple(4, &[(1, 2), (2, 3), (3, 4), (1, 3)]).unwrap();
        let mut index = vec![0u32; 5];
        let chain = LocalChain::build(&g, &[1, 2, 3, 4], Dynamics::Classical, 0.0, &mut index);
        let mut s = Opinions::new(vec![0, 1, 0, 1], &chain, false);
        assert_eq!(s.discordant, 3);
        s.set(&chain, 1, 0);
        assert_eq!(s.discordant, 1);
        s.set(&chain, 3, 0);
        assert!(s.done());
    }
}
