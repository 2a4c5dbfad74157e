//! Coalescing random walks.
//!
//! Walkers are stored as a set of occupied vertices; a walker jumping onto an
//! occupied vertex merges with it on arrival. Occupied vertex `v` fires at rate
//! `q(v)` and jumps to `w` with probability `Q(v, w) / q(v)`. The firing
//! vertex is drawn from a sum tree over the occupied exit rates, which is the
//! superposition of the per-walker exponential clocks.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::local::LocalChain;
use super::sumtree::SumTree;
use super::{component_stream, require_simple, ComponentTime};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{exponential, RngStream};
use crate::structure::components;
use crate::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Starts {
    /// One walker on every vertex.
    All,
    /// Two walkers at the given vertices, which must share a component.
    Pair(usize, usize),
    /// Per component, two walkers at independent draws from the stationary law.
    StationaryPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalOutcome {
    /// Maximum over components.
    pub tau_coal: f64,
    /// `events` counts jumps.
    pub per_component: Vec<ComponentTime>,
    pub jumps: u64,
    /// Jumps that landed on an occupied vertex.
    pub merges: u64,
    #[serde(skip)]
    pub elapsed: f64,
}

pub fn simulate_coalescing(g: &Graph, dynamics: Dynamics, theta: f64, starts: Starts, stream: &RngStream) -> Result<CoalOutcome> {
    require_simple(g)?;
    let start = Instant::now();
    let comps = components(g);
    let mut index = vec![0u32; g.n() + 1];
    let mut per_component = Vec::new();
    let mut merges = 0;
    let mut run = |comp: &[usize], rep: usize, init: LocalStart| {
        let chain = LocalChain::build(g, comp, dynamics, theta, &mut index);
        let (ct, m) = run_component(&chain, init, &component_stream(stream, rep));
        merges += m;
        per_component.push(ct);
    };
    match starts {
        Starts::Pair(x, y) => {
            for v in [x, y] {
                if v == 0 || v > g.n() {
                    return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
                }
            }
            if comps.id_of(x) != comps.id_of(y) {
                return Err(Error::InvalidParameter(format!("vertices {x} and {y} lie in different components")));
            }
            let id = comps.id_of(x);
            let comp = &comps.components[id];
            let local = |v: usize| comp.binary_search(&v).expect("vertex is in its component");
            run(comp, comps.rep[id], LocalStart::Pair(local(x), local(y)));
        }
        Starts::All | Starts::StationaryPair => {
            for (comp, &rep) in comps.components.iter().zip(&comps.rep) {
                if comp.len() < 2 {
                    continue;
                }
                run(comp, rep, if starts == Starts::All { LocalStart::All } else { LocalStart::Stationary });
            }
        }
    }
    let tau_coal = per_component.iter().map(|c| c.tau).fold(0.0, f64::max);
    let jumps = per_component.iter().map(|c| c.events).sum();
    Ok(CoalOutcome { tau_coal, per_component, jumps, merges, elapsed: start.elapsed().as_secs_f64() })
}

/// Coalescence time of walkers started on every vertex of `comp`, using the
/// stream `comp` would get inside [`simulate_coalescing`].
pub fn coalesce_component(g: &Graph, comp: &[usize], dynamics: Dynamics, theta: f64, stream: &RngStream) -> Result<ComponentTime> {
    require_simple(g)?;
    let mut comp = comp.to_vec();
    comp.sort_unstable();
    if comp.is_empty() {
        return Err(Error::InvalidParameter("empty component".into()));
    }
    let mut index = vec![0u32; g.n() + 1];
    let chain = LocalChain::build(g, &comp, dynamics, theta, &mut index);
    Ok(run_component(&chain, LocalStart::All, &component_stream(stream, comp[0])).0)
}

fn stationary_draw<R: Rng + ?Sized>(chain: &LocalChain, weights: &SumTree, rng: &mut R) -> usize {
    match chain.dynamics {
        Dynamics::Discursive => rng.random_range(0..chain.len()),
        Dynamics::Classical => weights.sample(rng),
    }
}

#[derive(Clone, Copy)]
enum LocalStart {
    All,
    Pair(usize, usize),
    Stationary,
}

/// Returns the component time and the merge count.
fn run_component(chain: &LocalChain, init: LocalStart, stream: &RngStream) -> (ComponentTime, u64) {
    let mut rng = stream.rng();
    let n = chain.len();
    let mut occupied = vec![false; n];
    let mut tree = SumTree::zeros(n);
    let starts: Vec<usize> = match init {
        LocalStart::All => (0..n).collect(),
        LocalStart::Stationary => {
            // Classical pi is proportional to d(v)^(1 - theta).
            let w: Vec<f64> = (0..n).map(|v| (chain.degree(v) as f64).powf(1.0 - chain.theta)).collect();
            let weights = SumTree::new(&w);
            let x = stationary_draw(chain, &weights, &mut rng);
            let y = stationary_draw(chain, &weights, &mut rng);
            vec![x, y]
        }
        LocalStart::Pair(x, y) => vec![x, y],
    };
    let mut count = 0usize;
    for v in starts {
        if !occupied[v] {
            occupied[v] = true;
            tree.set(v, chain.exit[v]);
            count += 1;
        }
    }
    let mut t = 0.0;
    let mut jumps = 0u64;
    let mut merges = 0u64;
    while count > 1 {
        t += exponential(&mut rng, tree.total());
        let v = tree.sample(&mut rng);
        let w = chain.jump_target(v, &mut rng);
        jumps += 1;
        occupied[v] = false;
        tree.set(v, 0.0);
        if occupied[w] {
            count -= 1;
            merges += 1;
        } else {
            occupied[w] = true;
            tree.set(w, chain.exit[w]);
        }
    }
    (ComponentTime { rep: chain.vertices[0], size: n, tau: t, censored: false, events: jumps }, merges)
}
