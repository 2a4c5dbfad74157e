//! Exact quantities of the reversible walks behind both voter dynamics.
//!
//! Everything here works on one connected component at a time, with states
//! indexed locally `0..n` and `RateMatrix::states` mapping back to vertices.
//! Every linear solve goes through [`linalg::solve_checked`], which rejects
//! results whose residual exceeds `1e-9 ||b||_inf`.

pub mod audit;
pub mod catalog;
pub mod coalescence;
pub mod hitting;
pub mod linalg;
pub mod meeting;
pub mod spectral;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::Dynamics;

pub use audit::{bound_audit, AuditItem, AuditOptions, AuditReport, AuditStatus};
pub use coalescence::{coalescence_time, consensus_time, consensus_time_dual, ConsensusInit};
pub use hitting::{hitting_times, hitting_times_to, HittingTimes};
pub use meeting::{meeting_times, observed_meeting, MeetingTimes, ObservedMeeting};
pub use spectral::{spectral, Spectral};

/// Size limits for the exact solvers. Exceeding one is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Component size for hitting-time solves.
    pub hitting: usize,
    /// Component size for product-chain (meeting) solves.
    pub product: usize,
    /// Component size for the occupied-set coalescence chain.
    pub coalescence: usize,
    /// Component size for the two-opinion voter chain (`2^n` states).
    pub voter: usize,
    /// Component size for eigendecomposition-based mixing quantities.
    pub spectral: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { hitting: 2000, product: 64, coalescence: 7, voter: 12, spectral: 500 }
    }
}

pub(crate) fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::CapExceeded { what, size, cap });
    }
    Ok(())
}

/// Generator of a reversible chain on one component.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    /// `states[x]` is the vertex behind local state `x`.
    pub states: Vec<usize>,
    /// Off-diagonal rates `Q(x, y)`; the diagonal is zero.
    pub rates: DMatrix<f64>,
    /// `q(x) = sum_y Q(x, y)`.
    pub exit: Vec<f64>,
    /// Local states reachable in one jump, ascending.
    pub neighbors: Vec<Vec<usize>>,
    pub pi: Vec<f64>,
}

impl RateMatrix {
    /// Builds a chain from off-diagonal rates; the stationary law is recovered
    /// from detailed balance along a spanning tree and then checked on every pair.
    pub fn from_rates(states: Vec<usize>, rates: DMatrix<f64>) -> Result<Self> {
        let n = states.len();
        if rates.nrows() != n || rates.ncols() != n {
            return Err(Error::InvalidParameter("rate matrix shape does not match states".into()));
        }
        let mut rates = rates;
        for x in 0..n {
            rates[(x, x)] = 0.0;
        }
        if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter("rates must be finite and nonnegative".into()));
        }
        let neighbors: Vec<Vec<usize>> =
            (0..n).map(|x| (0..n).filter(|&y| rates[(x, y)] > 0.0).collect()).collect();
        let exit = (0..n).map(|x| rates.row(x).sum()).collect();
        let mut weight = vec![0.0; n];
        if n > 0 {
            weight[0] = 1.0;
            let mut stack = vec![0];
            while let Some(x) = stack.pop() {
                for &y in &neighbors[x] {
                    if weight[y] == 0.0 {
                        if rates[(y, x)] <= 0.0 {
                            return Err(Error::InvalidParameter("rates are not reversible".into()));
                        }
                        weight[y] = weight[x] * rates[(x, y)] / rates[(y, x)];
                        stack.push(y);
                    }
                }
            }
            if weight.contains(&0.0) {
                return Err(Error::Disconnected);
            }
        }
        let total: f64 = weight.iter().sum();
        let pi = weight.iter().map(|w| w / total).collect();
        let rm = Self { states, rates, exit, neighbors, pi };
        let residual = rm.detailed_balance_residual();
        if residual > 1e-9 {
            return Err(Error::InvalidParameter(format!("rates are not reversible (residual {residual:e})")));
        }
        Ok(rm)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    /// Local index of vertex `v`.
    pub fn local(&self, v: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == v)
    }

    /// Full generator with diagonal `-q(x)`.
    pub fn generator(&self) -> DMatrix<f64> {
        let mut g = self.rates.clone();
        for x in 0..self.len() {
            g[(x, x)] = -self.exit[x];
        }
        g
    }

    /// Conductance `c(xy) = pi(x) Q(x, y)`.
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.pi[x] * self.rates[(x, y)]
    }

    /// Edges `(x, y, c(xy))` with `x < y`.
    pub fn conductances(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            for &y in &self.neighbors[x] {
                if x < y {
                    out.push((x, y, self.conductance(x, y)));
                }
            }
        }
        out
    }

    /// `max |pi(x) Q(x, y) - pi(y) Q(y, x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            for &y in &self.neighbors[x] {
                worst = worst.max((self.conductance(x, y) - self.conductance(y, x)).abs());
            }
        }
        worst
    }

    /// `max_y |(pi Q)(y)|`.
    pub fn stationarity_residual(&self) -> f64 {
        let g = self.generator();
        (0..self.len())
            .map(|y| (0..self.len()).map(|x| self.pi[x] * g[(x, y)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Walk generator of the given dynamics on the connected vertex set `comp`.
pub fn build_generator(g: &Graph, comp: &[usize], dynamics: Dynamics, theta: f64) -> Result<RateMatrix> {
    if comp.is_empty() {
        return Err(Error::InvalidParameter("empty component".into()));
    }
    let mut states = comp.to_vec();
    states.sort_unstable();
    states.dedup();
    let n = states.len();
    let index = |v: usize| states.binary_search(&v).ok();
    let mut rates = DMatrix::zeros(n, n);
    for (x, &v) in states.iter().enumerate() {
        if v == 0 || v > g.n() {
            return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
        }
        if g.loops(v) > 0 {
            return Err(Error::InvalidParameter(format!("vertex {v} has a loop; walks need a simple graph")));
        }
        if n > 1 && g.degree(v) == 0 {
            return Err(Error::InvalidParameter(format!("vertex {v} is isolated")));
        }
        for (w, m) in g.neighbors_with_multiplicity(v) {
            if m > 1 {
                return Err(Error::InvalidParameter(format!("edge {{{v}, {w}}} is multiple; walks need a simple graph")));
            }
            let y = index(w).ok_or(Error::Disconnected)?;
            rates[(x, y)] = dynamics.rate(theta, g.degree(v), g.degree(w));
        }
    }
    let rm = RateMatrix::from_rates(states, rates)?;
    let pi = stationary(g, &rm.states, dynamics, theta);
    Ok(RateMatrix { pi, ..rm })
}

/// Closed-form stationary law: `pi ~ d^(1 - theta)` (classical) or uniform (discursive).
pub fn stationary(g: &Graph, states: &[usize], dynamics: Dynamics, theta: f64) -> Vec<f64> {
    let weights: Vec<f64> = match dynamics {
        Dynamics::Classical => states.iter().map(|&v| (g.degree(v).max(1) as f64).powf(1.0 - theta)).collect(),
        Dynamics::Discursive => vec![1.0; states.len()],
    };
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Exact summary of one component's chain. Entries whose solver cap was
/// exceeded are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainQuantities {
    pub vertices: Vec<usize>,
    pub pi: Vec<f64>,
    pub t_hit: f64,
    /// `t_hit(s) = max_x E_x T_s`, per state.
    pub t_hit_target: Vec<f64>,
    pub t_meet: Option<f64>,
    pub t_meet_pi: Option<f64>,
    pub t_coal: Option<f64>,
    /// Consensus from product Bernoulli(u), for the requested `u`.
    pub t_cons_u: Option<(f64, f64)>,
    pub t_rel: Option<f64>,
    pub t_mix: Option<f64>,
    /// `(x, y, c(xy))` in vertex labels.
    pub conductances: Vec<(usize, usize, f64)>,
}

fn capped<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn chain_quantities(rm: &RateMatrix, caps: &Caps, u: Option<f64>) -> Result<ChainQuantities> {
    let hit = hitting_times(rm, caps)?;
    let meet = capped(meeting_times(rm, caps))?;
    let t_coal = capped(coalescence_time(rm, caps))?;
    let t_cons_u = match u {
        Some(u) => capped(consensus_time(rm, ConsensusInit::Bernoulli(u), caps))?.map(|t| (u, t)),
        None => None,
    };
    let spec = capped(spectral(rm, caps))?;
    Ok(ChainQuantities {
        vertices: rm.states.clone(),
        pi: rm.pi.clone(),
        t_hit: hit.t_hit,
        t_hit_target: hit.t_hit_target.clone(),
        t_meet: meet.as_ref().map(|m| m.t_meet),
        t_meet_pi: meet.as_ref().map(|m| m.t_meet_pi),
        t_coal,
        t_cons_u,
        t_rel: spec.as_ref().map(|s| s.t_rel),
        t_mix: spec.as_ref().map(|s| s.t_mix),
        conductances: rm.conductances().into_iter().map(|(x, y, c)| (rm.states[x], rm.states[y], c)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path3() -> Graph {
        Graph::simple(3, &[(1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn single_edge_rates() {
        let g = Graph::simple(2, &[(1, 2)]).unwrap();
        for d in Dynamics::ALL {
            for theta in [-1.0, 0.0, 0.5, 2.0] {
                let rm = build_generator(&g, &[1, 2], d, theta).unwrap();
                assert_eq!((rm.rate(0, 1), rm.rate(1, 0)), (1.0, 1.0));
            }
        }
    }

    #[test]
    fn path_rates() {
        let rm = build_generator(&path3(), &[1, 2, 3], Dynamics::Classical, 0.0).unwrap();
        assert_eq!((rm.rate(1, 0), rm.rate(1, 2), rm.rate(0, 1), rm.rate(2, 1)), (0.5, 0.5, 1.0, 1.0));
        let rm = build_generator(&path3(), &[1, 2, 3], Dynamics::Discursive, 1.0).unwrap();
        assert!(rm.conductances().iter().all(|&(x, y, _)| rm.rate(x, y) == 1.0 && rm.rate(y, x) == 1.0));
    }

    #[test]
    fn star_stationary() {
        let g = Graph::simple(4, &[(1, 2), (1, 3), (1, 4)]).unwrap();
        let rm = build_generator(&g, &[1, 2, 3, 4], Dynamics::Classical, 0.0).unwrap();
        for (p, e) in rm.pi.iter().zip([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert_relative_eq!(*p, e, epsilon = 1e-15);
        }
        let rm = build_generator(&g, &[1, 2, 3, 4], Dynamics::Discursive, 7.0).unwrap();
        assert!(rm.pi.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!(rm.stationarity_residual() < 1e-12);
        let rm = build_generator(&g, &[1, 2, 3, 4], Dynamics::Classical, 1.0).unwrap();
        assert!(rm.pi.iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        let g = Graph::simple(4, &[(1, 2), (3, 4)]).unwrap();
        assert!(matches!(build_generator(&g, &[1, 2, 3], Dynamics::Classical, 0.0), Err(Error::Disconnected)));
        let multi = Graph::from_edges(2, [(1, 2, 2)]).unwrap();
        assert!(build_generator(&multi, &[1, 2], Dynamics::Classical, 0.0).is_err());
        let iso = Graph::simple(3, &[(1, 2)]).unwrap();
        assert!(build_generator(&iso, &[3], Dynamics::Classical, 0.0).unwrap().len() == 1);
    }

    #[test]
    fn from_rates_rejects_irreversible() {
        // A 3-cycle with a drift has no detailed-balance solution.
        let rates = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0]);
        assert!(RateMatrix::from_rates(vec![1, 2, 3], rates).is_err());
    }
}
