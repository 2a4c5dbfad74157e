//! Event-driven Monte Carlo for the voter models and their coalescing duals.
//!
//! Every simulation runs component by component. Component `C` with minimal
//! vertex `r` draws all its randomness from `stream.fork("component", r)`, so
//! its consensus time does not depend on what else is in the graph. Isolated
//! vertices are trivially consensual and are not reported.
//!
//! Time is continuous throughout: the engines advance by exponential waiting
//! times drawn from the current total rate, which is exact by memorylessness.

pub mod coalescing;
pub mod local;
pub mod sumtree;
pub mod voter;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::RngStream;
use crate::stats::Summary;
use crate::Dynamics;

pub use coalescing::{coalesce_component, simulate_coalescing, CoalOutcome, Starts};
pub use local::LocalChain;
pub use sumtree::SumTree;
pub use voter::{simulate_voter, simulate_voter_component, Scheduler, SimOutcome, VoterConfig};

/// Time to absorption on one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTime {
    /// Minimal vertex of the component.
    pub rep: usize,
    pub size: usize,
    pub tau: f64,
    pub censored: bool,
    pub events: u64,
}

pub(crate) fn require_simple(g: &Graph) -> Result<()> {
    if g.is_simple() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "simulation needs a simple graph; collapse multi-edges and loops first".into(),
        ))
    }
}

pub(crate) fn component_stream(stream: &RngStream, rep: usize) -> RngStream {
    stream.fork("component", rep as u64)
}

/// Replicate statistics. Censored replicates are excluded from `summary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub reps: usize,
    pub censored: usize,
    pub summary: Option<Summary>,
    /// Uncensored values in replicate order.
    pub values: Vec<f64>,
}

/// Runs `f` on `stream.replicate(i)` for `i in 0..reps` in parallel. `f`
/// returns the replicate's value and whether it was censored. The result does
/// not depend on the thread count.
pub fn batch<F>(reps: usize, stream: &RngStream, f: F) -> Result<BatchStats>
where
    F: Fn(&RngStream) -> Result<(f64, bool)> + Sync,
{
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let raw: Vec<(f64, bool)> = (0..reps)
        .into_par_iter()
        .map(|i| f(&stream.replicate(i as u64)))
        .collect::<Result<_>>()?;
    let censored = raw.iter().filter(|r| r.1).count();
    let values: Vec<f64> = raw.into_iter().filter(|r| !r.1).map(|r| r.0).collect();
    let summary = (!values.is_empty()).then(|| Summary::of(&values));
    Ok(BatchStats { reps, censored, summary, values })
}

pub fn batch_voter(g: &Graph, cfg: &VoterConfig, reps: usize, stream: &RngStream) -> Result<BatchStats> {
    cfg.validate()?;
    batch(reps, stream, |s| simulate_voter(g, cfg, s).map(|o| (o.tau_cons, o.censored)))
}

pub fn batch_coalescing(
    g: &Graph,
    dynamics: Dynamics,
    theta: f64,
    starts: Starts,
    reps: usize,
    stream: &RngStream,
) -> Result<BatchStats> {
    batch(reps, stream, |s| simulate_coalescing(g, dynamics, theta, starts, s).map(|o| (o.tau_coal, false)))
}

/// One line of batch output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub variant: Option<String>,
    pub dynamics: Dynamics,
    pub theta: f64,
    pub init: String,
    pub reps: usize,
    pub censored: usize,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub q05: Option<f64>,
    pub q50: Option<f64>,
    pub q95: Option<f64>,
    pub seed: u64,
}

impl BatchRecord {
    pub fn new(g: &Graph, dynamics: Dynamics, theta: f64, init: impl Into<String>, stats: &BatchStats, seed: u64) -> Self {
        let spec = g.spec();
        let s = stats.summary.as_ref();
        Self {
            n: g.n(),
            beta: spec.map(|s| s.beta),
            gamma: spec.map(|s| s.gamma),
            variant: spec.map(|s| s.variant.to_string()),
            dynamics,
            theta,
            init: init.into(),
            reps: stats.reps,
            censored: stats.censored,
            mean: s.map(|s| s.mean),
            stderr: s.map(|s| s.stderr),
            q05: s.map(|s| s.q05),
            q50: s.map(|s| s.q50),
            q95: s.map(|s| s.q95),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_of_one_is_degenerate() {
        let s = RngStream::new(1, "b", 0);
        let b = batch(1, &s, |_| Ok((2.5, false))).unwrap();
        let sum = b.summary.unwrap();
        assert_eq!((sum.mean, sum.q05, sum.q95, sum.stderr), (2.5, 2.5, 2.5, 0.0));
    }

    #[test]
    fn batch_excludes_censored() {
        let s = RngStream::new(1, "b", 0);
        let b = batch(4, &s, |r| Ok((r.replicate as f64, r.replicate % 2 == 1))).unwrap();
        assert_eq!(b.censored, 2);
        assert_eq!(b.values, vec![0.0, 2.0]);
        assert!(batch(0, &s, |_| Ok((0.0, false))).is_err());
    }

    #[test]
    fn record_field_names() {
        let g = Graph::simple(2, &[(1, 2)]).unwrap();
        let stats = batch(3, &RngStream::new(0, "r", 0), |r| Ok((r.replicate as f64, false))).unwrap();
        let rec = BatchRecord::new(&g, Dynamics::Classical, 0.0, "unique", &stats, 9);
        let json = serde_json::to_value(&rec).unwrap();
        for key in ["N", "beta", "gamma", "variant", "dynamics", "theta", "init", "reps", "mean", "stderr", "q05", "q50", "q95", "seed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["mean"], 1.0);
    }
}
