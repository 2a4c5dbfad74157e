//! Consensus-time exponents and the Monte Carlo scaling harness.
//!
//! The exponent functions give `c` in `E[tau_cons] = N^(c + o(1))` as a
//! piecewise-linear function of `theta` for fixed `gamma`, either for the
//! whole graph or for the component of vertex 1 alone.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::ConsensusInit;
use crate::dynamics::{batch, coalesce_component, simulate_coalescing, simulate_voter, BatchStats, Scheduler, Starts, VoterConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec, Variant};
use crate::graphgen::{edge_prob, sample_graph};
use crate::rng::RngStream;
use crate::stats::{least_squares, quantile_sorted, Summary};
use crate::structure::{components, find_long_double_star, find_simple_double_star, DoubleStarWitness};
use crate::Dynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Global,
    Component1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub gamma: f64,
    pub theta: f64,
    pub dynamics: Dynamics,
    pub scope: Scope,
}

impl ExponentQuery {
    pub fn new(gamma: f64, theta: f64, dynamics: Dynamics, scope: Scope) -> Self {
        Self { gamma, theta, dynamics, scope }
    }
}

pub fn theoretical_exponent(q: &ExponentQuery) -> Result<f64> {
    let g = q.gamma;
    if !(g > 0.0 && g < 0.5) {
        return Err(Error::InvalidParameter(format!("gamma = {g} must lie in (0, 1/2)")));
    }
    if !q.theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta = {} must be finite", q.theta)));
    }
    let t = q.theta;
    let c = match (q.dynamics, q.scope) {
        (Dynamics::Classical, Scope::Global) => {
            if t >= 1.0 {
                g
            } else if t > 1.0 / (2.0 - 2.0 * g) {
                g * t
            } else if t >= 0.0 {
                g / (2.0 - 2.0 * g)
            } else {
                g * (1.0 - t) / (2.0 - 2.0 * g)
            }
        }
        (Dynamics::Discursive, Scope::Global) => {
            if t >= (3.0 - 4.0 * g) / (2.0 - 2.0 * g) {
                g / (2.0 - 2.0 * g)
            } else if t > 1.0 {
                g * (2.0 - t)
            } else if t >= 2.0 * g {
                g
            } else {
                g * (2.0 - t) / (2.0 - 2.0 * g)
            }
        }
        (Dynamics::Classical, Scope::Component1) => {
            if t >= 1.0 {
                g
            } else if t > g / (1.0 - g) {
                g * t
            } else if t >= 0.0 {
                g * g / (1.0 - g)
            } else {
                g * g * (1.0 - t) / (1.0 - g)
            }
        }
        (Dynamics::Discursive, Scope::Component1) => {
            if t >= (2.0 - 3.0 * g) / (1.0 - g) {
                g * g / (1.0 - g)
            } else if t > 1.0 {
                g * (2.0 - t)
            } else if t >= 3.0 - 1.0 / g {
                g
            } else {
                g * g * (2.0 - t) / (1.0 - g)
            }
        }
    };
    Ok(c)
}

/// Thresholds in `theta` where the formula for `(dynamics, scope)` changes, ascending.
pub fn branch_points(gamma: f64, dynamics: Dynamics, scope: Scope) -> Vec<f64> {
    let g = gamma;
    match (dynamics, scope) {
        (Dynamics::Classical, Scope::Global) => vec![0.0, 1.0 / (2.0 - 2.0 * g), 1.0],
        (Dynamics::Discursive, Scope::Global) => vec![2.0 * g, 1.0, (3.0 - 4.0 * g) / (2.0 - 2.0 * g)],
        (Dynamics::Classical, Scope::Component1) => vec![0.0, g / (1.0 - g), 1.0],
        (Dynamics::Discursive, Scope::Component1) => vec![3.0 - 1.0 / g, 1.0, (2.0 - 3.0 * g) / (1.0 - g)],
    }
}

/// Global exponent in terms of the degree power-law exponent `tau = 1 + 1/gamma`.
pub fn exponent_in_tau(tau: f64, theta: f64, dynamics: Dynamics) -> Result<f64> {
    if !(tau > 3.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must exceed 3")));
    }
    theoretical_exponent(&ExponentQuery::new(1.0 / (tau - 1.0), theta, dynamics, Scope::Global))
}

/// `lo, lo*factor, lo*factor^2, ...` up to `hi` inclusive.
pub fn geometric_grid(lo: usize, hi: usize, factor: usize) -> Result<Vec<usize>> {
    if lo < 2 || factor < 2 || hi < lo {
        return Err(Error::InvalidParameter(format!("grid {lo}:{hi}:x{factor} needs 2 <= lo <= hi and factor >= 2")));
    }
    let mut grid = vec![lo];
    while let Some(next) = grid.last().unwrap().checked_mul(factor) {
        if next > hi {
            break;
        }
        grid.push(next);
    }
    Ok(grid)
}

/// What is timed at each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "u")]
pub enum Observable {
    /// Voter model from independent Bernoulli(u) opinions.
    Bernoulli(f64),
    /// Unique opinions, timed through the coalescing dual.
    Unique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub beta: f64,
    pub gamma: f64,
    pub variant: Variant,
    pub dynamics: Dynamics,
    pub theta: f64,
    pub grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub observable: Observable,
    pub tolerance: f64,
    pub horizon: Option<f64>,
    /// One graph per grid point instead of a fresh graph per replicate.
    pub quenched: bool,
    pub scheduler: Scheduler,
    pub bootstrap: usize,
}

pub const MIN_GRID_POINTS: usize = 4;
pub const MIN_SCALING_REPS: usize = 50;

impl ScalingConfig {
    pub fn new(beta: f64, gamma: f64, dynamics: Dynamics, theta: f64, grid: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            beta,
            gamma,
            variant: Variant::Cl,
            dynamics,
            theta,
            grid,
            reps,
            seed,
            observable: Observable::Bernoulli(0.5),
            tolerance: 0.15,
            horizon: None,
            quenched: false,
            scheduler: Scheduler::Activation,
            bootstrap: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "scaling grid needs at least {MIN_GRID_POINTS} points, got {}",
                self.grid.len()
            )));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("scaling grid must be strictly increasing".into()));
        }
        if self.reps < MIN_SCALING_REPS {
            return Err(Error::InvalidParameter(format!("scaling needs at least {MIN_SCALING_REPS} reps, got {}", self.reps)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance = {} must be positive", self.tolerance)));
        }
        if let Observable::Bernoulli(u) = self.observable {
            ConsensusInit::Bernoulli(u).validate()?;
        }
        for &n in &self.grid {
            self.spec(n)?;
        }
        Ok(())
    }

    pub fn spec(&self, n: usize) -> Result<GraphSpec> {
        GraphSpec::new(n, self.beta, self.gamma, self.variant)
    }

    pub fn theory(&self) -> Result<f64> {
        theoretical_exponent(&ExponentQuery::new(self.gamma, self.theta, self.dynamics, Scope::Global))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub reps: usize,
    pub censored: usize,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub config: ScalingConfig,
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln mean` against `ln N`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Same fit on medians, for diagnostics only.
    pub median_slope: f64,
    pub theory: f64,
    pub tolerance: f64,
    /// `|slope - theory| <= tolerance`.
    pub verdict: bool,
    pub censored: usize,
}

fn replicate_graph(cfg: &ScalingConfig, n: usize, i: u64) -> Result<Graph> {
    let index = if cfg.quenched { 0 } else { i };
    let g = sample_graph(&cfg.spec(n)?, &RngStream::new(cfg.seed, format!("scaling-graph-n{n}"), index))?;
    Ok(if g.is_simple() { g } else { g.collapse() })
}

fn scaling_point(cfg: &ScalingConfig, n: usize) -> Result<(ScalingPoint, BatchStats)> {
    let stream = RngStream::new(cfg.seed, format!("scaling-sim-n{n}"), 0);
    let stats = batch(cfg.reps, &stream, |s| {
        let g = replicate_graph(cfg, n, s.replicate)?;
        match cfg.observable {
            Observable::Bernoulli(u) => {
                let mut vc = VoterConfig::new(cfg.dynamics, cfg.theta, ConsensusInit::Bernoulli(u)).with_scheduler(cfg.scheduler);
                vc.horizon = cfg.horizon;
                simulate_voter(&g, &vc, s).map(|o| (o.tau_cons, o.censored))
            }
            Observable::Unique => simulate_coalescing(&g, cfg.dynamics, cfg.theta, Starts::All, s).map(|o| (o.tau_coal, false)),
        }
    })?;
    let summary = stats.summary.clone().ok_or(Error::Censored { censored: stats.censored, reps: stats.reps })?;
    let point = ScalingPoint {
        n,
        reps: stats.reps,
        censored: stats.censored,
        mean: summary.mean,
        stderr: summary.stderr,
        median: summary.q50,
        q05: summary.q05,
        q95: summary.q95,
        values: stats.values.clone(),
    };
    Ok((point, stats))
}

fn log_slope(grid: &[usize], ys: &[f64]) -> crate::stats::LineFit {
    let x: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    least_squares(&x, &y)
}

/// Percentile bootstrap for the mean-based slope, resampling replicates within each grid point.
fn bootstrap_ci(points: &[ScalingPoint], rounds: usize, stream: &RngStream) -> (f64, f64) {
    if rounds == 0 {
        return (f64::NAN, f64::NAN);
    }
    let grid: Vec<usize> = points.iter().map(|p| p.n).collect();
    let mut slopes: Vec<f64> = (0..rounds)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.replicate(b as u64).rng();
            let means: Vec<f64> = points
                .iter()
                .map(|p| {
                    let k = p.values.len();
                    (0..k).map(|_| p.values[rng.random_range(0..k)]).sum::<f64>() / k as f64
                })
                .collect();
            log_slope(&grid, &means).slope
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    (quantile_sorted(&slopes, 0.025), quantile_sorted(&slopes, 0.975))
}

pub fn scaling_experiment(cfg: &ScalingConfig) -> Result<ScalingResult> {
    cfg.validate()?;
    let theory = cfg.theory()?;
    let points = cfg.grid.iter().map(|&n| scaling_point(cfg, n).map(|p| p.0)).collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let medians: Vec<f64> = points.iter().map(|p| p.median).collect();
    let fit = log_slope(&cfg.grid, &means);
    let median_slope = log_slope(&cfg.grid, &medians).slope;
    let (ci_low, ci_high) = bootstrap_ci(&points, cfg.bootstrap, &RngStream::new(cfg.seed, "scaling-bootstrap", 0));
    let censored = points.iter().map(|p| p.censored).sum();
    Ok(ScalingResult {
        config: cfg.clone(),
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        ci_low,
        ci_high,
        median_slope,
        theory,
        tolerance: cfg.tolerance,
        verdict: (fit.slope - theory).abs() <= cfg.tolerance,
        censored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTiming {
    pub rep: usize,
    pub size: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominant {
    Component1,
    DoubleStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentProbe {
    pub component1: ComponentTiming,
    pub double_star: Option<(DoubleStarWitness, ComponentTiming)>,
    /// `None` when no double star was found.
    pub dominant: Option<Dominant>,
}

fn time_component(g: &Graph, comp: &[usize], dynamics: Dynamics, theta: f64, reps: usize, stream: &RngStream) -> Result<ComponentTiming> {
    let stats = batch(reps, stream, |s| coalesce_component(g, comp, dynamics, theta, s).map(|c| (c.tau, false)))?;
    let s = stats.summary.expect("coalescing is never censored");
    Ok(ComponentTiming { rep: comp[0], size: comp.len(), mean: s.mean, stderr: s.stderr })
}

/// Mean coalescence time (all walkers) on the component of vertex 1 and on the
/// component of the first double star found, simple before long.
pub fn component_probe(g: &Graph, spec: &GraphSpec, dynamics: Dynamics, theta: f64, reps: usize, seed: u64) -> Result<ComponentProbe> {
    let comps = components(g);
    let c1 = comps.of(1);
    let component1 = time_component(g, c1, dynamics, theta, reps, &RngStream::new(seed, "probe-component1", 0))?;
    let witness = match find_simple_double_star(g, spec)? {
        Some(w) => Some(w),
        None => find_long_double_star(g, spec)?,
    };
    let double_star = match witness {
        Some(w) => {
            let comp = comps.of(w.hubs.0);
            let t = time_component(g, comp, dynamics, theta, reps, &RngStream::new(seed, "probe-double-star", 0))?;
            Some((w, t))
        }
        None => None,
    };
    let dominant = double_star.as_ref().map(|(_, ds)| {
        if component1.mean >= ds.mean {
            Dominant::Component1
        } else {
            Dominant::DoubleStar
        }
    });
    Ok(ComponentProbe { component1, double_star, dominant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub edges: Summary,
    pub max_degree: Summary,
    pub largest_component: Summary,
    /// Exact expected edge count (for the multigraph: expected multiplicity sum).
    pub expected_edges: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: Variant,
    pub b: Variant,
    pub statistic: String,
    /// `(mean_a - mean_b) / sqrt(se_a^2 + se_b^2)`.
    pub standardized: f64,
    /// `(mean_a - mean_b) / mean_b`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub reps: usize,
    pub variants: Vec<VariantSummary>,
    pub comparisons: Vec<PairComparison>,
}

pub fn expected_edge_count(spec: &GraphSpec) -> Result<f64> {
    let mut total = 0.0;
    for i in 1..=spec.n {
        for j in i + 1..=spec.n {
            total += edge_prob(i, j, spec)?.value();
        }
    }
    Ok(total)
}

fn standardized(a: &Summary, b: &Summary) -> f64 {
    let d = a.mean - b.mean;
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

/// Edge count, maximum degree and largest component size across variants, with
/// independent streams per variant.
pub fn model_agreement_probe(base: &GraphSpec, variants: &[Variant], reps: usize, seed: u64) -> Result<AgreementReport> {
    if reps < 2 {
        return Err(Error::InvalidParameter("agreement probe needs at least 2 reps".into()));
    }
    let mut summaries = Vec::new();
    for &variant in variants {
        let spec = base.with_variant(variant);
        spec.validate()?;
        let stream = RngStream::new(seed, format!("agreement-{variant}"), 0);
        let rows: Vec<(f64, f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let g = sample_graph(&spec, &stream.replicate(i as u64))?;
                let largest = components(&g).components.iter().map(Vec::len).max().unwrap_or(0);
                let max_degree = (1..=g.n()).map(|v| g.degree(v)).max().unwrap_or(0);
                Ok((g.edge_count() as f64, max_degree as f64, largest as f64))
            })
            .collect::<Result<_>>()?;
        let col = |f: fn(&(f64, f64, f64)) -> f64| Summary::of(&rows.iter().map(f).collect::<Vec<_>>());
        summaries.push(VariantSummary {
            variant,
            edges: col(|r| r.0),
            max_degree: col(|r| r.1),
            largest_component: col(|r| r.2),
            expected_edges: expected_edge_count(&spec)?,
        });
    }
    let mut comparisons = Vec::new();
    for (i, a) in summaries.iter().enumerate() {
        for b in &summaries[i + 1..] {
            for (name, sa, sb) in [
                ("edges", &a.edges, &b.edges),
                ("max_degree", &a.max_degree, &b.max_degree),
                ("largest_component", &a.largest_component, &b.largest_component),
            ] {
                comparisons.push(PairComparison {
                    a: a.variant,
                    b: b.variant,
                    statistic: name.into(),
                    standardized: standardized(sa, sb),
                    relative: (sa.mean - sb.mean) / sb.mean,
                });
            }
        }
    }
    Ok(AgreementReport { n: base.n, beta: base.beta, gamma: base.gamma, reps, variants: summaries, comparisons })
}
