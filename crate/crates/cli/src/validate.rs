//! Dry-run checks that report every violated precondition at once.

use serde::Serialize;
use subvoter_core::chains::ConsensusInit;
use subvoter_core::dynamics::Starts;
use subvoter_core::experiments::{Observable, MIN_SCALING_REPS};
use subvoter_core::structure::{components, k_gamma};

use crate::args::*;
use crate::commands::read_graph;

#[derive(Debug, Default, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    fn positive(&mut self, name: &str, x: f64) {
        self.require(x.is_finite() && x > 0.0, || format!("{name} must be positive and finite, got {x}"));
    }

    fn probability(&mut self, name: &str, u: f64) {
        self.require(u > 0.0 && u < 1.0, || format!("{name} must lie in (0, 1), got {u}"));
    }

    fn finite(&mut self, name: &str, x: f64) {
        self.require(x.is_finite(), || format!("{name} must be finite, got {x}"));
    }

    fn regime(&mut self, beta: f64, gamma: f64, allow: bool) {
        self.positive("beta", beta);
        self.require(gamma.is_finite() && (0.0..1.0).contains(&gamma), || format!("gamma must lie in [0, 1), got {gamma}"));
        if !allow {
            self.require(beta + 2.0 * gamma < 1.0, || {
                format!("not subcritical: beta + 2 gamma = {} >= 1", beta + 2.0 * gamma)
            });
        }
    }

    fn threshold(&mut self, src: &GraphSource) {
        if let Some(g) = src.spec.gamma {
            self.require(k_gamma(2, g).is_ok(), || format!("K_gamma undefined for gamma = {g}"));
        }
    }

    fn spec(&mut self, s: &SpecArgs, n: Option<usize>) {
        match n.or(s.n) {
            None => self.0.push("--n is required".into()),
            Some(n) => self.require(n >= 1, || "n must be at least 1".into()),
        }
        match (s.beta, s.gamma) {
            (Some(b), Some(g)) => self.regime(b, g, s.allow_nonsubcritical),
            _ => self.0.push("--beta and --gamma are required".into()),
        }
    }

    fn reps(&mut self, reps: usize) {
        self.require(reps >= 1, || "reps must be at least 1".into());
    }

    fn horizon(&mut self, h: Option<f64>) {
        if let Some(h) = h {
            self.positive("horizon", h);
        }
    }

    fn fraction(&mut self, name: &str, x: f64) {
        self.require((0.0..=1.0).contains(&x), || format!("{name} must lie in [0, 1], got {x}"));
    }

    /// Checks the file or the sampling parameters. Returns the largest
    /// component size of a file graph.
    fn source(&mut self, src: &GraphSource) -> Option<usize> {
        let Some(path) = &src.graph else {
            self.spec(&src.spec, None);
            return None;
        };
        match read_graph(path) {
            Ok(g) => {
                if let (None, Some(b), Some(gm)) = (g.spec(), src.spec.beta, src.spec.gamma) {
                    self.regime(b, gm, src.spec.allow_nonsubcritical);
                }
                components(&g).components.iter().map(Vec::len).max()
            }
            Err(e) => {
                self.0.push(format!("graph file {}: {e}", path.display()));
                None
            }
        }
    }

    fn caps(&mut self, caps: &CapArgs, largest: Option<usize>) {
        if let Some(size) = largest {
            self.require(size <= caps.cap_hitting, || {
                format!("largest component has {size} vertices, above the hitting cap {}", caps.cap_hitting)
            });
        }
    }
}

pub fn validate(cfg: &RunConfig) -> Validation {
    let mut c = Checks::default();
    match cfg {
        RunConfig::Gen(a) => c.spec(&a.spec, None),
        RunConfig::Stats(a) => {
            c.source(&a.source);
            c.threshold(&a.source);
        }
        RunConfig::Exact(a) => {
            let largest = c.source(&a.source);
            c.finite("theta", a.theta);
            if let Some(u) = a.u {
                c.probability("u", u);
            }
            c.caps(&a.caps, largest);
        }
        RunConfig::Simulate(a) => {
            c.source(&a.source);
            c.finite("theta", a.theta);
            c.reps(a.reps);
            c.horizon(a.horizon);
            c.fraction("max-censored", a.max_censored);
            if let ConsensusInit::Bernoulli(u) = a.init.0 {
                c.probability("u", u);
            }
            if let Starts::Pair(x, y) = a.starts.0 {
                c.require(x >= 1 && y >= 1, || "pair vertices are 1-based".into());
            }
        }
        RunConfig::Scaling(a) => {
            c.regime(a.beta, a.gamma, false);
            c.finite("theta", a.theta);
            c.require(a.reps >= MIN_SCALING_REPS, || format!("scaling needs at least {MIN_SCALING_REPS} reps, got {}", a.reps));
            c.horizon(a.horizon);
            c.fraction("max-censored", a.max_censored);
            c.positive("tolerance", a.tolerance);
            if let Observable::Bernoulli(u) = a.observable.0 {
                c.probability("u", u);
            }
            let g = &a.grid.0;
            c.require(g.len() >= 4, || format!("grid needs at least 4 points, got {}", g.len()));
            c.require(g.windows(2).all(|w| w[0] < w[1]), || "grid must be strictly increasing".into());
            c.require(g.iter().all(|&n| n >= 2), || "grid sizes must be at least 2".into());
        }
        RunConfig::Audit(a) => {
            let largest = if a.catalog { None } else { c.source(&a.source) };
            for &t in &a.theta {
                c.finite("theta", t);
            }
            c.caps(&a.caps, largest);
        }
        RunConfig::Gw(a) => {
            c.require(a.n >= 1, || "n must be at least 1".into());
            c.regime(a.beta, a.gamma, false);
            let upper = (1.0 - 2.0 * a.gamma) / a.beta;
            c.require(a.alpha > 1.0 && a.alpha < upper, || {
                format!("alpha must lie in (1, (1 - 2 gamma) / beta) = (1, {upper}), got {}", a.alpha)
            });
            c.require(a.trees >= 1, || "trees must be at least 1".into());
        }
        RunConfig::Probe(a) => {
            match a.kind {
                ProbeKind::Component => {
                    c.source(&a.source);
                    c.threshold(&a.source);
                }
                ProbeKind::Agreement => {
                    c.require(a.source.graph.is_none(), || "the agreement probe samples its own graphs; drop --graph".into());
                    c.spec(&a.source.spec, None);
                    c.require(!a.variants.is_empty(), || "at least one variant is required".into());
                }
            }
            c.finite("theta", a.theta);
            c.reps(a.reps);
        }
    }
    // Anything the core constructor still rejects.
    if c.0.is_empty() {
        let residual = match cfg {
            RunConfig::Gen(a) => crate::commands::spec_from(&a.spec, None).err(),
            RunConfig::Scaling(a) => crate::commands::scaling_config(a).validate().err(),
            _ => None,
        };
        if let Some(e) = residual {
            c.0.push(e.to_string());
        }
    }
    Validation { valid: c.0.is_empty(), diagnostics: c.0 }
}
