//! Voter-model consensus dynamics on subcritical inhomogeneous random graphs.
//!
//! The crate is split along the pipeline a typical study runs through:
//!
//! * [`graphgen`] samples graphs from the rank-one class with edge probabilities
//!   `beta * N^(2 gamma - 1) * i^-gamma * j^-gamma` (Chung-Lu, simple and
//!   multigraph Norros-Reittu, generalised random graph).
//! * [`structure`] decomposes a graph into components and computes the
//!   structural statistics (degree sums, diameters, leaves, branches, double
//!   stars) that drive the consensus-time exponents.
//! * [`gwcoupling`] is the marked Galton-Watson exploration with breadth-first
//!   thinning that reproduces the multigraph cluster law exactly.
//! * [`chains`] solves the reversible chains behind both voter dynamics exactly
//!   on small components and audits the constant-bearing inequalities.
//! * [`dynamics`] runs event-driven Monte Carlo for the voter models and their
//!   coalescing random walk duals.
//! * [`experiments`] holds the exponent phase diagrams and the scaling harness.
//!
//! Vertices are 1-based everywhere in the public API.

pub mod chains;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod graphgen;
pub mod gwcoupling;
pub mod rng;
pub mod stats;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec, Variant};
pub use rng::RngStream;

/// Version string embedded in every serialized artifact.
pub const VERSION: &str = concat!("subvoter ", env!("CARGO_PKG_VERSION"));

/// Which of the two voter dynamics (and hence which walk generator) is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    /// Vertex `i` copies neighbour `j` at rate `d(i)^(theta-1)`.
    Classical,
    /// Vertex `i` copies neighbour `j` at rate `(d(i)^(theta-1) + d(j)^(theta-1)) / 2`.
    Discursive,
}

impl Dynamics {
    pub const ALL: [Dynamics; 2] = [Dynamics::Classical, Dynamics::Discursive];

    /// Off-diagonal generator entry `Q(i,j)` for adjacent `i`, `j` with the given degrees.
    pub fn rate(self, theta: f64, deg_i: usize, deg_j: usize) -> f64 {
        match self {
            Dynamics::Classical => (deg_i as f64).powf(theta - 1.0),
            Dynamics::Discursive => {
                0.5 * ((deg_i as f64).powf(theta - 1.0) + (deg_j as f64).powf(theta - 1.0))
            }
        }
    }
}

impl std::fmt::Display for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dynamics::Classical => "classical",
            Dynamics::Discursive => "discursive",
        })
    }
}

impl std::str::FromStr for Dynamics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(Dynamics::Classical),
            "discursive" => Ok(Dynamics::Discursive),
            other => Err(Error::InvalidParameter(format!("unknown dynamics `{other}`"))),
        }
    }
}
