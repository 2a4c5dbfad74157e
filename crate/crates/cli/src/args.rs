use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use subvoter_core::chains::{Caps, ConsensusInit};
use subvoter_core::dynamics::{Scheduler, Starts};
use subvoter_core::experiments::{geometric_grid, Observable};
use subvoter_core::{Dynamics, Error, Variant};

#[derive(Debug, Parser)]
#[command(name = "subvoter", version, about = "Voter-model consensus on subcritical inhomogeneous random graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: TopCommand,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum TopCommand {
    #[command(flatten)]
    Run(RunConfig),
    /// Report every violated precondition of a command without running it.
    Validate {
        #[command(subcommand)]
        target: RunConfig,
    },
}

/// A fully specified run. It is echoed into every artifact the run writes.
#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    /// Sample a graph and write it in the text format.
    Gen(GenArgs),
    /// Component structure of a graph.
    Stats(StatsArgs),
    /// Exact chain quantities on each small component.
    Exact(ExactArgs),
    /// Monte Carlo voter or coalescing runs on one graph.
    Simulate(SimulateArgs),
    /// Consensus time against N on a geometric grid, with a log-log fit.
    Scaling(ScalingArgs),
    /// Check the chain inequalities on exact quantities.
    Audit(AuditArgs),
    /// Tail of the Galton-Watson total progeny.
    Gw(GwArgs),
    /// Component-of-1 against double star timing, or variant agreement.
    Probe(ProbeArgs),
}

impl RunConfig {
    pub fn output(&self) -> &OutputArgs {
        match self {
            RunConfig::Gen(a) => &a.output,
            RunConfig::Stats(a) => &a.output,
            RunConfig::Exact(a) => &a.output,
            RunConfig::Simulate(a) => &a.output,
            RunConfig::Scaling(a) => &a.output,
            RunConfig::Audit(a) => &a.output,
            RunConfig::Gw(a) => &a.output,
            RunConfig::Probe(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file. Relative paths resolve against $SUBVOTER_OUTPUT_DIR when set. Standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value = "cl")]
    pub variant: Variant,
    /// Skip the `beta + 2 gamma < 1` gate.
    #[arg(long)]
    pub allow_nonsubcritical: bool,
}

/// A graph file, or parameters to sample one from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphSource {
    /// Graph in the text format (`N [beta gamma variant]` header, then `i j [m]` lines).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CapArgs {
    #[arg(long, default_value_t = Caps::default().hitting)]
    pub cap_hitting: usize,
    #[arg(long, default_value_t = Caps::default().product)]
    pub cap_product: usize,
    #[arg(long, default_value_t = Caps::default().coalescence)]
    pub cap_coalescence: usize,
    #[arg(long, default_value_t = Caps::default().voter)]
    pub cap_voter: usize,
    #[arg(long, default_value_t = Caps::default().spectral)]
    pub cap_spectral: usize,
}

impl CapArgs {
    pub fn caps(&self) -> Caps {
        Caps {
            hitting: self.cap_hitting,
            product: self.cap_product,
            coalescence: self.cap_coalescence,
            voter: self.cap_voter,
            spectral: self.cap_spectral,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the double-sweep lower bound for diameters.
    #[arg(long)]
    pub two_sweep: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "classical")]
    pub dynamics: Dynamics,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Also solve consensus from Bernoulli(u) opinions.
    #[arg(long)]
    pub u: Option<f64>,
    /// Restrict to the component of this vertex.
    #[arg(long)]
    pub component: Option<usize>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Voter,
    Coalescing,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "classical")]
    pub dynamics: Dynamics,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Process::Voter)]
    pub process: Process,
    /// `unique` or `bernoulli:U`.
    #[arg(long, default_value = "bernoulli:0.5")]
    pub init: InitArg,
    /// `all`, `pair:X,Y` or `stationary-pair`.
    #[arg(long, default_value = "all")]
    pub starts: StartsArg,
    #[arg(long, default_value = "activation")]
    pub scheduler: Scheduler,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Largest tolerated fraction of censored replicates before exiting with status 4.
    #[arg(long, default_value_t = 0.0)]
    pub max_censored: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value = "cl")]
    pub variant: Variant,
    #[arg(long, default_value = "classical")]
    pub dynamics: Dynamics,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// `lo:hi:xK` for the geometric grid lo, lo K, lo K^2, ... up to hi, or a comma list.
    #[arg(long)]
    pub grid: GridArg,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `bernoulli:U` or `unique`.
    #[arg(long, default_value = "bernoulli:0.5")]
    pub observable: ObservableArg,
    #[arg(long, default_value_t = 0.15)]
    pub tolerance: f64,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// One graph per grid point instead of one per replicate.
    #[arg(long)]
    pub quenched: bool,
    #[arg(long, default_value = "activation")]
    pub scheduler: Scheduler,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.0)]
    pub max_censored: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Audit the built-in catalog of small graphs instead of one graph.
    #[arg(long)]
    pub catalog: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Both dynamics when absent.
    #[arg(long)]
    pub dynamics: Option<Dynamics>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub theta: Vec<f64>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GwArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Inflation of the offspring mean, in `(1, (1 - 2 gamma) / beta)`.
    #[arg(long, default_value_t = 1.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub k_min: usize,
    #[arg(long, default_value_t = 30)]
    pub min_exceedances: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Component,
    Agreement,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long, value_enum, default_value_t = ProbeKind::Component)]
    pub kind: ProbeKind,
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "classical")]
    pub dynamics: Dynamics,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "cl,snr,grg")]
    pub variants: Vec<Variant>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct InitArg(pub ConsensusInit);

impl FromStr for InitArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "unique" {
            return Ok(Self(ConsensusInit::Unique));
        }
        Ok(Self(ConsensusInit::Bernoulli(bernoulli_param(s)?)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ObservableArg(pub Observable);

impl FromStr for ObservableArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "unique" {
            return Ok(Self(Observable::Unique));
        }
        Ok(Self(Observable::Bernoulli(bernoulli_param(s)?)))
    }
}

fn bernoulli_param(s: &str) -> Result<f64, Error> {
    let bad = || Error::InvalidParameter(format!("expected `unique` or `bernoulli:U`, got `{s}`"));
    let u = s.strip_prefix("bernoulli:").ok_or_else(bad)?;
    u.parse().map_err(|_| bad())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StartsArg(pub Starts);

impl FromStr for StartsArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidParameter(format!("expected `all`, `pair:X,Y` or `stationary-pair`, got `{s}`"));
        match s {
            "all" => Ok(Self(Starts::All)),
            "stationary-pair" => Ok(Self(Starts::StationaryPair)),
            _ => {
                let body = s.strip_prefix("pair:").ok_or_else(bad)?;
                let (x, y) = body.split_once(',').ok_or_else(bad)?;
                Ok(Self(Starts::Pair(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?)))
            }
        }
    }
}

/// Grid of vertex counts; serialized as the expanded list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GridArg(pub Vec<usize>);

impl FromStr for GridArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidParameter(format!("expected `lo:hi:xK` or a comma list, got `{s}`"));
        if let Some((lo, rest)) = s.split_once(':') {
            let (hi, factor) = rest.split_once(':').ok_or_else(bad)?;
            let factor = factor.strip_prefix('x').ok_or_else(bad)?;
            let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
            return Ok(Self(geometric_grid(parse(lo)?, parse(hi)?, parse(factor)?)?));
        }
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>().map(Self)
    }
}
