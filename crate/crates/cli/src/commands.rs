use std::io::BufReader;
use std::path::Path;

use serde::Serialize;
use subvoter_core::chains::catalog::catalog;
use subvoter_core::chains::{
    bound_audit, build_generator, chain_quantities, hitting_times, AuditOptions, AuditReport, AuditStatus, Caps,
    ChainQuantities,
};
use subvoter_core::dynamics::{batch_coalescing, batch_voter, BatchRecord, BatchStats, Starts, VoterConfig};
use subvoter_core::experiments::{component_probe, model_agreement_probe, scaling_experiment, ScalingConfig, ScalingResult};
use subvoter_core::graphgen::sample_graph;
use subvoter_core::gwcoupling::{gw_tail_statistics, TailFitOptions};
use subvoter_core::structure::{components, structure_report_with, DiameterMode};
use subvoter_core::{Dynamics, Error, Graph, GraphSpec, Result, RngStream};

use crate::args::*;
use crate::output::{csv, csv_flat, emit, json};

/// Stream purpose of sampled graphs, shared by `gen` and every command that samples its own graph.
pub const GRAPH_PURPOSE: &str = "graph";

pub fn spec_from(args: &SpecArgs, n: Option<usize>) -> Result<GraphSpec> {
    let missing = |flag: &str| Error::InvalidParameter(format!("--{flag} is required"));
    let n = n.or(args.n).ok_or_else(|| missing("n"))?;
    let beta = args.beta.ok_or_else(|| missing("beta"))?;
    let gamma = args.gamma.ok_or_else(|| missing("gamma"))?;
    if args.allow_nonsubcritical {
        GraphSpec::new_unchecked_regime(n, beta, gamma, args.variant)
    } else {
        GraphSpec::new(n, beta, gamma, args.variant)
    }
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    Graph::read(BufReader::new(std::fs::File::open(path)?))
}

/// The graph and the spec used for structural thresholds. A file header
/// takes precedence over the parameter flags.
pub fn load(source: &GraphSource, seed: u64) -> Result<(Graph, Option<GraphSpec>)> {
    match &source.graph {
        Some(path) => {
            let g = read_graph(path)?;
            let spec = match g.spec() {
                Some(s) => Some(*s),
                None if source.spec.beta.is_some() && source.spec.gamma.is_some() => Some(spec_from(&source.spec, Some(g.n()))?),
                None => None,
            };
            Ok((g, spec))
        }
        None => {
            let spec = spec_from(&source.spec, None)?;
            Ok((sample_graph(&spec, &RngStream::new(seed, GRAPH_PURPOSE, 0))?, Some(spec)))
        }
    }
}

fn require_spec(spec: Option<GraphSpec>) -> Result<GraphSpec> {
    spec.ok_or_else(|| Error::InvalidParameter("the graph file has no `N beta gamma variant` header; pass --beta and --gamma".into()))
}

fn simple(g: Graph) -> Graph {
    if g.is_simple() {
        g
    } else {
        g.collapse()
    }
}

fn check_censoring(censored: usize, reps: usize, max_fraction: f64) -> Result<()> {
    if censored as f64 > max_fraction * reps as f64 {
        return Err(Error::Censored { censored, reps });
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg {
        RunConfig::Gen(a) => gen(cfg, a),
        RunConfig::Stats(a) => stats(cfg, a),
        RunConfig::Exact(a) => exact(cfg, a),
        RunConfig::Simulate(a) => simulate(cfg, a),
        RunConfig::Scaling(a) => scaling(cfg, a),
        RunConfig::Audit(a) => audit(cfg, a),
        RunConfig::Gw(a) => gw(cfg, a),
        RunConfig::Probe(a) => probe(cfg, a),
    }
}

fn gen(cfg: &RunConfig, a: &GenArgs) -> Result<()> {
    let spec = spec_from(&a.spec, None)?;
    let g = sample_graph(&spec, &RngStream::new(a.seed, GRAPH_PURPOSE, 0))?;
    let text = format!("{}{}", crate::output::header(cfg)?, g.to_text());
    emit(a.output.out.as_deref(), &text)
}

fn stats(cfg: &RunConfig, a: &StatsArgs) -> Result<()> {
    let (g, spec) = load(&a.source, a.seed)?;
    let mode = if a.two_sweep { DiameterMode::TwoSweep } else { DiameterMode::Exact };
    let report = structure_report_with(&g, &require_spec(spec)?, mode)?;
    let text = match a.output.format {
        Format::Json => json(cfg, &report)?,
        Format::Csv => csv(cfg, &report.components)?,
    };
    emit(a.output.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct WorstPair {
    from: usize,
    to: usize,
    t_hit: f64,
}

#[derive(Debug, Serialize)]
struct ExactComponent {
    rep: usize,
    size: usize,
    worst_pair: WorstPair,
    quantities: ChainQuantities,
}

#[derive(Debug, Serialize)]
struct ExactRow {
    rep: usize,
    size: usize,
    t_hit: f64,
    worst_from: usize,
    worst_to: usize,
    t_meet: Option<f64>,
    t_meet_pi: Option<f64>,
    t_coal: Option<f64>,
    t_cons_u: Option<f64>,
    t_rel: Option<f64>,
    t_mix: Option<f64>,
}

fn exact(cfg: &RunConfig, a: &ExactArgs) -> Result<()> {
    let (g, _) = load(&a.source, a.seed)?;
    let g = simple(g);
    let caps = a.caps.caps();
    let comps = components(&g);
    let selected: Vec<&Vec<usize>> = match a.component {
        Some(v) => {
            if v == 0 || v > g.n() {
                return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
            }
            vec![&comps.components[comps.id_of(v)]]
        }
        None => comps.components.iter().filter(|c| c.len() >= 2).collect(),
    };
    let mut out = Vec::new();
    for comp in selected {
        let rm = build_generator(&g, comp, a.dynamics, a.theta)?;
        let h = hitting_times(&rm, &caps)?;
        let mut worst = WorstPair { from: comp[0], to: comp[0], t_hit: 0.0 };
        for x in 0..rm.len() {
            for y in 0..rm.len() {
                if h.matrix[(x, y)] > worst.t_hit {
                    worst = WorstPair { from: rm.states[x], to: rm.states[y], t_hit: h.matrix[(x, y)] };
                }
            }
        }
        let quantities = chain_quantities(&rm, &caps, a.u)?;
        out.push(ExactComponent { rep: comp[0], size: comp.len(), worst_pair: worst, quantities });
    }
    let text = match a.output.format {
        Format::Json => json(cfg, &out)?,
        Format::Csv => {
            let rows: Vec<ExactRow> = out
                .iter()
                .map(|c| ExactRow {
                    rep: c.rep,
                    size: c.size,
                    t_hit: c.quantities.t_hit,
                    worst_from: c.worst_pair.from,
                    worst_to: c.worst_pair.to,
                    t_meet: c.quantities.t_meet,
                    t_meet_pi: c.quantities.t_meet_pi,
                    t_coal: c.quantities.t_coal,
                    t_cons_u: c.quantities.t_cons_u.map(|p| p.1),
                    t_rel: c.quantities.t_rel,
                    t_mix: c.quantities.t_mix,
                })
                .collect();
            csv(cfg, &rows)?
        }
    };
    emit(a.output.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct SimulateResult {
    record: BatchRecord,
    values: Vec<f64>,
}

fn simulate(cfg: &RunConfig, a: &SimulateArgs) -> Result<()> {
    let (g, _) = load(&a.source, a.seed)?;
    let g = simple(g);
    let stream = RngStream::new(a.seed, "simulate", 0);
    let (stats, label): (BatchStats, String) = match a.process {
        Process::Voter => {
            let mut vc = VoterConfig::new(a.dynamics, a.theta, a.init.0).with_scheduler(a.scheduler);
            vc.horizon = a.horizon;
            (batch_voter(&g, &vc, a.reps, &stream)?, vc.init_label())
        }
        Process::Coalescing => {
            let label = match a.starts.0 {
                Starts::All => "all".to_string(),
                Starts::Pair(x, y) => format!("pair({x},{y})"),
                Starts::StationaryPair => "stationary-pair".to_string(),
            };
            (batch_coalescing(&g, a.dynamics, a.theta, a.starts.0, a.reps, &stream)?, label)
        }
    };
    let record = BatchRecord::new(&g, a.dynamics, a.theta, label, &stats, a.seed);
    let text = match a.output.format {
        Format::Json => json(cfg, &SimulateResult { record: record.clone(), values: stats.values.clone() })?,
        Format::Csv => csv(cfg, &[record])?,
    };
    emit(a.output.out.as_deref(), &text)?;
    check_censoring(stats.censored, stats.reps, a.max_censored)
}

pub fn scaling_config(a: &ScalingArgs) -> ScalingConfig {
    let mut sc = ScalingConfig::new(a.beta, a.gamma, a.dynamics, a.theta, a.grid.0.clone(), a.reps, a.seed);
    sc.variant = a.variant;
    sc.observable = a.observable.0;
    sc.tolerance = a.tolerance;
    sc.horizon = a.horizon;
    sc.quenched = a.quenched;
    sc.scheduler = a.scheduler;
    sc.bootstrap = a.bootstrap;
    sc
}

#[derive(Debug, Serialize)]
struct ScalingRow {
    #[serde(rename = "N")]
    n: usize,
    mean: f64,
    stderr: f64,
    reps: usize,
    censored: usize,
    median: f64,
    q05: f64,
    q95: f64,
}

fn scaling_rows(r: &ScalingResult) -> Vec<ScalingRow> {
    r.points
        .iter()
        .map(|p| ScalingRow {
            n: p.n,
            mean: p.mean,
            stderr: p.stderr,
            reps: p.reps,
            censored: p.censored,
            median: p.median,
            q05: p.q05,
            q95: p.q95,
        })
        .collect()
}

/// With `--out`, writes both `<out>.csv` and `<out>.json`.
fn scaling(cfg: &RunConfig, a: &ScalingArgs) -> Result<()> {
    let sc = scaling_config(a);
    let result = scaling_experiment(&sc)?;
    let as_json = json(cfg, &result)?;
    let as_csv = csv(cfg, &scaling_rows(&result))?;
    match &a.output.out {
        Some(p) => {
            emit(Some(&p.with_extension("csv")), &as_csv)?;
            emit(Some(&p.with_extension("json")), &as_json)?;
        }
        None => emit(None, if a.output.format == Format::Csv { &as_csv } else { &as_json })?,
    }
    check_censoring(result.censored, a.reps * a.grid.0.len(), a.max_censored)
}

#[derive(Debug, Serialize)]
struct AuditEntry {
    graph: String,
    dynamics: Dynamics,
    theta: f64,
    report: AuditReport,
}

#[derive(Debug, Serialize)]
struct AuditRow {
    graph: String,
    dynamics: Dynamics,
    theta: f64,
    item: String,
    lhs: f64,
    rhs: f64,
    slack: f64,
    status: AuditStatus,
}

#[derive(Debug, Serialize)]
struct AuditResult {
    all_pass: bool,
    entries: Vec<AuditEntry>,
}

fn audit(cfg: &RunConfig, a: &AuditArgs) -> Result<()> {
    let caps: Caps = a.caps.caps();
    let graphs: Vec<(String, Graph, Vec<usize>)> = if a.catalog {
        catalog().into_iter().map(|e| (e.name, e.graph.clone(), (1..=e.graph.n()).collect())).collect()
    } else {
        let (g, _) = load(&a.source, a.seed)?;
        let g = simple(g);
        components(&g)
            .components
            .iter()
            .filter(|c| c.len() >= 2)
            .map(|c| (format!("component-{}", c[0]), g.clone(), c.clone()))
            .collect()
    };
    let dynamics: Vec<Dynamics> = a.dynamics.map_or(Dynamics::ALL.to_vec(), |d| vec![d]);
    let opts = AuditOptions { seed: a.seed, ..AuditOptions::default() };
    let mut entries = Vec::new();
    for (name, g, comp) in &graphs {
        for &d in &dynamics {
            for &theta in &a.theta {
                let rm = build_generator(g, comp, d, theta)?;
                let report = bound_audit(&rm, &caps, &opts)?;
                entries.push(AuditEntry { graph: name.clone(), dynamics: d, theta, report });
            }
        }
    }
    let result = AuditResult { all_pass: entries.iter().all(|e| e.report.all_pass()), entries };
    let text = match a.output.format {
        Format::Json => json(cfg, &result)?,
        Format::Csv => {
            let rows: Vec<AuditRow> = result
                .entries
                .iter()
                .flat_map(|e| {
                    e.report.items.iter().map(move |i| AuditRow {
                        graph: e.graph.clone(),
                        dynamics: e.dynamics,
                        theta: e.theta,
                        item: i.name.clone(),
                        lhs: i.lhs,
                        rhs: i.rhs,
                        slack: i.slack,
                        status: i.status,
                    })
                })
                .collect();
            csv(cfg, &rows)?
        }
    };
    emit(a.output.out.as_deref(), &text)
}

fn gw(cfg: &RunConfig, a: &GwArgs) -> Result<()> {
    let spec = GraphSpec::new(a.n, a.beta, a.gamma, subvoter_core::Variant::Mnr)?;
    let opts = TailFitOptions { k_min: a.k_min, min_exceedances: a.min_exceedances, bootstrap: a.bootstrap, ..TailFitOptions::default() };
    let report = gw_tail_statistics(&spec, a.alpha, a.trees, &RngStream::new(a.seed, "gw", 0), &opts)?;
    let text = match a.output.format {
        Format::Json => json(cfg, &report)?,
        Format::Csv => csv_flat(cfg, &report)?,
    };
    emit(a.output.out.as_deref(), &text)
}

fn probe(cfg: &RunConfig, a: &ProbeArgs) -> Result<()> {
    let text = match a.kind {
        ProbeKind::Component => {
            let (g, spec) = load(&a.source, a.seed)?;
            let report = component_probe(&simple(g), &require_spec(spec)?, a.dynamics, a.theta, a.reps, a.seed)?;
            match a.output.format {
                Format::Json => json(cfg, &report)?,
                Format::Csv => csv_flat(cfg, &report)?,
            }
        }
        ProbeKind::Agreement => {
            let base = spec_from(&a.source.spec, None)?;
            let report = model_agreement_probe(&base, &a.variants, a.reps, a.seed)?;
            match a.output.format {
                Format::Json => json(cfg, &report)?,
                Format::Csv => csv(cfg, &report.comparisons)?,
            }
        }
    };
    emit(a.output.out.as_deref(), &text)
}
