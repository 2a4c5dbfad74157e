//! Checks the constant-bearing inequalities for reversible chains against
//! exact values. Each item reports `lhs <= rhs` with its slack.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coalescence::coalescence_time;
use super::hitting::{hitting_times, HittingTimes};
use super::meeting::{meeting_times, observed_meeting, MeetingTimes};
use super::spectral::{spectral, Spectral};
use super::{Caps, RateMatrix};
use crate::error::{Error, Result};
use crate::rng::RngStream;

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditStatus {
    Pass,
    /// Holds with equality up to rounding.
    PassEquality,
    Fail,
    /// An input exceeded a solver cap.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub status: AuditStatus,
    /// States (vertex labels) at which the reported case is attained.
    pub witness: Vec<usize>,
}

impl AuditItem {
    fn compare(name: &str, lhs: f64, rhs: f64, witness: Vec<usize>) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        let status = if (lhs - rhs).abs() <= REL_TOL * scale {
            AuditStatus::PassEquality
        } else if lhs < rhs {
            AuditStatus::Pass
        } else {
            AuditStatus::Fail
        };
        Self { name: name.to_string(), lhs, rhs, slack: rhs - lhs, status, witness }
    }

    fn skipped(name: &str) -> Self {
        Self {
            name: name.to_string(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            status: AuditStatus::Skipped,
            witness: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, AuditStatus::Pass | AuditStatus::PassEquality)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Subsets `A` (vertex labels) for the partial-meeting bound. Empty means
    /// the closed neighbourhood of the state of largest stationary mass.
    pub subsets: Vec<Vec<usize>>,
    /// Cuts are enumerated exhaustively up to this many states.
    pub exhaustive_cut_limit: usize,
    /// Random cuts examined above the limit (besides all BFS balls).
    pub sampled_cuts: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { subsets: Vec::new(), exhaustive_cut_limit: 12, sampled_cuts: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub vertices: Vec<usize>,
    pub items: Vec<AuditItem>,
    /// `max_A pi(A) pi(A^c) / c(A, A^c)` over the examined cuts.
    pub bottleneck: f64,
    pub bottleneck_exhaustive: bool,
    /// `t_meet / bottleneck`, an empirical value for the unspecified constant of the conductance lower bound.
    pub c_cond_ratio: Option<f64>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.status != AuditStatus::Fail)
    }

    pub fn item(&self, name: &str) -> Option<&AuditItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Least path resistance `sum 1/c(e)` from `source` to every state.
pub fn path_resistances(rm: &RateMatrix, source: usize) -> Vec<f64> {
    let n = rm.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([HeapEntry(0.0, source)]);
    while let Some(HeapEntry(d, x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &y in &rm.neighbors[x] {
            let nd = d + 1.0 / rm.conductance(x, y);
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(HeapEntry(nd, y));
            }
        }
    }
    dist
}

fn cut_ratio(rm: &RateMatrix, in_a: &[bool]) -> f64 {
    let pi_a: f64 = (0..rm.len()).filter(|&x| in_a[x]).map(|x| rm.pi[x]).sum();
    let mut flow = 0.0;
    for x in (0..rm.len()).filter(|&x| in_a[x]) {
        for &y in &rm.neighbors[x] {
            if !in_a[y] {
                flow += rm.conductance(x, y);
            }
        }
    }
    pi_a * (1.0 - pi_a) / flow
}

/// Largest bottleneck ratio over all cuts (small chains) or over BFS balls
/// and random cuts (larger chains). Returns the ratio and whether the search was exhaustive.
pub fn bottleneck_ratio(rm: &RateMatrix, opts: &AuditOptions) -> (f64, bool) {
    let n = rm.len();
    if n < 2 {
        return (0.0, true);
    }
    let mut best: f64 = 0.0;
    let mut in_a = vec![false; n];
    if n <= opts.exhaustive_cut_limit {
        // Every cut has exactly one side containing state 0.
        for mask in 0u64..(1u64 << (n - 1)) {
            let mask = (mask << 1) | 1;
            if mask == (1u64 << n) - 1 {
                continue;
            }
            for (x, f) in in_a.iter_mut().enumerate() {
                *f = mask >> x & 1 == 1;
            }
            best = best.max(cut_ratio(rm, &in_a));
        }
        return (best, true);
    }
    for source in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[source] = 0;
        let mut order = vec![source];
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for &y in &rm.neighbors[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
        in_a.fill(false);
        for &x in &order[..n - 1] {
            in_a[x] = true;
            best = best.max(cut_ratio(rm, &in_a));
        }
    }
    let mut rng = RngStream::new(opts.seed, "audit-cuts", 0).rng();
    for _ in 0..opts.sampled_cuts {
        let p: f64 = rng.random();
        for f in in_a.iter_mut() {
            *f = rng.random::<f64>() < p;
        }
        let k = in_a.iter().filter(|&&f| f).count();
        if k == 0 || k == n {
            continue;
        }
        best = best.max(cut_ratio(rm, &in_a));
    }
    (best, false)
}

fn capped<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn bound_audit(rm: &RateMatrix, caps: &Caps, opts: &AuditOptions) -> Result<AuditReport> {
    let n = rm.len();
    let label = |x: usize| rm.states[x];
    let hit: HittingTimes = hitting_times(rm, caps)?;
    let meet: Option<MeetingTimes> = capped(meeting_times(rm, caps))?;
    let t_coal = capped(coalescence_time(rm, caps))?;
    let spec: Option<Spectral> = capped(spectral(rm, caps))?;
    let mut items = Vec::new();

    match (&meet, t_coal) {
        (Some(m), Some(c)) => {
            items.push(AuditItem::compare("t_meet <= t_coal", m.t_meet, c, vec![]));
            let factor = std::f64::consts::E * ((n as f64).ln() + 2.0);
            items.push(AuditItem::compare("t_coal <= e(ln n + 2) t_meet", c, factor * m.t_meet, vec![]));
        }
        _ => {
            items.push(AuditItem::skipped("t_meet <= t_coal"));
            items.push(AuditItem::skipped("t_coal <= e(ln n + 2) t_meet"));
        }
    }
    match &meet {
        Some(m) => {
            items.push(AuditItem::compare("t_meet <= t_hit", m.t_meet, hit.t_hit, vec![]));
            items.push(AuditItem::compare("t_meet_pi <= t_meet", m.t_meet_pi, m.t_meet, vec![]));
        }
        None => {
            items.push(AuditItem::skipped("t_meet <= t_hit"));
            items.push(AuditItem::skipped("t_meet_pi <= t_meet"));
        }
    }

    // Commute time against the least-resistance path, worst pair by ratio;
    // among ratios tied up to rounding, the pair with the largest commute time.
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0, 0, 0);
    for x in 0..n {
        let r = path_resistances(rm, x);
        for y in x + 1..n {
            let c = hit.commute(x, y);
            let ratio = c / r[y];
            let tied = (ratio - worst.0).abs() <= REL_TOL * ratio.abs();
            if (ratio > worst.0 && !tied) || (tied && c > worst.1) {
                worst = (ratio, c, r[y], x, y);
            }
        }
    }
    if n >= 2 {
        items.push(AuditItem::compare(
            "commute(i,j) <= path resistance",
            worst.1,
            worst.2,
            vec![label(worst.3), label(worst.4)],
        ));
    }

    let sum_pi2: f64 = rm.pi.iter().map(|p| p * p).sum();
    let sum_qpi2: f64 = rm.pi.iter().zip(&rm.exit).map(|(p, q)| q * p * p).sum();
    match &meet {
        Some(m) if n >= 2 => {
            let lower = (1.0 - sum_pi2).powi(2) / (4.0 * sum_qpi2);
            items.push(AuditItem::compare("t_meet_pi lower bound", lower, m.t_meet_pi, vec![]));
        }
        _ => items.push(AuditItem::skipped("t_meet_pi lower bound")),
    }

    let (bottleneck, exhaustive) = bottleneck_ratio(rm, opts);
    match &spec {
        Some(s) => {
            items.push(AuditItem::compare("bottleneck <= t_rel", bottleneck, s.t_rel, vec![]));
            let worst_i = argmin((0..n).map(|i| 2.0 * hit.from_stationary[i] - s.t_mix_from[i]));
            items.push(AuditItem::compare(
                "t_mix(i) <= 2 E_pi T_i",
                s.t_mix_from[worst_i],
                2.0 * hit.from_stationary[worst_i],
                vec![label(worst_i)],
            ));
            let s_best = argmin(hit.t_hit_target.iter().copied());
            items.push(AuditItem::compare(
                "t_mix <= 16 t_hit(s)",
                s.t_mix,
                16.0 * hit.t_hit_target[s_best],
                vec![label(s_best)],
            ));
            items.push(AuditItem::compare(
                "t_rel / (1 + 1/ln 2) <= t_mix",
                s.t_rel / (1.0 + 1.0 / std::f64::consts::LN_2),
                s.t_mix,
                vec![],
            ));
        }
        None => {
            for name in ["bottleneck <= t_rel", "t_mix(i) <= 2 E_pi T_i", "t_mix <= 16 t_hit(s)", "t_rel / (1 + 1/ln 2) <= t_mix"] {
                items.push(AuditItem::skipped(name));
            }
        }
    }

    match &meet {
        Some(m) => {
            let s_best = argmin((0..n).map(|s| hit.t_hit_target[s] / rm.pi[s]));
            items.push(AuditItem::compare(
                "t_meet <= 189 t_hit(s) / pi(s)",
                m.t_meet,
                189.0 * hit.t_hit_target[s_best] / rm.pi[s_best],
                vec![label(s_best)],
            ));
            let subsets: Vec<Vec<usize>> = if opts.subsets.is_empty() {
                let top = argmin(rm.pi.iter().map(|p| -p));
                let mut a = vec![top];
                a.extend_from_slice(&rm.neighbors[top]);
                vec![a]
            } else {
                opts.subsets
                    .iter()
                    .map(|a| a.iter().map(|&v| rm.local(v).ok_or(Error::VertexOutOfRange { vertex: v, n })).collect())
                    .collect::<Result<_>>()?
            };
            let s_best = argmin(hit.t_hit_target.iter().copied());
            let th = hit.t_hit_target[s_best];
            for a in subsets {
                let o = observed_meeting(rm, &a, caps)?;
                let rhs = 188.0 * th + 2.0 * o.stationary / o.pi_a.powi(2) + 1568.0 * th / o.pi_a.powi(4);
                let mut witness: Vec<usize> = vec![label(s_best)];
                witness.extend(o.subset.iter().map(|&x| label(x)));
                items.push(AuditItem::compare("partial meeting bound", m.t_meet, rhs, witness));
            }
        }
        None => {
            items.push(AuditItem::skipped("t_meet <= 189 t_hit(s) / pi(s)"));
            items.push(AuditItem::skipped("partial meeting bound"));
        }
    }

    let c_cond_ratio = match &meet {
        Some(m) if bottleneck > 0.0 => Some(m.t_meet / bottleneck),
        _ => None,
    };
    Ok(AuditReport { vertices: rm.states.clone(), items, bottleneck, bottleneck_exhaustive: exhaustive, c_cond_ratio })
}
