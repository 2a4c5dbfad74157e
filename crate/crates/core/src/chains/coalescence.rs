//! Coalescing walks and the voter model, solved exactly on tiny components.
//!
//! * The coalescing system lives on occupied-vertex sets (bitmasks): walkers
//!   at a common site are merged, so a state is just the set of sites.
//! * The two-opinion voter chain lives on `2^n` opinion vectors.
//! * The unique-opinion voter chain lives on set partitions of the vertices,
//!   encoded as restricted growth strings.
//!
//! In every chain vertex `x` adopts the opinion of `y` at rate `Q(x, y)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::absorption;
use super::{check_cap, Caps, RateMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "u")]
pub enum ConsensusInit {
    /// Every vertex starts with its own opinion.
    Unique,
    /// Independent opinions, `1` with probability `u`.
    Bernoulli(f64),
}

impl ConsensusInit {
    pub fn validate(self) -> Result<Self> {
        if let ConsensusInit::Bernoulli(u) = self {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::InvalidParameter(format!("bernoulli parameter u = {u} must lie in (0, 1)")));
            }
        }
        Ok(self)
    }
}

/// Expected time until a single walker is left, on all nonempty occupied sets.
/// Returns `h` indexed by bitmask (`h[0]` unused, singletons zero) for each
/// reward column `rewards(mask)`.
fn occupied_set_solve<F>(rm: &RateMatrix, caps: &Caps, rewards: F, columns: usize) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u32) -> Vec<f64>,
{
    let n = rm.len();
    check_cap("coalescence", n, caps.coalescence)?;
    let full: u32 = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let transient: Vec<u32> = (1..=full).filter(|m| m.count_ones() > 1).collect();
    let mut index = vec![usize::MAX; full as usize + 1];
    for (i, &m) in transient.iter().enumerate() {
        index[m as usize] = i;
    }
    let mut r = DMatrix::zeros(transient.len(), columns);
    for (i, &m) in transient.iter().enumerate() {
        for (c, v) in rewards(m).into_iter().enumerate() {
            r[(i, c)] = v;
        }
    }
    let h = absorption(
        transient.len(),
        |s, out| {
            let mask = transient[s];
            for x in 0..n {
                if mask & (1 << x) == 0 {
                    continue;
                }
                for &y in &rm.neighbors[x] {
                    let next = (mask & !(1 << x)) | (1 << y);
                    let target = if next.count_ones() > 1 { Some(index[next as usize]) } else { None };
                    out.push((target, rm.rate(x, y)));
                }
            }
        },
        &r,
    )?;
    let mut out = vec![vec![0.0; full as usize + 1]; columns];
    for (i, &m) in transient.iter().enumerate() {
        for (c, col) in out.iter_mut().enumerate() {
            col[m as usize] = h[(i, c)];
        }
    }
    Ok(out)
}

/// Expected full coalescence time from every vertex occupied.
pub fn coalescence_time(rm: &RateMatrix, caps: &Caps) -> Result<f64> {
    if rm.len() <= 1 {
        return Ok(0.0);
    }
    let h = occupied_set_solve(rm, caps, |_| vec![1.0], 1)?;
    Ok(h[0][(1usize << rm.len()) - 1])
}

/// Expected consensus time by a direct solve of the voter chain.
pub fn consensus_time(rm: &RateMatrix, init: ConsensusInit, caps: &Caps) -> Result<f64> {
    match init.validate()? {
        ConsensusInit::Unique => unique_consensus(rm, caps),
        ConsensusInit::Bernoulli(u) => bernoulli_consensus(rm, u, caps),
    }
}

/// Expected consensus time through the coalescing dual: the voter state at
/// time `t` is not consensual iff the walkers started from every vertex and
/// run for time `t` carry more than one initial opinion. Integrating that
/// probability gives a reward `1 - u^k - (1-u)^k` on `k` occupied sites.
pub fn consensus_time_dual(rm: &RateMatrix, init: ConsensusInit, caps: &Caps) -> Result<f64> {
    if rm.len() <= 1 {
        return Ok(0.0);
    }
    let full = (1usize << rm.len()) - 1;
    match init.validate()? {
        ConsensusInit::Unique => coalescence_time(rm, caps),
        ConsensusInit::Bernoulli(u) => {
            let h = occupied_set_solve(
                rm,
                caps,
                |m| {
                    let k = m.count_ones() as i32;
                    vec![1.0 - u.powi(k) - (1.0 - u).powi(k)]
                },
                1,
            )?;
            Ok(h[0][full])
        }
    }
}

fn bernoulli_consensus(rm: &RateMatrix, u: f64, caps: &Caps) -> Result<f64> {
    let n = rm.len();
    check_cap("voter states", n, caps.voter)?;
    if n <= 1 {
        return Ok(0.0);
    }
    let full: u32 = (1u32 << n) - 1;
    // Transient states 1..full-1 map to index state-1.
    let m = full as usize - 1;
    let h = absorption(
        m,
        |s, out| {
            let eta = s as u32 + 1;
            for x in 0..n {
                let ox = eta >> x & 1;
                for &y in &rm.neighbors[x] {
                    if eta >> y & 1 != ox {
                        let next = eta ^ (1 << x);
                        let target = if next == 0 || next == full { None } else { Some(next as usize - 1) };
                        out.push((target, rm.rate(x, y)));
                    }
                }
            }
        },
        &DMatrix::from_element(m, 1, 1.0),
    )?;
    let mut mean = 0.0;
    for s in 0..m {
        let k = (s as u32 + 1).count_ones() as i32;
        mean += u.powi(k) * (1.0 - u).powi(n as i32 - k) * h[s];
    }
    Ok(mean)
}

/// Relabels so that opinions appear as 0, 1, 2, ... in vertex order.
fn canonical(labels: &[u8]) -> Vec<u8> {
    let mut map = [u8::MAX; 32];
    let mut next = 0u8;
    labels
        .iter()
        .map(|&l| {
            if map[l as usize] == u8::MAX {
                map[l as usize] = next;
                next += 1;
            }
            map[l as usize]
        })
        .collect()
}

fn unique_consensus(rm: &RateMatrix, caps: &Caps) -> Result<f64> {
    let n = rm.len();
    check_cap("voter partitions", n, caps.coalescence)?;
    if n <= 1 {
        return Ok(0.0);
    }
    let start: Vec<u8> = (0..n as u8).collect();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut moves: Vec<Vec<(Option<usize>, f64)>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let state = states[i].clone();
        let mut out = Vec::new();
        for x in 0..n {
            for &y in &rm.neighbors[x] {
                if state[x] != state[y] {
                    let mut next = state.clone();
                    next[x] = state[y];
                    let next = canonical(&next);
                    if next.iter().all(|&l| l == 0) {
                        out.push((None, rm.rate(x, y)));
                        continue;
                    }
                    let k = *index.entry(next.clone()).or_insert_with(|| {
                        states.push(next);
                        states.len() - 1
                    });
                    out.push((Some(k), rm.rate(x, y)));
                }
            }
        }
        moves.push(out);
        i += 1;
    }
    let h = absorption(
        states.len(),
        |s, out| out.extend_from_slice(&moves[s]),
        &DMatrix::from_element(states.len(), 1, 1.0),
    )?;
    Ok(h[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::build_generator;
    use crate::graph::Graph;
    use crate::Dynamics;
    use approx::assert_relative_eq;

    fn chain(edges: &[(usize, usize)], n: usize, d: Dynamics, theta: f64) -> RateMatrix {
        let g = Graph::simple(n, edges).unwrap();
        build_generator(&g, &(1..=n).collect::<Vec<_>>(), d, theta).unwrap()
    }

    #[test]
    fn single_edge_values() {
        let rm = chain(&[(1, 2)], 2, Dynamics::Classical, 0.0);
        let caps = Caps::default();
        assert_relative_eq!(coalescence_time(&rm, &caps).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(consensus_time(&rm, ConsensusInit::Bernoulli(0.5), &caps).unwrap(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(consensus_time(&rm, ConsensusInit::Unique, &caps).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn one_vertex_is_zero() {
        let g = Graph::simple(1, &[]).unwrap();
        let rm = build_generator(&g, &[1], Dynamics::Classical, 0.0).unwrap();
        assert_eq!(coalescence_time(&rm, &Caps::default()).unwrap(), 0.0);
        assert_eq!(consensus_time(&rm, ConsensusInit::Unique, &Caps::default()).unwrap(), 0.0);
    }

    #[test]
    fn duality_on_small_graphs() {
        let caps = Caps::default();
        let graphs: Vec<(Vec<(usize, usize)>, usize)> = vec![
            (vec![(1, 2), (2, 3)], 3),
            (vec![(1, 2), (1, 3), (1, 4)], 4),
            (vec![(1, 2), (2, 3), (3, 4), (4, 1)], 4),
            (vec![(1, 2), (2, 3), (3, 4), (4, 5), (2, 5), (1, 3)], 5),
        ];
        for (edges, n) in graphs {
            for d in Dynamics::ALL {
                for theta in [-1.0, 0.5, 2.0] {
                    let rm = chain(&edges, n, d, theta);
                    let coal = coalescence_time(&rm, &caps).unwrap();
                    let unique = consensus_time(&rm, ConsensusInit::Unique, &caps).unwrap();
                    assert_relative_eq!(unique, coal, max_relative = 1e-9);
                    for u in [0.1, 0.5] {
                        let direct = consensus_time(&rm, ConsensusInit::Bernoulli(u), &caps).unwrap();
                        let dual = consensus_time_dual(&rm, ConsensusInit::Bernoulli(u), &caps).unwrap();
                        assert_relative_eq!(direct, dual, max_relative = 1e-9);
                        assert!(direct <= coal * (1.0 + 1e-12));
                        assert!(2.0 * u * (1.0 - u) * coal <= direct * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn caps_and_validation() {
        let rm = chain(&[(1, 2)], 2, Dynamics::Classical, 0.0);
        assert!(consensus_time(&rm, ConsensusInit::Bernoulli(1.0), &Caps::default()).is_err());
        let caps = Caps { coalescence: 1, voter: 1, ..Caps::default() };
        assert!(matches!(coalescence_time(&rm, &caps), Err(Error::CapExceeded { .. })));
        assert!(matches!(consensus_time(&rm, ConsensusInit::Bernoulli(0.5), &caps), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn canonical_relabel() {
        assert_eq!(canonical(&[3, 1, 3, 0]), vec![0, 1, 0, 2]);
    }
}
