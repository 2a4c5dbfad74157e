//! Meeting times of two independent walkers.
//!
//! Walkers are exchangeable, so the product chain is lumped to unordered
//! pairs. [`meeting_times`] absorbs on the diagonal; [`observed_meeting`]
//! keeps the full (unabsorbed) pair chain, censors it onto `A x A` through a
//! Schur complement, and then solves for the hitting time of the diagonal of `A`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::{absorption, solve_checked};
use super::{check_cap, Caps, RateMatrix};
use crate::error::{Error, Result};

/// Index of the unordered pair `x < y` among `n(n-1)/2`.
fn pair_index(n: usize, x: usize, y: usize) -> usize {
    debug_assert!(x < y && y < n);
    x * n - x * (x + 1) / 2 + (y - x - 1)
}

/// Index of the unordered pair `x <= y` among `n(n+1)/2`.
fn tri_index(x: usize, y: usize) -> usize {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    y * (y + 1) / 2 + x
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetingTimes {
    /// `pair[(x, y)] = E_{x,y} tau_meet`, zero on the diagonal.
    pub pair: DMatrix<f64>,
    pub t_meet: f64,
    /// `sum_{x,y} pi(x) pi(y) E_{x,y} tau_meet`.
    pub t_meet_pi: f64,
}

pub fn meeting_times(rm: &RateMatrix, caps: &Caps) -> Result<MeetingTimes> {
    let n = rm.len();
    check_cap("meeting times", n, caps.product)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let m = pairs.len();
    let h = absorption(
        m,
        |s, out| {
            let (x, y) = pairs[s];
            for (mover, other) in [(x, y), (y, x)] {
                for &z in &rm.neighbors[mover] {
                    let target = if z == other { None } else { Some(pair_index(n, z.min(other), z.max(other))) };
                    out.push((target, rm.rate(mover, z)));
                }
            }
        },
        &DMatrix::from_element(m, 1, 1.0),
    )?;
    let mut pair = DMatrix::zeros(n, n);
    let mut t_meet: f64 = 0.0;
    let mut t_meet_pi = 0.0;
    for (s, &(x, y)) in pairs.iter().enumerate() {
        pair[(x, y)] = h[s];
        pair[(y, x)] = h[s];
        t_meet = t_meet.max(h[s]);
        t_meet_pi += 2.0 * rm.pi[x] * rm.pi[y] * h[s];
    }
    Ok(MeetingTimes { pair, t_meet, t_meet_pi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedMeeting {
    /// Local states of `A`, ascending.
    pub subset: Vec<usize>,
    /// `(x, y, t)` for `x < y` in `A`: expected observed time to meet from `(x, y)`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Start from `pi (x) pi` restricted to `A x A` and renormalised.
    pub stationary: f64,
    pub pi_a: f64,
}

impl ObservedMeeting {
    pub fn from_pair(&self, x: usize, y: usize) -> Option<f64> {
        if x == y {
            return Some(0.0);
        }
        let (x, y) = (x.min(y), x.max(y));
        self.pairs.iter().find(|p| p.0 == x && p.1 == y).map(|p| p.2)
    }
}

/// Meeting time of the pair chain observed on `subset x subset` (local state indices).
pub fn observed_meeting(rm: &RateMatrix, subset: &[usize], caps: &Caps) -> Result<ObservedMeeting> {
    let n = rm.len();
    check_cap("observed meeting", n, caps.product)?;
    let mut a: Vec<usize> = subset.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() || a.iter().any(|&x| x >= n) {
        return Err(Error::InvalidParameter("subset must be a nonempty set of states".into()));
    }
    let mut in_a = vec![false; n];
    for &x in &a {
        in_a[x] = true;
    }
    let total = n * (n + 1) / 2;
    // Full lumped pair generator.
    let mut gen = DMatrix::zeros(total, total);
    for y in 0..n {
        for x in 0..=y {
            let s = tri_index(x, y);
            let movers: &[(usize, usize)] = if x == y { &[(x, y)] } else { &[(x, y), (y, x)] };
            let factor = if x == y { 2.0 } else { 1.0 };
            for &(mover, other) in movers {
                for &z in &rm.neighbors[mover] {
                    let r = factor * rm.rate(mover, z);
                    gen[(s, tri_index(z, other))] += r;
                    gen[(s, s)] -= r;
                }
            }
        }
    }
    let mut observed = Vec::new();
    let mut coords = Vec::new();
    let mut hidden = Vec::new();
    for y in 0..n {
        for x in 0..=y {
            if in_a[x] && in_a[y] {
                observed.push(tri_index(x, y));
                coords.push((x, y));
            } else {
                hidden.push(tri_index(x, y));
            }
        }
    }
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| gen[(rows[i], cols[j])]);
    let mut censored = sub(&observed, &observed);
    if !hidden.is_empty() {
        let to_hidden = sub(&observed, &hidden);
        let from_hidden = sub(&hidden, &observed);
        let stay = -sub(&hidden, &hidden);
        let excursion = solve_checked(&stay, &from_hidden)?;
        censored += to_hidden * excursion;
    }
    // Transient states: off-diagonal pairs within A.
    let mut pairs = Vec::new();
    let mut transient = Vec::new();
    for (i, &(x, y)) in coords.iter().enumerate() {
        if x != y {
            transient.push(i);
            pairs.push((x, y));
        }
    }
    let mat = DMatrix::from_fn(transient.len(), transient.len(), |i, j| -censored[(transient[i], transient[j])]);
    let h = solve_checked(&mat, &DMatrix::from_element(transient.len(), 1, 1.0))
        .map_err(|_| Error::Disconnected)?;
    let pi_a: f64 = a.iter().map(|&x| rm.pi[x]).sum();
    let mut stationary = 0.0;
    let mut out = Vec::with_capacity(pairs.len());
    for (k, &(x, y)) in pairs.iter().enumerate() {
        stationary += 2.0 * rm.pi[x] * rm.pi[y] * h[k];
        out.push((x, y, h[k]));
    }
    Ok(ObservedMeeting { subset: a, pairs: out, stationary: stationary / (pi_a * pi_a), pi_a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::build_generator;
    use crate::graph::Graph;
    use crate::Dynamics;
    use approx::assert_relative_eq;

    fn star3() -> Graph {
        Graph::simple(4, &[(1, 2), (1, 3), (1, 4)]).unwrap()
    }

    #[test]
    fn indices_are_bijective() {
        let n = 6;
        let mut seen = vec![false; n * (n - 1) / 2];
        for x in 0..n {
            for y in x + 1..n {
                seen[pair_index(n, x, y)] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        let mut seen = vec![false; n * (n + 1) / 2];
        for y in 0..n {
            for x in 0..=y {
                seen[tri_index(x, y)] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn single_edge() {
        let g = Graph::simple(2, &[(1, 2)]).unwrap();
        let rm = build_generator(&g, &[1, 2], Dynamics::Classical, 0.0).unwrap();
        let m = meeting_times(&rm, &Caps::default()).unwrap();
        assert_relative_eq!(m.t_meet, 0.5, epsilon = 1e-14);
        assert_relative_eq!(m.t_meet_pi, 0.25, epsilon = 1e-14);
        assert_eq!(m.pair[(0, 0)], 0.0);
    }

    #[test]
    fn star_classical_theta0() {
        let rm = build_generator(&star3(), &[1, 2, 3, 4], Dynamics::Classical, 0.0).unwrap();
        let m = meeting_times(&rm, &Caps::default()).unwrap();
        assert_relative_eq!(m.pair[(1, 2)], 1.5, epsilon = 1e-12);
        assert_relative_eq!(m.t_meet_pi, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn observed_on_everything_is_plain_meeting() {
        let g = Graph::simple(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (2, 4)]).unwrap();
        for d in Dynamics::ALL {
            let rm = build_generator(&g, &[1, 2, 3, 4, 5], d, 0.4).unwrap();
            let m = meeting_times(&rm, &Caps::default()).unwrap();
            let o = observed_meeting(&rm, &[0, 1, 2, 3, 4], &Caps::default()).unwrap();
            assert_relative_eq!(o.stationary, m.t_meet_pi, max_relative = 1e-9);
            assert_relative_eq!(o.from_pair(1, 3).unwrap(), m.pair[(1, 3)], max_relative = 1e-9);
        }
    }

    #[test]
    fn star_leaves_discursive_theta1() {
        // Observed on the three leaves, two distinct leaves meet after 3 / (1 + 1) = 3/2.
        let rm = build_generator(&star3(), &[1, 2, 3, 4], Dynamics::Discursive, 1.0).unwrap();
        let o = observed_meeting(&rm, &[1, 2, 3], &Caps::default()).unwrap();
        for &(_, _, t) in &o.pairs {
            assert_relative_eq!(t, 1.5, epsilon = 1e-12);
        }
        // Stationary start puts mass 1/3 on the diagonal of A x A.
        assert_relative_eq!(o.stationary, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn star_lemma_bound() {
        let rm = build_generator(&star3(), &[1, 2, 3, 4], Dynamics::Classical, 0.0).unwrap();
        let o = observed_meeting(&rm, &[0, 1, 2, 3], &Caps::default()).unwrap();
        assert_relative_eq!(o.stationary, 0.75, epsilon = 1e-12);
        assert!(o.stationary <= (3.0 + 3f64.powf(0.0)) / 2.0);
    }
}
