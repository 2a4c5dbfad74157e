//! Relaxation and mixing through the `pi`-symmetrised generator.
//!
//! `S = D^(1/2) (-Q) D^(-1/2)` with `D = diag(pi)` is symmetric for a
//! reversible chain, so `S = U diag(lambda) U^T` and
//! `P_t(x, y) = sqrt(pi(y) / pi(x)) sum_k exp(-lambda_k t) U_xk U_yk`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_cap, Caps, RateMatrix};
use crate::error::{Error, Result};

pub const BISECTION_TOLERANCE: f64 = 1e-6;
const CURVE_POINTS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectral {
    /// Eigenvalues of `-Q`, ascending (the first is zero).
    pub eigenvalues: Vec<f64>,
    /// `1 / lambda_2`; zero for a single state.
    pub t_rel: f64,
    /// `min { t : d(t) <= 1/4 }`.
    pub t_mix: f64,
    /// Per start `x`: `min { t : ||P_t(x, .) - pi||_1 <= 1/2 }`.
    pub t_mix_from: Vec<f64>,
    /// `(t, d(t))` on a log-spaced grid, starting at `t = 0`.
    pub curve: Vec<(f64, f64)>,
}

/// Transition kernel evaluator built from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct Kernel {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    sqrt_pi: Vec<f64>,
    pi: Vec<f64>,
}

impl Kernel {
    pub fn new(rm: &RateMatrix) -> Self {
        let n = rm.len();
        let sqrt_pi: Vec<f64> = rm.pi.iter().map(|p| p.sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for x in 0..n {
            s[(x, x)] = rm.exit[x];
            for &y in &rm.neighbors[x] {
                s[(x, y)] = -sqrt_pi[x] * rm.rate(x, y) / sqrt_pi[y];
            }
        }
        // Remove rounding asymmetry before the symmetric solver sees it.
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k].max(0.0)));
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Self { vectors, values, sqrt_pi, pi: rm.pi.clone() }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.values.as_slice()
    }

    /// Row `P_t(x, .)`.
    pub fn row(&self, x: usize, t: f64) -> Vec<f64> {
        let n = self.pi.len();
        let w = DVector::from_fn(n, |k, _| (-self.values[k] * t).exp() * self.vectors[(x, k)]);
        let r = &self.vectors * w;
        (0..n).map(|y| r[y] * self.sqrt_pi[y] / self.sqrt_pi[x]).collect()
    }

    /// `||P_t(x, .) - pi||_1`.
    pub fn l1_from(&self, x: usize, t: f64) -> f64 {
        self.row(x, t).iter().zip(&self.pi).map(|(p, q)| (p - q).abs()).sum()
    }

    /// `d(t) = max_x ||P_t(x, .) - pi||_1 / 2`.
    pub fn distance(&self, t: f64) -> f64 {
        (0..self.pi.len()).map(|x| 0.5 * self.l1_from(x, t)).fold(0.0, f64::max)
    }
}

/// Smallest `t` with `f(t) <= level` for nonincreasing `f`, to relative tolerance.
fn crossing<F: Fn(f64) -> f64>(f: F, level: f64, scale: f64) -> Result<f64> {
    if f(0.0) <= level {
        return Ok(0.0);
    }
    let mut hi = scale.max(f64::MIN_POSITIVE);
    let mut lo = 0.0;
    let mut steps = 0;
    while f(hi) > level {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::Numerical("distance never falls below the threshold".into()));
        }
    }
    while hi - lo > BISECTION_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn spectral(rm: &RateMatrix, caps: &Caps) -> Result<Spectral> {
    let n = rm.len();
    check_cap("spectral", n, caps.spectral)?;
    let kernel = Kernel::new(rm);
    let eigenvalues = kernel.eigenvalues().to_vec();
    if n == 1 {
        return Ok(Spectral { eigenvalues, t_rel: 0.0, t_mix: 0.0, t_mix_from: vec![0.0], curve: vec![(0.0, 0.0)] });
    }
    let gap = eigenvalues[1];
    if !(gap > 0.0) {
        return Err(Error::Disconnected);
    }
    let t_rel = 1.0 / gap;
    let t_mix = crossing(|t| kernel.distance(t), 0.25, t_rel)?;
    let t_mix_from = (0..n)
        .map(|x| crossing(|t| kernel.l1_from(x, t), 0.5, t_rel))
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = ((1e-3 * t_mix).ln(), (10.0 * t_mix).ln());
    let mut curve = vec![(0.0, kernel.distance(0.0))];
    for k in 0..CURVE_POINTS {
        let t = (a + (b - a) * k as f64 / (CURVE_POINTS - 1) as f64).exp();
        curve.push((t, kernel.distance(t)));
    }
    Ok(Spectral { eigenvalues, t_rel, t_mix, t_mix_from, curve })
}

/// Whether `d(t)` never increases along the grid (up to rounding).
pub fn curve_is_monotone(curve: &[(f64, f64)]) -> bool {
    curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12)
}
