//! Expected hitting times `E_x T_y`.
//!
//! The main route inverts `Pi - Q` once (`Pi` has every row equal to `pi`),
//! which yields the fundamental matrix `Z = (Pi - Q)^-1 - Pi` and
//! `E_x T_y = (Z_yy - Z_xy) / pi(y)`. [`hitting_times_to`] solves the
//! absorption system for a single target instead.

use nalgebra::{DMatrix, DVector};

use super::linalg::{solve_checked, solve_vector};
use super::{check_cap, Caps, RateMatrix};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimes {
    /// `matrix[(x, y)] = E_x T_y`.
    pub matrix: DMatrix<f64>,
    /// `max_{x,y} E_x T_y`.
    pub t_hit: f64,
    /// `t_hit(s) = max_x E_x T_s`.
    pub t_hit_target: Vec<f64>,
    /// `E_pi T_y`.
    pub from_stationary: Vec<f64>,
}

impl HittingTimes {
    pub fn commute(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)] + self.matrix[(y, x)]
    }
}

pub fn hitting_times(rm: &RateMatrix, caps: &Caps) -> Result<HittingTimes> {
    let n = rm.len();
    check_cap("hitting times", n, caps.hitting)?;
    let mut a = -rm.generator();
    for x in 0..n {
        for y in 0..n {
            a[(x, y)] += rm.pi[y];
        }
    }
    let m = solve_checked(&a, &DMatrix::identity(n, n))?;
    let matrix = DMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { (m[(y, y)] - m[(x, y)]) / rm.pi[y] });
    let from_stationary = (0..n).map(|y| (m[(y, y)] - rm.pi[y]) / rm.pi[y]).collect();
    Ok(summarize(matrix, from_stationary))
}

fn summarize(matrix: DMatrix<f64>, from_stationary: Vec<f64>) -> HittingTimes {
    let n = matrix.nrows();
    let t_hit_target: Vec<f64> = (0..n).map(|y| matrix.column(y).max().max(0.0)).collect();
    let t_hit = t_hit_target.iter().copied().fold(0.0, f64::max);
    HittingTimes { matrix, t_hit, t_hit_target, from_stationary }
}

/// `E_x T_y` for all `x`, by one absorption solve on the states other than `y`.
pub fn hitting_times_to(rm: &RateMatrix, y: usize) -> Result<Vec<f64>> {
    let n = rm.len();
    let others: Vec<usize> = (0..n).filter(|&x| x != y).collect();
    let a = DMatrix::from_fn(others.len(), others.len(), |i, j| {
        let (x, z) = (others[i], others[j]);
        if x == z {
            rm.exit[x]
        } else {
            -rm.rate(x, z)
        }
    });
    let h = solve_vector(&a, &DVector::from_element(others.len(), 1.0))?;
    let mut out = vec![0.0; n];
    for (i, &x) in others.iter().enumerate() {
        out[x] = h[i];
    }
    Ok(out)
}

/// All targets through [`hitting_times_to`]; `O(n^4)`, meant for cross-checks.
pub fn hitting_times_by_target(rm: &RateMatrix, caps: &Caps) -> Result<HittingTimes> {
    let n = rm.len();
    check_cap("hitting times", n, caps.hitting)?;
    let mut matrix = DMatrix::zeros(n, n);
    for y in 0..n {
        let col = hitting_times_to(rm, y)?;
        for x in 0..n {
            matrix[(x, y)] = col[x];
        }
    }
    let from_stationary = (0..n).map(|y| (0..n).map(|x| rm.pi[x] * matrix[(x, y)]).sum()).collect();
    Ok(summarize(matrix, from_stationary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::build_generator;
    use crate::graph::Graph;
    use crate::Dynamics;
    use approx::assert_relative_eq;

    #[test]
    fn single_edge() {
        let g = Graph::simple(2, &[(1, 2)]).unwrap();
        let rm = build_generator(&g, &[1, 2], Dynamics::Classical, 0.3).unwrap();
        let h = hitting_times(&rm, &Caps::default()).unwrap();
        assert_relative_eq!(h.matrix[(0, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.t_hit, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn path3_classical_theta0() {
        let g = Graph::simple(3, &[(1, 2), (2, 3)]).unwrap();
        let rm = build_generator(&g, &[1, 2, 3], Dynamics::Classical, 0.0).unwrap();
        let h = hitting_times(&rm, &Caps::default()).unwrap();
        assert_relative_eq!(h.matrix[(0, 2)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(h.commute(0, 2), 8.0, epsilon = 1e-12);
        let direct = hitting_times_to(&rm, 2).unwrap();
        assert_relative_eq!(direct[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(direct[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn routes_agree() {
        let g = Graph::simple(5, &[(1, 2), (2, 3), (3, 4), (4, 1), (4, 5), (2, 5)]).unwrap();
        for d in Dynamics::ALL {
            let rm = build_generator(&g, &[1, 2, 3, 4, 5], d, -0.7).unwrap();
            let a = hitting_times(&rm, &Caps::default()).unwrap();
            let b = hitting_times_by_target(&rm, &Caps::default()).unwrap();
            for (u, v) in a.matrix.iter().zip(b.matrix.iter()) {
                assert_relative_eq!(*u, *v, max_relative = 1e-10, epsilon = 1e-12);
            }
            for (u, v) in a.from_stationary.iter().zip(&b.from_stationary) {
                assert_relative_eq!(*u, *v, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let g = Graph::simple(3, &[(1, 2), (2, 3)]).unwrap();
        let rm = build_generator(&g, &[1, 2, 3], Dynamics::Classical, 0.0).unwrap();
        let caps = Caps { hitting: 2, ..Caps::default() };
        assert!(hitting_times(&rm, &caps).is_err());
    }
}
