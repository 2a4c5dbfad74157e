//! Dense LU solves with a residual gate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Solves `a x = b` column by column, failing when `||a x - b||_inf > 1e-9 ||b||_inf`.
pub fn solve_checked(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular system".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    let residual = inf_norm(&(a * &x - b));
    let scale = inf_norm(b).max(f64::MIN_POSITIVE);
    if residual > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Numerical(format!(
            "residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} * {scale:e}"
        )));
    }
    Ok(x)
}

pub fn solve_vector(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve_checked(a, &bm)?;
    Ok(DVector::from_column_slice(x.as_slice()))
}

/// Expected accumulated reward until absorption for a chain on transient
/// states `0..m`. `jumps(s, out)` fills `(target, rate)` pairs where `None`
/// is absorption; `rewards` holds one column per reward function.
pub fn absorption<F>(m: usize, mut jumps: F, rewards: &DMatrix<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(usize, &mut Vec<(Option<usize>, f64)>),
{
    let mut a = DMatrix::zeros(m, m);
    let mut out = Vec::new();
    for s in 0..m {
        out.clear();
        jumps(s, &mut out);
        for &(t, r) in &out {
            a[(s, s)] += r;
            if let Some(t) = t {
                if t != s {
                    a[(s, t)] -= r;
                } else {
                    a[(s, s)] -= r;
                }
            }
        }
    }
    solve_checked(&a, rewards)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_gates() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let x = solve_checked(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_checked(&singular, &b).is_err());
    }

    #[test]
    fn exponential_holding_time() {
        // One transient state left at rate 2: expected time 1/2.
        let r = absorption(1, |_, out| out.push((None, 2.0)), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(r[0], 0.5);
    }
}
