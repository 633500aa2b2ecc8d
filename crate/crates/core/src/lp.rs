//! Dense tableau simplex for small packing LPs: maximize c·x subject to Ax ≤ b, x ≥ 0, b ≥ 0.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Solves max c·x s.t. Ax ≤ b, x ≥ 0. Requires b ≥ 0 so the slack basis is feasible.
/// Bland's rule keeps degenerate problems from cycling.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("constraint matrix shape".into()));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("right-hand sides must be nonnegative".into()));
    }
    let width = n + m + 1;
    // rows 0..m are constraints, row m is the objective (reduced costs negated)
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    for _ in 0..MAX_PIVOTS {
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -PIVOT_EPS) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i][width - 1];
                }
            }
            let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            return Ok(LpSolution { x, value });
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_EPS {
                let ratio = t[i][width - 1] / t[i][col];
                let better = ratio < best - PIVOT_EPS
                    || (ratio <= best + PIVOT_EPS && row.is_some_and(|r: usize| basis[i] < basis[r]));
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let Some(r) = row else {
            return Err(Error::InvalidInput("linear program is unbounded".into()));
        };
        let p = t[r][col];
        t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = t[r].clone();
        for (i, row_i) in t.iter_mut().enumerate() {
            if i != r {
                let f = row_i[col];
                if f != 0.0 {
                    row_i.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        basis[r] = col;
    }
    Err(Error::NotConverged { best: f64::NAN, residual: f64::NAN })
}
