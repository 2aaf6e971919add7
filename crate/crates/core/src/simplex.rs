//! Minimal two-phase primal simplex for the gauge LP oracle:
//! minimize sum(x) subject to A x = b, x >= 0, with A given by columns.
//!
//! Bland's rule throughout, so the method terminates on degenerate instances.
//! Sizes here are tiny (p <= 8 rows); a dense tableau is fine.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;

pub fn solve_min_sum(columns: &[Vec<f64>], b: &[f64]) -> Result<f64> {
    let m = b.len();
    let n = columns.len();
    if n == 0 || columns.iter().any(|c| c.len() != m) {
        return Err(Error::Shape("simplex: inconsistent column lengths".into()));
    }
    // tableau: m constraint rows, columns = n structural + m artificial + rhs
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m];
    for (i, row) in t.iter_mut().enumerate() {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, col) in columns.iter().enumerate() {
            row[j] = flip * col[i];
        }
        row[n + i] = 1.0;
        row[width - 1] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: minimize the artificial sum
    let mut cost = vec![0.0f64; width];
    for row in &t {
        for (c, v) in cost.iter_mut().zip(row) {
            *c -= v;
        }
    }
    for j in n..n + m {
        cost[j] = 0.0;
    }
    run_simplex(&mut t, &mut basis, &mut cost, width - 1, |_| true)?;
    let phase1 = -cost[width - 1];
    if phase1 > 1e-7 {
        return Err(Error::NoConvergence {
            what: "gauge LP phase 1",
            residual: phase1,
            iterations: 0,
        });
    }

    // phase 2: original objective, artificial columns barred from entering
    let mut cost = vec![0.0f64; width];
    for j in 0..n {
        cost[j] = 1.0;
    }
    // express objective in terms of the current basis
    for (i, &bj) in basis.iter().enumerate() {
        let c = cost[bj];
        if c != 0.0 {
            for j in 0..width {
                cost[j] -= c * t[i][j];
            }
        }
    }
    run_simplex(&mut t, &mut basis, &mut cost, width - 1, |j| j < n)?;
    Ok(-cost[width - 1])
}

fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &mut [f64],
    rhs: usize,
    admissible: impl Fn(usize) -> bool,
) -> Result<()> {
    let m = t.len();
    for iter in 0..200_000 {
        // Bland: smallest-index admissible column with negative reduced cost
        let entering = (0..rhs).find(|&j| admissible(j) && cost[j] < -PIVOT_EPS);
        let Some(e) = entering else { return Ok(()) };
        // ratio test, ties by smallest basis index
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][e] > PIVOT_EPS {
                let ratio = t[i][rhs] / t[i][e];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - PIVOT_EPS
                            || (ratio < best + PIVOT_EPS && basis[i] < basis[l])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::NoConvergence {
                what: "gauge LP (unbounded)",
                residual: f64::INFINITY,
                iterations: iter,
            });
        };
        pivot(t, cost, l, e, rhs);
        basis[l] = e;
    }
    Err(Error::NoConvergence { what: "gauge LP", residual: cost[rhs].abs(), iterations: 200_000 })
}

fn pivot(t: &mut [Vec<f64>], cost: &mut [f64], l: usize, e: usize, rhs: usize) {
    let piv = t[l][e];
    for v in t[l].iter_mut() {
        *v /= piv;
    }
    let lrow = t[l].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != l && row[e].abs() > 0.0 {
            let f = row[e];
            for (v, &lv) in row.iter_mut().zip(&lrow) {
                *v -= f * lv;
            }
        }
    }
    let f = cost[e];
    if f != 0.0 {
        for (c, &lv) in cost.iter_mut().zip(&lrow) {
            *c -= f * lv;
        }
    }
    let _ = rhs;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp() {
        // min x1 + x2 s.t. x1 + x2 = 1 -> 1 (any split)
        let cols = vec![vec![1.0], vec![1.0]];
        assert!((solve_min_sum(&cols, &[1.0]).unwrap() - 1.0).abs() < 1e-10);
        // min-sum representation of (1, 1) over +-e_i columns costs 2
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        assert!((solve_min_sum(&cols, &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-10);
        // negative rhs handled by row flips
        assert!((solve_min_sum(&cols, &[-1.0, 2.0]).unwrap() - 3.0).abs() < 1e-10);
    }
}
