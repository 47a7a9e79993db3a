//! Mixed equilibria of finite zero-sum matrix games by a dense simplex method.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

/// Optimal mixed strategies of a zero-sum game; the row player maximizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub column_strategy: Vec<f64>,
}

/// Solves `max_x min_y xᵀAy` for a row-major `m × n` payoff matrix.
///
/// After shifting `A` to be positive, the column player's problem is
/// `max Σy s.t. Ay ≤ 1, y ≥ 0`; the row strategy is read from its duals.
pub fn solve_matrix_game(payoff: &[Vec<f64>]) -> Result<MatrixGameSolution> {
    let m = payoff.len();
    if m == 0 || payoff[0].is_empty() {
        return Err(Error::Empty);
    }
    let n = payoff[0].len();
    if let Some(row) = payoff.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: row.len(),
        });
    }
    if payoff.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let min_entry = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry;

    // Tableau rows: one per payoff row, then the objective. Columns: n column-player variables, m slacks, rhs.
    let width = n + m + 1;
    let mut t = alloc::vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = payoff[i][j] + shift;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = 1.0;
    }
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0;
    // Bland's rule: lowest-index improving column, lowest-index basic variable among ratio ties.
    while let Some(enter) = (0..n + m).find(|&c| t[obj + c] < -PIVOT_TOL) {
        let mut leave: Option<usize> = None;
        for r in 0..m {
            let a = t[r * width + enter];
            if a > PIVOT_TOL {
                let ratio = t[r * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let best = t[l * width + width - 1] / t[l * width + enter];
                        ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[r] < basis[l])
                    }
                };
                if better {
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Infeasible("matrix game LP is unbounded".into()));
        };
        let pivot = t[r * width + enter];
        for c in 0..width {
            t[r * width + c] /= pivot;
        }
        for row in 0..=m {
            if row != r {
                let factor = t[row * width + enter];
                if factor != 0.0 {
                    for c in 0..width {
                        t[row * width + c] -= factor * t[r * width + c];
                    }
                }
            }
        }
        basis[r] = enter;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::NonConvergence { iterations: pivots });
        }
    }

    let total = t[obj + width - 1];
    let mut y = alloc::vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            y[b] = t[r * width + width - 1];
        }
    }
    let column_strategy = normalize(y.iter().map(|x| x.max(0.0)).collect());
    let row_strategy = normalize((0..m).map(|i| t[obj + n + i].max(0.0)).collect());
    Ok(MatrixGameSolution {
        value: 1.0 / total - shift,
        row_strategy,
        column_strategy,
    })
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}
