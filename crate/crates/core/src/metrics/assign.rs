//! Minimum-cost one-to-one assignment (Hungarian method with row/column
//! potentials, O(n^2 m)).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matched `(row, column, cost)` triples plus the rows and columns left
/// over when the matrix is not square.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }
}

/// Optimal assignment of rows to columns covering `min(rows, cols)` pairs.
/// Pairs are returned in row order.
pub fn assign(costs: &DMatrix<f64>) -> Result<Assignment> {
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("assignment costs must be finite".into()));
    }
    let (rows, cols) = costs.shape();
    if rows == 0 || cols == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        });
    }
    let row_to_col: Vec<usize> = if rows <= cols {
        solve(rows, cols, |i, j| costs[(i, j)])
    } else {
        let col_to_row = solve(cols, rows, |i, j| costs[(j, i)]);
        let mut map = vec![usize::MAX; rows];
        for (c, &r) in col_to_row.iter().enumerate() {
            map[r] = c;
        }
        map
    };
    let mut used_cols = vec![false; cols];
    let mut pairs = Vec::new();
    let mut unmatched_rows = Vec::new();
    for (r, &c) in row_to_col.iter().enumerate() {
        if c == usize::MAX {
            unmatched_rows.push(r);
        } else {
            used_cols[c] = true;
            pairs.push((r, c, costs[(r, c)]));
        }
    }
    let unmatched_cols = (0..cols).filter(|&c| !used_cols[c]).collect();
    Ok(Assignment {
        pairs,
        unmatched_rows,
        unmatched_cols,
    })
}

/// Column chosen for every row of an `n x m` problem with `n <= m`.
fn solve(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based potentials; column 0 is a virtual source
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}
