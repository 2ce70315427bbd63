//! Exact rectangular assignment maximizing total integer weight, via the
//! O(n^3) potentials formulation on the padded square cost matrix.

use alloc::vec;
use alloc::vec::Vec;

/// Maximum-weight 1:1 assignment of rows to columns of `weights`
/// (`rows x cols`, non-negative). Returns `(row, col)` pairs for every
/// assigned pair with positive weight.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<(usize, usize)> {
    let rows = weights.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = weights[0].len();
    if cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);
    let max_w = weights
        .iter()
        .flat_map(|r| r.iter().copied())
        .max()
        .unwrap_or(0);

    // Pad to square and convert to a minimization problem.
    let cost = |r: usize, c: usize| -> i64 {
        if r < rows && c < cols {
            max_w - weights[r][c]
        } else {
            max_w
        }
    };

    // Shortest augmenting path with potentials; 1-based columns, column 0
    // is the virtual start.
    let mut row_pot = vec![0i64; n + 1];
    let mut col_pot = vec![0i64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // column -> row (1-based)
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        assigned_row[0] = r;
        let mut j0 = 0usize;
        let mut min_to = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    row_pot[assigned_row[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = Vec::new();
    for j in 1..=n {
        let r = assigned_row[j];
        if r >= 1 && r - 1 < rows && j - 1 < cols && weights[r - 1][j - 1] > 0 {
            out.push((r - 1, j - 1));
        }
    }
    out.sort_unstable();
    out
}
