//! Hand-rolled linear-algebra oracles for the integration tests.
//!
//! Deliberately independent of the SVD-based implementation paths they
//! check: rank comes from Gaussian elimination with partial pivoting,
//! minimum-norm solutions from the normal equations of the transposed
//! system solved by the same elimination.

#![allow(dead_code)]

pub fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = m.len();
    let cols = m[0].len();
    (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let v = a[i][l];
            if v == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += v * b[l][j];
            }
        }
    }
    out
}

/// Rank by Gaussian elimination with partial pivoting; pivots below
/// `tol * max_abs_entry` count as zero.
pub fn gauss_rank(matrix: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = matrix.to_vec();
    let rows = m.len();
    let cols = m[0].len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let threshold = tol * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let (best_row, best) = (row..rows)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((row, 0.0));
        if best <= threshold {
            continue;
        }
        m.swap(row, best_row);
        let pivot = m[row][col];
        for r in (row + 1)..rows {
            let factor = m[r][col] / pivot;
            for c in col..cols {
                m[r][c] -= factor * m[row][c];
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Solves a square system `a x = b` by Gaussian elimination with partial
/// pivoting. Panics on a singular pivot; callers use it only on systems
/// known to be regular.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().total_cmp(&m[r2][col].abs()))
            .unwrap();
        m.swap(col, pivot_row);
        let pivot = m[col][col];
        assert!(pivot.abs() > 1e-14, "singular system in oracle solve");
        for r in (col + 1)..n {
            let factor = m[r][col] / pivot;
            for c in col..=n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for c in (row + 1)..n {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// Minimum-norm solution of the underdetermined full-row-rank system
/// `a x = b` via `x = a^T (a a^T)^{-1} b`.
pub fn min_norm_solution(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let at = transpose(a);
    let gram = matmul(a, &at);
    let y = gauss_solve(&gram, b);
    matvec(&at, &y)
}

/// Converts an nalgebra matrix into the row-major nested vectors the
/// oracles work on.
pub fn rows_of(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
