//! Just enough dense linear algebra for basis enumeration: row echelon
//! with partial pivoting for rank and consistency, LU for square solves.

#![allow(clippy::needless_range_loop)] // in-place row operations index two rows at once

/// Reduces `[a | b]` and returns (indices of independent rows, consistent).
/// Inconsistent means some zero row of `a` pairs with a nonzero entry of
/// `b`, i.e. the system has no solution at all.
pub fn independent_rows(a: &[Vec<f64>], b: &[f64], tol: f64) -> (Vec<usize>, bool) {
    let m = a.len();
    if m == 0 {
        return (Vec::new(), true);
    }
    let n = a[0].len();
    let mut mat: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut row_of = (0..m).collect::<Vec<_>>();
    let mut kept = Vec::new();
    let mut r = 0usize;
    for c in 0..n {
        // Partial pivot.
        let Some(p) = (r..m).max_by(|&i, &j| {
            mat[i][c]
                .abs()
                .partial_cmp(&mat[j][c].abs())
                .expect("finite")
        }) else {
            break;
        };
        if mat[p][c].abs() <= tol {
            continue;
        }
        mat.swap(r, p);
        row_of.swap(r, p);
        kept.push(row_of[r]);
        let pivot = mat[r][c];
        for i in 0..m {
            if i != r && mat[i][c].abs() > 0.0 {
                let f = mat[i][c] / pivot;
                for k in c..=n {
                    mat[i][k] -= f * mat[r][k];
                }
            }
        }
        r += 1;
        if r == m {
            break;
        }
    }
    // Any remaining row with ~zero coefficients but nonzero rhs is a
    // contradiction.
    let mut consistent = true;
    for i in r..m {
        let coeff_zero = mat[i][..mat[i].len() - 1].iter().all(|v| v.abs() <= tol);
        if coeff_zero && mat[i][mat[i].len() - 1].abs() > tol.max(1e-7) {
            consistent = false;
        }
    }
    kept.sort_unstable();
    (kept, consistent)
}

/// Solves a square system by LU with partial pivoting. `None` when the
/// matrix is singular at the pivot tolerance.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| {
            a[i][c].abs().partial_cmp(&a[j][c].abs()).expect("finite")
        })?;
        if a[p][c].abs() <= tol {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        let pivot = a[c][c];
        for i in (c + 1)..n {
            if a[i][c] == 0.0 {
                continue;
            }
            let f = a[i][c] / pivot;
            for k in c..n {
                a[i][k] -= f * a[c][k];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Binomial coefficient, saturating.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}
