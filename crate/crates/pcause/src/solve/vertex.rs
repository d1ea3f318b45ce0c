//! Vertex enumeration for systems {A q = b, q >= 0} by scanning basic
//! feasible solutions: every column subset of size rank(A) that yields a
//! nonsingular square system and a nonnegative solution is a candidate
//! vertex.

use super::linalg::{binomial, independent_rows, solve_square};
use crate::error::{Error, Result};

pub struct EnumOptions {
    pub basis_budget: u64,
    pub feas_tol: f64,
    pub pivot_tol: f64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            basis_budget: 4_000_000,
            feas_tol: 1e-8,
            pivot_tol: 1e-10,
        }
    }
}

/// Enumerates the vertices of {q in R^dim : rows q = rhs, sum q = 1, q >= 0}.
///
/// `label` names the polytope in errors. Duplicate vertices are removed
/// under an L-infinity tolerance; tiny negative entries are clamped to 0.
pub fn enumerate(
    rows: &[(Vec<f64>, f64)],
    dim: usize,
    label: &str,
    opts: &EnumOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r.clone()).collect();
    let mut b: Vec<f64> = rows.iter().map(|(_, v)| *v).collect();
    a.push(vec![1.0; dim]);
    b.push(1.0);

    let (kept, consistent) = independent_rows(&a, &b, opts.pivot_tol);
    if !consistent {
        return Err(Error::InfeasiblePolytope(label.to_string()));
    }
    let rank = kept.len();
    if rank == 0 || rank > dim {
        return Err(Error::InfeasiblePolytope(label.to_string()));
    }
    let bases = binomial(dim as u64, rank as u64);
    if bases > opts.basis_budget {
        return Err(Error::DegreeTooHigh {
            needed: bases,
            budget: opts.basis_budget,
        });
    }
    let a_ind: Vec<&Vec<f64>> = kept.iter().map(|&i| &a[i]).collect();
    let b_ind: Vec<f64> = kept.iter().map(|&i| b[i]).collect();

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut cols: Vec<usize> = (0..rank).collect();
    loop {
        // Solve for the basic columns, zero elsewhere.
        let sub: Vec<Vec<f64>> = a_ind
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        if let Some(x) = solve_square(sub, b_ind.clone(), opts.pivot_tol) {
            if x.iter().all(|&v| v >= -opts.feas_tol.max(1e-10)) {
                let mut q = vec![0.0; dim];
                for (slot, &c) in cols.iter().enumerate() {
                    q[c] = x[slot].max(0.0);
                }
                // Recheck every original row; redundant rows must hold too.
                let ok = a.iter().zip(&b).all(|(row, &rhs)| {
                    let lhs: f64 = row.iter().zip(&q).map(|(r, v)| r * v).sum();
                    (lhs - rhs).abs() <= opts.feas_tol
                });
                if ok
                    && !vertices
                        .iter()
                        .any(|v| v.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-8))
                {
                    vertices.push(q);
                }
            }
        }
        if !next_combination(&mut cols, dim) {
            break;
        }
    }

    if vertices.is_empty() {
        return Err(Error::InfeasiblePolytope(label.to_string()));
    }
    Ok(vertices)
}

/// Advances `cols` to the next k-combination of {0..n} in lexicographic
/// order; false once the last combination has been visited.
fn next_combination(cols: &mut [usize], n: usize) -> bool {
    let k = cols.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cols[i] < n - k + i {
            cols[i] += 1;
            for j in (i + 1)..k {
                cols[j] = cols[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
