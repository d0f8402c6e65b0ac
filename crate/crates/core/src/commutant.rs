//! Solution spaces of linear matrix equations `X S_k = T_k X`.
//!
//! The complex unknown `X` (m_out × m_in) is split into real and imaginary
//! parts and the equations are row reduced with partial pivoting. Pivots
//! below `RANK_TOL` times the largest coefficient count as zero.

use num_complex::Complex64;

use crate::linalg::CMatrix;

pub const RANK_TOL: f64 = 1e-9;

/// Real basis of `{X : X S_k = T_k X for all k}`, returned as complex matrices.
///
/// Every `S_k` must be `m_in × m_in` and every `T_k` `m_out × m_out`.
pub fn intertwiner_basis(sources: &[CMatrix], targets: &[CMatrix]) -> Vec<CMatrix> {
    assert_eq!(sources.len(), targets.len(), "one target per source");
    let (m_out, m_in) = match (targets.first(), sources.first()) {
        (Some(t), Some(s)) => (t.nrows(), s.nrows()),
        _ => panic!("intertwiner equations need at least one pair"),
    };
    let cells = m_out * m_in;
    let cols = 2 * cells;
    let var = |p: usize, q: usize| p * m_in + q;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * cells * sources.len());
    for (s, t) in sources.iter().zip(targets) {
        // Entry (i, j) of X S - T X.
        for i in 0..m_out {
            for j in 0..m_in {
                let mut coeff = vec![Complex64::new(0.0, 0.0); cells];
                for k in 0..m_in {
                    coeff[var(i, k)] += s[(k, j)];
                }
                for k in 0..m_out {
                    coeff[var(k, j)] -= t[(i, k)];
                }
                let mut re_row = vec![0.0; cols];
                let mut im_row = vec![0.0; cols];
                for (v, c) in coeff.iter().enumerate() {
                    re_row[v] = c.re;
                    re_row[cells + v] = -c.im;
                    im_row[v] = c.im;
                    im_row[cells + v] = c.re;
                }
                rows.push(re_row);
                rows.push(im_row);
            }
        }
    }

    real_nullspace(rows, cols)
        .into_iter()
        .map(|x| {
            CMatrix::from_fn(m_out, m_in, |p, q| {
                Complex64::new(x[var(p, q)], x[cells + var(p, q)])
            })
        })
        .collect()
}

/// Complex dimension of the commutant `{X : X A_k = A_k X}`.
pub fn commutant_dimension(ops: &[CMatrix]) -> usize {
    // The commutant is a complex subspace, so its real dimension is even.
    intertwiner_basis(ops, ops).len() / 2
}

/// Nullspace of a dense real matrix via reduced row echelon form.
pub fn real_nullspace(mut a: Vec<Vec<f64>>, cols: usize) -> Vec<Vec<f64>> {
    let nrows = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = RANK_TOL * scale;

    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == nrows {
            break;
        }
        let (best, val) = (r..nrows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        a.swap(r, best);
        let inv = 1.0 / a[r][c];
        for x in a[r].iter_mut() {
            *x *= inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }

    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![0.0; cols];
            v[f] = 1.0;
            for (k, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[k][f];
            }
            v
        })
        .collect()
}
