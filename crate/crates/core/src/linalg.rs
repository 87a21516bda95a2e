//! Small dense helpers shared by the geometry modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Cholesky factorization that reports the first failing pivot.
///
/// Returns the lower factor, or `Err(k)` when pivot `k` is not strictly positive
/// (or not finite).
pub fn cholesky(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    cholesky(m).is_ok()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Symmetry defect `max |m - mᵀ|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Smallest eigenvalue of a symmetric matrix (NaN if any entry is not finite).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Gauss-Jordan inverse of a square matrix of jets, pivoting on values.
pub fn invert_jets(a: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, j| acc.max(j.value().abs()));
    let mut work: Vec<Vec<Jet>> = a.to_vec();
    let template = &a[0][0];
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| template.lift(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                work[r][col]
                    .value()
                    .abs()
                    .total_cmp(&work[s][col].value().abs())
            })
            .expect("non-empty pivot range");
        let pv = work[pivot][col].value();
        if !(pv.abs() > 1e-14 * scale) || !pv.is_finite() {
            return Err(Error::Regularity(format!(
                "matrix is singular (pivot {col} = {pv:e})"
            )));
        }
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let r = work[col][col].recip();
        for j in 0..n {
            work[col][j] = &work[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row][col].clone();
            for j in 0..n {
                let w = &work[row][j] - &(&factor * &work[col][j]);
                let v = &inv[row][j] - &(&factor * &inv[col][j]);
                work[row][j] = w;
                inv[row][j] = v;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reports_failing_pivot() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(cholesky(&m).unwrap_err(), 1);
        let pd = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&pd).unwrap();
        assert!(max_abs(&(&l * l.transpose() - pd)) < 1e-15);
    }

    #[test]
    fn jet_inverse_matches_plain_inverse() {
        let (x, _) = crate::jet::seed(&[0.5, 2.0], &[1.0, 1.0], 1);
        let a = vec![
            vec![&x[0] + 2.0, &x[1] * 0.5],
            vec![&x[0] * &x[1], x[1].lift(3.0)],
        ];
        let inv = invert_jets(&a).unwrap();
        let plain = DMatrix::from_row_slice(2, 2, &[2.5, 1.0, 1.0, 3.0])
            .try_inverse()
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].value() - plain[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn singular_jet_matrix_is_rejected() {
        let (x, _) = crate::jet::seed(&[1.0], &[1.0], 0);
        let a = vec![vec![x[0].clone(), x[0].clone()], vec![x[0].clone(), x[0].clone()]];
        assert!(matches!(invert_jets(&a), Err(Error::Regularity(_))));
    }
}
