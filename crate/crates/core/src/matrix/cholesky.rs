use crate::error::{Error, Result};

use super::dense::{Matrix, SpdMatrix, SymmetricMatrix};

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
///
/// A pivot at or below `dim * eps * ‖A‖_max` is reported as
/// [`Error::NotPositiveDefinite`].
pub fn cholesky(a: &SymmetricMatrix) -> Result<Matrix> {
    let n = a.dim();
    let threshold = n as f64 * f64::EPSILON * a.max_abs();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn substitute(lower: &Matrix, b: &Matrix) -> Matrix {
    let n = lower.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        // L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= lower[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lower[(i, i)];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= lower[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / lower[(i, i)];
        }
    }
    x
}

/// Solves `A X = B` using the stored Cholesky factor, followed by one
/// step of iterative refinement.
pub fn solve_spd(a: &SpdMatrix, b: &Matrix) -> Result<Matrix> {
    if b.rows() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "solve_spd: A is {0}x{0}, B has {1} rows",
            a.dim(),
            b.rows()
        )));
    }
    let x = substitute(a.factor(), b);
    let residual = b.sub(&a.matmul(&x));
    Ok(x.add(&substitute(a.factor(), &residual)))
}
