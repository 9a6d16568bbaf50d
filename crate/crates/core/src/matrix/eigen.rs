use crate::error::{Error, Result};

use super::dd::{Dd, DdMatrix};
use super::dense::{Matrix, SymmetricMatrix};

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 30;
/// Convergence: off-diagonal Frobenius norm relative to ‖A‖_F.
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Eigenvalues in ascending order with orthonormal eigenvectors stored
/// as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Matrix,
}

impl Spectrum {
    /// Builds a spectrum from eigenvalues alone (identity eigenvectors).
    /// Values are sorted ascending.
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Self {
            values: v,
            vectors: Matrix::identity(n),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn smallest(&self) -> f64 {
        self.values[0]
    }

    pub fn largest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V diag(d) Vᵀ`, the spectral function with per-eigenvalue weights `d`.
    pub fn reassemble(&self, weights: &[f64]) -> SymmetricMatrix {
        assert_eq!(weights.len(), self.dim());
        let v = &self.vectors;
        let n = self.dim();
        let m = Matrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * weights[k] * v[(j, k)]).sum()
        });
        SymmetricMatrix::new(m).expect("square by construction")
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymmetricMatrix) -> Result<Spectrum> {
    let n = a.dim();
    let mut work = a.as_slice().to_vec();
    let mut v = Matrix::identity(n).as_slice().to_vec();
    jacobi(&mut work, n, Some(&mut v))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[i * n + i].total_cmp(&work[j * n + j]));
    let values = order.iter().map(|&k| work[k * n + k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues only, ascending, computed in place on the row-major
/// buffer `work` (which is destroyed). Same rotations as [`sym_eigen`],
/// so the values agree bit for bit.
pub(crate) fn sym_eigenvalues_in_place(work: &mut [f64], n: usize, out: &mut [f64]) -> Result<()> {
    jacobi(work, n, None)?;
    for (k, o) in out[..n].iter_mut().enumerate() {
        *o = work[k * n + k];
    }
    out[..n].sort_by(f64::total_cmp);
    Ok(())
}

fn jacobi(work: &mut [f64], n: usize, mut v: Option<&mut [f64]>) -> Result<()> {
    let frob = work[..n * n].iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * frob;
    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(work) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(work, n, v.as_deref_mut(), p, q);
            }
        }
        converged = off_norm(work) <= target;
    }
    Ok(())
}

/// Annihilates `a[p][q]` with a plane rotation, accumulating into `v`.
fn rotate(a: &mut [f64], n: usize, v: Option<&mut [f64]>, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    // theta.signum() is 1.0 for +0.0, which is the correct branch
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let tau = s / (1.0 + c);

    let app = a[p * n + p];
    let aqq = a[q * n + q];
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        a[r * n + p] = new_rp;
        a[p * n + r] = new_rp;
        a[r * n + q] = new_rq;
        a[q * n + r] = new_rq;
    }
    if let Some(v) = v {
        for r in 0..n {
            let vrp = v[r * n + p];
            let vrq = v[r * n + q];
            v[r * n + p] = vrp - s * (vrq + tau * vrp);
            v[r * n + q] = vrq + s * (vrp - tau * vrq);
        }
    }
}

/// Eigenvalues of a symmetric double-double matrix: Jacobi on the rounded
/// matrix, then each value replaced by the Rayleigh quotient of its
/// eigenvector against the unrounded matrix. The quotient error is
/// quadratic in the eigenvector error, so the values are accurate
/// relative to themselves rather than to `‖A‖`. Ascending.
pub(crate) fn refined_eigenvalues(a: &DdMatrix) -> Result<Vec<f64>> {
    let rounded = SymmetricMatrix::new(a.to_matrix())?;
    let spectrum = sym_eigen(&rounded)?;
    let n = spectrum.dim();
    let mut values: Vec<f64> = (0..n)
        .map(|j| {
            let v = spectrum.vectors().column(j);
            let norm2 = Dd::from(0.0);
            let norm2 = v.iter().fold(norm2, |acc, &x| acc.add(Dd::from(x).mul_f64(x)));
            a.quad_form(&v).to_f64() / norm2.to_f64()
        })
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// True iff the smallest eigenvalue is at least `-tol * ‖A‖_max`.
pub fn is_psd(a: &SymmetricMatrix, tol: f64) -> Result<bool> {
    let spec = sym_eigen(a)?;
    Ok(spec.smallest() >= -tol * a.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random::{random_spd, rng_stream};
    use rand_distr::{Distribution, StandardNormal};

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = rng_stream(seed, 0);
        let m = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        SymmetricMatrix::new(m).unwrap()
    }

    fn check_invariants(a: &SymmetricMatrix, s: &Spectrum) {
        let n = a.dim();
        assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
        let v = s.vectors();
        let orth = v.transpose().matmul(v).sub(&Matrix::identity(n)).max_abs();
        assert!(orth <= 1e-10, "orthogonality {orth:e}");
        let recon = s.reassemble(s.values()).sub(a).max_abs();
        assert!(recon <= 1e-9 * a.max_abs(), "reconstruction {recon:e}");
    }

    #[test]
    fn diagonal_sorted() {
        let a = SymmetricMatrix::from_diag(&[3.0, 1.0, 2.0]);
        let s = sym_eigen(&a).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        check_invariants(&a, &s);
    }

    #[test]
    fn two_by_two() {
        let a = SymmetricMatrix::new(Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        let s = sym_eigen(&a).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-15);
        assert!((s.values()[1] - 3.0).abs() < 1e-15);
        check_invariants(&a, &s);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        for seed in 0..20 {
            let a = random_symmetric(6, seed);
            let s = sym_eigen(&a).unwrap();
            check_invariants(&a, &s);
        }
    }

    #[test]
    fn larger_dimension_converges() {
        let a = random_symmetric(40, 5);
        let s = sym_eigen(&a).unwrap();
        check_invariants(&a, &s);
    }

    #[test]
    fn zero_matrix_is_converged() {
        let a = SymmetricMatrix::new(Matrix::zeros(3, 3)).unwrap();
        let s = sym_eigen(&a).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_spd_positive_spectrum() {
        let a = random_spd(7, (-2.0, 2.0), 99).unwrap();
        let s = sym_eigen(&a).unwrap();
        assert!(s.smallest() > 0.0);
        check_invariants(&a, &s);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&SymmetricMatrix::identity(3), 0.0).unwrap());
        assert!(!is_psd(&SymmetricMatrix::from_diag(&[1.0, -1.0]), 1e-12).unwrap());
        let zero = SymmetricMatrix::new(Matrix::zeros(2, 2)).unwrap();
        assert!(is_psd(&zero, 0.0).unwrap());
    }

    #[test]
    fn refined_eigenvalues_keep_tiny_one_relative() {
        // det = delta exactly, so lambda_min = delta / lambda_max
        let delta = 2f64.powi(-30);
        let a = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0 + delta]).unwrap();
        let values = refined_eigenvalues(&DdMatrix::from_matrix(&a)).unwrap();
        let rel = (values[0] * values[1] - delta).abs() / delta;
        assert!(rel < 1e-13, "{rel:e}");
    }
}
