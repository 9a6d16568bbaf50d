use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::dense::{Matrix, SpdMatrix, SymmetricMatrix};

/// Counter-based generator: one independent ChaCha stream per consumer
/// id under a single user seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthogonal factor of a standard Gaussian matrix. Gram-Schmidt (applied
/// twice) leaves the triangular factor with a positive diagonal, which
/// fixes the column signs.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(dim, dim, rng);
    let mut cols: Vec<Vec<f64>> = (0..dim).map(|j| g.column(j)).collect();
    for j in 0..dim {
        for _pass in 0..2 {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (x, q) in tail[0].iter_mut().zip(&head[k]) {
                    *x -= dot * q;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    Matrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// `Q diag(μ) Qᵀ` with Haar-like orthogonal `Q` and eigenvalues
/// log-uniform in `[10^lo, 10^hi]`. Deterministic in `seed`.
///
/// `lo == hi` is accepted and pins every eigenvalue to `10^lo`.
pub fn random_spd(dim: usize, log10_eig_range: (f64, f64), seed: u64) -> Result<SpdMatrix> {
    let (lo, hi) = log10_eig_range;
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "log10 eigenvalue range must satisfy lo <= hi, got ({lo}, {hi})"
        )));
    }
    let mut rng = rng_stream(seed, 0);
    let q = random_orthogonal(dim, &mut rng);
    let mu: Vec<f64> = (0..dim)
        .map(|_| {
            let u: f64 = rng.random();
            10f64.powf(lo + (hi - lo) * u)
        })
        .collect();
    let scaled = Matrix::from_fn(dim, dim, |i, j| q[(i, j)] * mu[j]);
    SpdMatrix::new(SymmetricMatrix::new(scaled.matmul_t(&q))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_forced_eigenvalue() {
        for seed in [0, 1, 12345] {
            let a = random_spd(1, (0.0, 0.0), seed).unwrap();
            assert_eq!(a.as_slice(), &[1.0]);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = random_spd(5, (-2.0, 2.0), 77).unwrap();
        let b = random_spd(5, (-2.0, 2.0), 77).unwrap();
        let bits = |m: &SpdMatrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = random_spd(5, (-2.0, 2.0), 78).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn seed_seven_is_spd() {
        assert!(random_spd(4, (-2.0, 2.0), 7).is_ok());
    }

    #[test]
    fn orthogonal_factor() {
        let mut rng = rng_stream(3, 9);
        let q = random_orthogonal(8, &mut rng);
        let gap = q.transpose().matmul(&q).sub(&Matrix::identity(8)).max_abs();
        assert!(gap < 1e-14, "{gap:e}");
    }

    #[test]
    fn bad_ranges_rejected() {
        assert!(random_spd(3, (1.0, 0.0), 0).is_err());
        assert!(random_spd(0, (0.0, 1.0), 0).is_err());
        assert!(random_spd(3, (f64::NAN, 1.0), 0).is_err());
    }

    #[test]
    fn streams_are_independent() {
        let a: u64 = rng_stream(5, 1).random();
        let b: u64 = rng_stream(5, 2).random();
        assert_ne!(a, b);
    }
}
