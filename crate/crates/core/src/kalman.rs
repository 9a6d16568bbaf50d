//! Kalman update covariance objects: innovation covariance, optimal gain,
//! Joseph-form posterior covariance for an arbitrary gain, and the
//! derivative of the posterior with respect to the gain.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::matrix::{
    gaussian_matrix, random_spd, rng_stream, solve_spd, DdMatrix, Matrix, SpdMatrix, SymmetricMatrix,
};
use rand::RngCore;

/// How the measurement operator of a random problem is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementMode {
    Gaussian,
    IdentityBlock,
    Zero,
}

/// Prior covariance `P` (n×n), likelihood covariance `R` (m×m) and
/// measurement operator `H` (m×n). `H` may be rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanProblem {
    p: SpdMatrix,
    r: SpdMatrix,
    h: Matrix,
    s: SpdMatrix,
    pht: Matrix,
}

impl KalmanProblem {
    pub fn new(p: SpdMatrix, r: SpdMatrix, h: Matrix) -> Result<Self> {
        let (n, m) = (p.dim(), r.dim());
        if h.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "H must be {m}x{n}, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let pht = p.matmul_t(&h);
        let hpht = h.matmul(&pht);
        let s = SpdMatrix::from_matrix(hpht.add(&r))?;
        Ok(Self { p, r, h, s, pht })
    }

    /// Seeded random instance. `P`, `R` and `H` draw from separate streams
    /// of `seed`.
    pub fn random(
        n: usize,
        m: usize,
        p_range: (f64, f64),
        r_range: (f64, f64),
        mode: MeasurementMode,
        seed: u64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("measurement dimension must be positive".into()));
        }
        let p = random_spd(n, p_range, rng_stream(seed, 1).next_u64())?;
        let r = random_spd(m, r_range, rng_stream(seed, 2).next_u64())?;
        let h = match mode {
            MeasurementMode::Gaussian => gaussian_matrix(m, n, &mut rng_stream(seed, 3)),
            MeasurementMode::IdentityBlock => {
                Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 })
            }
            MeasurementMode::Zero => Matrix::zeros(m, n),
        };
        Self::new(p, r, h)
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }

    pub fn m(&self) -> usize {
        self.r.dim()
    }

    pub fn p(&self) -> &SpdMatrix {
        &self.p
    }

    pub fn r(&self) -> &SpdMatrix {
        &self.r
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    /// `P Hᵀ`.
    pub fn pht(&self) -> &Matrix {
        &self.pht
    }

    pub(crate) fn check_gain_shape(&self, k: &Matrix) -> Result<()> {
        if k.shape() != (self.n(), self.m()) {
            return Err(Error::DimensionMismatch(format!(
                "gain must be {}x{}, got {}x{}",
                self.n(),
                self.m(),
                k.rows(),
                k.cols()
            )));
        }
        Ok(())
    }
}

/// A candidate gain `K` (n×m).
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(Matrix);

impl GainMatrix {
    pub fn new(k: Matrix) -> Self {
        Self(k)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `K + step * direction`.
    pub fn perturbed(&self, direction: &Matrix, step: f64) -> GainMatrix {
        GainMatrix(self.0.add(&direction.scale(step)))
    }
}

impl Deref for GainMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<Matrix> for GainMatrix {
    fn from(m: Matrix) -> Self {
        Self(m)
    }
}

/// `S = H P Hᵀ + R`.
pub fn innovation_cov(prob: &KalmanProblem) -> SpdMatrix {
    prob.s.clone()
}

/// `K* = P Hᵀ S⁻¹`, computed as the SPD solve `S Xᵀ = H P`.
pub fn optimal_gain(prob: &KalmanProblem) -> Result<GainMatrix> {
    let xt = solve_spd(&prob.s, &prob.pht.transpose())?;
    Ok(GainMatrix(xt.transpose()))
}

/// Joseph form `(I - K H) P (I - K H)ᵀ + K R Kᵀ`, valid for every gain.
pub fn posterior_cov(prob: &KalmanProblem, k: &GainMatrix) -> Result<SymmetricMatrix> {
    prob.check_gain_shape(k)?;
    let a = Matrix::identity(prob.n()).sub(&k.matmul(&prob.h));
    let apa = a.matmul(prob.p.as_matrix()).matmul_t(&a);
    let krk = k.matmul(prob.r.as_matrix()).matmul_t(k);
    SymmetricMatrix::new(apa.add(&krk))
}

/// Joseph form accumulated in double-double arithmetic and rounded once
/// per entry. Slower, but free of the cancellation error of the plain
/// product, which matters when the result is differenced.
pub fn posterior_cov_compensated(prob: &KalmanProblem, k: &GainMatrix) -> Result<SymmetricMatrix> {
    SymmetricMatrix::new(posterior_cov_dd(prob, k)?.to_matrix())
}

pub(crate) fn posterior_cov_dd(prob: &KalmanProblem, k: &GainMatrix) -> Result<DdMatrix> {
    prob.check_gain_shape(k)?;
    let kd = DdMatrix::from_matrix(k);
    let a = kd.matmul(&DdMatrix::from_matrix(&prob.h), false).identity_minus();
    let apa = a.matmul(&DdMatrix::from_matrix(prob.p.as_matrix()), false).matmul(&a, true);
    let krk = kd.matmul(&DdMatrix::from_matrix(prob.r.as_matrix()), false).matmul(&kd, true);
    Ok(apa.add(&krk).symmetrized())
}

/// Short form `(I - K* H) P`, only valid at the optimal gain.
pub fn posterior_cov_standard(prob: &KalmanProblem) -> Result<SymmetricMatrix> {
    let k = optimal_gain(prob)?;
    let a = Matrix::identity(prob.n()).sub(&k.matmul(&prob.h));
    SymmetricMatrix::new(a.matmul(prob.p.as_matrix()))
}

/// `K S - P Hᵀ`; vanishes exactly at `K*`.
pub fn gain_residual(prob: &KalmanProblem, k: &GainMatrix) -> Result<Matrix> {
    prob.check_gain_shape(k)?;
    Ok(k.matmul(prob.s.as_matrix()).sub(&prob.pht))
}

/// Derivative of `K ↦ P_K` at `K` in direction `Δ`:
/// `Δ (S Kᵀ - H P) + (K S - P Hᵀ) Δᵀ`.
pub fn posterior_directional_derivative(
    prob: &KalmanProblem,
    k: &GainMatrix,
    delta: &Matrix,
) -> Result<SymmetricMatrix> {
    prob.check_gain_shape(delta)?;
    let residual = gain_residual(prob, k)?;
    let half = residual.matmul_t(delta);
    SymmetricMatrix::new(half.add(&half.transpose()))
}

/// `P_K - P_{K*}`, which equals `(K - K*) S (K - K*)ᵀ` and is PSD.
pub fn loewner_gap(prob: &KalmanProblem, k: &GainMatrix) -> Result<SymmetricMatrix> {
    let pk = posterior_cov(prob, k)?;
    let pstar = posterior_cov(prob, &optimal_gain(prob)?)?;
    SymmetricMatrix::new(pk.sub(&pstar))
}

/// Closed form `(K - K*) S (K - K*)ᵀ` of the Loewner gap.
pub fn loewner_gap_closed_form(prob: &KalmanProblem, k: &GainMatrix) -> Result<SymmetricMatrix> {
    prob.check_gain_shape(k)?;
    let d = k.sub(optimal_gain(prob)?.as_matrix());
    SymmetricMatrix::new(d.matmul(prob.s.as_matrix()).matmul_t(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{cholesky, is_psd};

    fn scalar() -> KalmanProblem {
        let one = || SpdMatrix::from_matrix(Matrix::identity(1)).unwrap();
        KalmanProblem::new(one(), one(), Matrix::identity(1)).unwrap()
    }

    fn scalar_gain(k: f64) -> GainMatrix {
        GainMatrix::new(Matrix::from_rows(&[[k]]))
    }

    fn random(n: usize, m: usize, seed: u64) -> KalmanProblem {
        KalmanProblem::random(n, m, (-2.0, 2.0), (-2.0, 2.0), MeasurementMode::Gaussian, seed)
            .unwrap()
    }

    #[test]
    fn innovation_examples() {
        assert_eq!(innovation_cov(&scalar()).as_slice(), &[2.0]);

        let p = SpdMatrix::from_matrix(Matrix::from_diag(&[1.0, 4.0])).unwrap();
        let r = SpdMatrix::from_matrix(Matrix::from_diag(&[3.0, 5.0])).unwrap();
        let prob = KalmanProblem::new(p, r.clone(), Matrix::zeros(2, 2)).unwrap();
        assert_eq!(innovation_cov(&prob), r);

        let prob = random(3, 2, 1);
        assert!(cholesky(&innovation_cov(&prob)).is_ok());
    }

    #[test]
    fn optimal_gain_examples() {
        assert_eq!(optimal_gain(&scalar()).unwrap().as_slice(), &[0.5]);

        let p = SpdMatrix::from_matrix(Matrix::from_diag(&[1.0, 4.0])).unwrap();
        let r = SpdMatrix::from_matrix(Matrix::identity(1)).unwrap();
        let prob = KalmanProblem::new(p.clone(), r.clone(), Matrix::from_rows(&[[1.0, 0.0]])).unwrap();
        assert_eq!(optimal_gain(&prob).unwrap().as_slice(), &[0.5, 0.0]);

        let prob = KalmanProblem::new(p, r, Matrix::zeros(1, 2)).unwrap();
        assert_eq!(optimal_gain(&prob).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn joseph_examples() {
        let prob = scalar();
        assert_eq!(posterior_cov(&prob, &scalar_gain(0.5)).unwrap().as_slice(), &[0.5]);
        let v = posterior_cov(&prob, &scalar_gain(0.6)).unwrap()[(0, 0)];
        assert!((v - 0.52).abs() < 1e-15);
        let pk = posterior_cov(&prob, &scalar_gain(0.0)).unwrap();
        assert_eq!(&pk, prob.p().as_symmetric());
    }

    #[test]
    fn standard_form_examples() {
        assert_eq!(posterior_cov_standard(&scalar()).unwrap().as_slice(), &[0.5]);
        let base = random(3, 2, 4);
        let zero_h = KalmanProblem::new(base.p().clone(), base.r().clone(), Matrix::zeros(2, 3)).unwrap();
        assert_eq!(&posterior_cov_standard(&zero_h).unwrap(), zero_h.p().as_symmetric());

        let prob = random(4, 2, 9);
        let joseph = posterior_cov(&prob, &optimal_gain(&prob).unwrap()).unwrap();
        let gap = joseph.sub(&posterior_cov_standard(&prob).unwrap()).max_abs();
        assert!(gap <= 1e-10 * prob.p().max_abs(), "{gap:e}");
    }

    #[test]
    fn residual_examples() {
        let prob = scalar();
        assert_eq!(gain_residual(&prob, &scalar_gain(0.5)).unwrap().as_slice(), &[0.0]);
        assert_eq!(gain_residual(&prob, &scalar_gain(0.0)).unwrap().as_slice(), &[-1.0]);
        for seed in 0..10 {
            let prob = random(5, 3, seed);
            let res = gain_residual(&prob, &optimal_gain(&prob).unwrap()).unwrap();
            assert!(res.max_abs() <= 1e-10 * prob.pht().max_abs());
        }
    }

    #[test]
    fn derivative_examples() {
        let prob = scalar();
        let d = posterior_directional_derivative(&prob, &scalar_gain(0.0), &Matrix::identity(1)).unwrap();
        assert_eq!(d.as_slice(), &[-2.0]);

        let prob = random(3, 2, 12);
        let kstar = optimal_gain(&prob).unwrap();
        let delta = Matrix::from_fn(3, 2, |i, j| (i as f64) - 0.5 * j as f64);
        let d = posterior_directional_derivative(&prob, &kstar, &delta).unwrap();
        assert!(d.max_abs() <= 1e-10 * prob.p().max_abs());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let prob = random(4, 3, 21);
        let k = GainMatrix::new(Matrix::from_fn(4, 3, |i, j| 0.1 * (i + 2 * j) as f64 - 0.3));
        let delta = Matrix::from_fn(4, 3, |i, j| if (i + j) % 2 == 0 { 1.0 } else { -0.5 });
        let h = 1e-6;
        let plus = posterior_cov(&prob, &k.perturbed(&delta, h)).unwrap();
        let minus = posterior_cov(&prob, &k.perturbed(&delta, -h)).unwrap();
        let fd = plus.sub(&minus).scale(0.5 / h);
        let analytic = posterior_directional_derivative(&prob, &k, &delta).unwrap();
        let err = fd.sub(&analytic).max_abs() / analytic.max_abs();
        assert!(err <= 1e-6, "{err:e}");
    }

    #[test]
    fn loewner_examples() {
        let prob = scalar();
        let gap = loewner_gap(&prob, &scalar_gain(0.6)).unwrap()[(0, 0)];
        assert!((gap - 0.02).abs() < 1e-15);
        let zero = loewner_gap(&prob, &scalar_gain(0.5)).unwrap();
        assert_eq!(zero.as_slice(), &[0.0]);

        let prob = random(3, 2, 8);
        let k = GainMatrix::new(Matrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.7));
        let gap = loewner_gap(&prob, &k).unwrap();
        let closed = loewner_gap_closed_form(&prob, &k).unwrap();
        assert!(gap.sub(&closed).max_abs() <= 1e-9 * prob.p().max_abs());
        assert!(is_psd(&gap, 1e-9).unwrap());
    }

    #[test]
    fn compensated_posterior_agrees() {
        let prob = KalmanProblem::random(5, 3, (-2.0, 2.0), (-2.0, 2.0), MeasurementMode::Gaussian, 17).unwrap();
        let k = optimal_gain(&prob).unwrap();
        let plain = posterior_cov(&prob, &k).unwrap();
        let comp = posterior_cov_compensated(&prob, &k).unwrap();
        assert!(plain.sub(&comp).max_abs() <= 1e-12 * prob.p().max_abs());
        let one = || SpdMatrix::from_matrix(Matrix::identity(1)).unwrap();
        let scalar = KalmanProblem::new(one(), one(), Matrix::identity(1)).unwrap();
        let half = GainMatrix::new(Matrix::from_diag(&[0.5]));
        assert_eq!(posterior_cov_compensated(&scalar, &half).unwrap().as_slice(), &[0.5]);
    }

    #[test]
    fn shape_errors() {
        let prob = scalar();
        let bad = GainMatrix::new(Matrix::zeros(2, 1));
        assert!(posterior_cov(&prob, &bad).is_err());
        assert!(gain_residual(&prob, &bad).is_err());
        let p = SpdMatrix::from_matrix(Matrix::identity(2)).unwrap();
        let r = SpdMatrix::from_matrix(Matrix::identity(1)).unwrap();
        assert!(KalmanProblem::new(p, r, Matrix::zeros(2, 2)).is_err());
    }
}
