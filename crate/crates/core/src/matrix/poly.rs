use std::ops::Index;

use crate::error::{Error, Result};

use super::dd::Dd;
use super::dense::Matrix;
use super::eigen::Spectrum;

/// Coefficients `a_0..a_n` of a monic characteristic polynomial
/// `Φ(λ) = Σ a_i λ^i`, stored lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyCoeffs(Vec<f64>);

impl CharPolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.last() {
            Some(1.0) => Ok(Self(coeffs)),
            _ => Err(Error::InvalidArgument(
                "characteristic polynomial must be monic (a_n = 1)".into(),
            )),
        }
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl Index<usize> for CharPolyCoeffs {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Elementary symmetric polynomials `e_1..e_n` of `values`, built by
/// multiplying in one linear factor at a time.
pub fn elem_sym_polys(values: &[f64]) -> Vec<f64> {
    let mut e = elem_sym_with_unit(values);
    e.remove(0);
    e
}

/// `e_0..e_n` with `e_0 = 1`.
pub(crate) fn elem_sym_with_unit(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (j, &x) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// Power sums `p_1..p_n`, `p_k = Σ x_i^k`.
pub fn power_sums(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut p = vec![0.0; n];
    for &x in values {
        let mut pow = 1.0;
        for pk in p.iter_mut() {
            pow *= x;
            *pk += pow;
        }
    }
    p
}

/// Vieta expansion of `∏ (λ - λ_i)`.
pub fn char_poly_from_spectrum(s: &Spectrum) -> CharPolyCoeffs {
    char_poly_from_values(s.values())
}

pub(crate) fn char_poly_from_values(values: &[f64]) -> CharPolyCoeffs {
    let n = values.len();
    let e = elem_sym_with_unit(values);
    // a_{n-k} = (-1)^k e_k
    let coeffs = (0..=n)
        .map(|i| {
            let k = n - i;
            if k.is_multiple_of(2) {
                e[k]
            } else {
                -e[k]
            }
        })
        .collect();
    CharPolyCoeffs(coeffs)
}

/// Faddeev–LeVerrier trace recursion. Independent of any
/// eigendecomposition. The recursion amplifies rounding error quickly, so
/// it is carried out in double-double arithmetic and rounded at the end.
pub fn char_poly_faddeev(a: &Matrix) -> Result<CharPolyCoeffs> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "characteristic polynomial needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut coeffs = vec![Dd::ZERO; n + 1];
    coeffs[n] = Dd::from(1.0);
    let mut m = vec![Dd::ZERO; n * n];
    let mut next = vec![Dd::ZERO; n * n];
    for k in 1..=n {
        // M_k = A M_{k-1} + a_{n-k+1} I
        for i in 0..n {
            for j in 0..n {
                let mut acc = Dd::ZERO;
                for l in 0..n {
                    acc = acc.add(m[l * n + j].mul_f64(a[(i, l)]));
                }
                if i == j {
                    acc = acc.add(coeffs[n - k + 1]);
                }
                next[i * n + j] = acc;
            }
        }
        std::mem::swap(&mut m, &mut next);
        // a_{n-k} = -tr(A M_k) / k
        let mut trace = Dd::ZERO;
        for i in 0..n {
            for l in 0..n {
                trace = trace.add(m[l * n + i].mul_f64(a[(i, l)]));
            }
        }
        coeffs[n - k] = trace.div_f64(-(k as f64));
    }
    Ok(CharPolyCoeffs(coeffs.iter().map(|c| c.to_f64()).collect()))
}

/// Horner evaluation of `Σ a_i λ^i`.
pub fn eval_poly(c: &CharPolyCoeffs, lambda: f64) -> f64 {
    c.0.iter().rev().fold(0.0, |acc, &a| acc * lambda + a)
}

/// `eval_poly(char_poly_from_values(values), lambda)` without heap
/// allocation for small `n`; identical arithmetic.
pub(crate) fn eval_char_poly_at(values: &[f64], lambda: f64) -> f64 {
    const STACK: usize = 16;
    let n = values.len();
    let mut stack = [0.0; STACK];
    let mut heap = Vec::new();
    let e: &mut [f64] = if n < STACK {
        &mut stack[..=n]
    } else {
        heap.resize(n + 1, 0.0);
        &mut heap
    };
    e[0] = 1.0;
    for (j, &x) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    // coefficient of lambda^i is (-1)^(n-i) e_{n-i}
    (0..=n).rev().fold(0.0, |acc, i| {
        let k = n - i;
        let a = if k.is_multiple_of(2) { e[k] } else { -e[k] };
        acc * lambda + a
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dense::SymmetricMatrix;
    use crate::matrix::eigen::sym_eigen;
    use crate::matrix::random::random_spd;

    #[test]
    fn stack_char_poly_eval_matches() {
        for n in [1, 3, 15, 16, 20] {
            let values: Vec<f64> = (0..n).map(|i| 0.3 + 0.7 * i as f64).collect();
            for lambda in [-2.0, 0.0, 0.45, 7.1] {
                let a = eval_poly(&char_poly_from_values(&values), lambda);
                assert_eq!(a.to_bits(), eval_char_poly_at(&values, lambda).to_bits());
            }
        }
    }

    #[test]
    fn vieta_small_cases() {
        let c = char_poly_from_values(&[1.0, 2.0]);
        assert_eq!(c.as_slice(), &[2.0, -3.0, 1.0]);
        let c = char_poly_from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(c.as_slice(), &[-6.0, 11.0, -6.0, 1.0]);
        let c = char_poly_from_values(&[4.5]);
        assert_eq!(c.as_slice(), &[-4.5, 1.0]);
    }

    #[test]
    fn faddeev_small_cases() {
        let c = char_poly_faddeev(&Matrix::identity(2)).unwrap();
        assert_eq!(c.as_slice(), &[1.0, -2.0, 1.0]);
        let c = char_poly_faddeev(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        assert_eq!(c.as_slice(), &[3.0, -4.0, 1.0]);
        assert!(char_poly_faddeev(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn faddeev_accurate_on_wide_spectrum() {
        for seed in 0..20 {
            let a = random_spd(6, (-2.0, 3.0), seed).unwrap();
            let vieta = char_poly_from_spectrum(&sym_eigen(&a).unwrap());
            let fl = char_poly_faddeev(&a).unwrap();
            let gap = (0..=6).map(|i| (vieta[i] - fl[i]).abs()).fold(0.0, f64::max);
            assert!(gap <= 1e-12 * vieta.max_abs(), "seed {seed}: gap {gap:e}");
        }
    }

    #[test]
    fn faddeev_matches_vieta_on_random_spd() {
        for seed in 0..10 {
            let a = random_spd(5, (-1.0, 1.0), seed).unwrap();
            let vieta = char_poly_from_spectrum(&sym_eigen(&a).unwrap());
            let fl = char_poly_faddeev(&a).unwrap();
            let scale = vieta.max_abs();
            for i in 0..=5 {
                assert!(
                    (vieta[i] - fl[i]).abs() <= 1e-8 * scale,
                    "seed {seed} coeff {i}: {} vs {}",
                    vieta[i],
                    fl[i]
                );
            }
        }
    }

    #[test]
    fn horner_values() {
        let c = CharPolyCoeffs::new(vec![2.0, -3.0, 1.0]).unwrap();
        assert_eq!(eval_poly(&c, 0.0), 2.0);
        assert_eq!(eval_poly(&c, 1.0), 0.0);
        assert_eq!(eval_poly(&c, -1.0), 6.0);
    }

    #[test]
    fn non_monic_rejected() {
        assert!(CharPolyCoeffs::new(vec![1.0, 2.0]).is_err());
        assert!(CharPolyCoeffs::new(vec![]).is_err());
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elem_sym_polys(&[1.0, 2.0, 3.0]), vec![6.0, 11.0, 6.0]);
        assert_eq!(elem_sym_polys(&[0.25]), vec![0.25]);
        assert_eq!(elem_sym_polys(&[1.0; 4]), vec![4.0, 6.0, 4.0, 1.0]);
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(power_sums(&[1.0, 2.0, 3.0]), vec![6.0, 14.0, 36.0]);
        assert_eq!(power_sums(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn spd_coefficients_alternate() {
        let a = random_spd(6, (-2.0, 2.0), 4).unwrap();
        let c = char_poly_from_spectrum(&sym_eigen(&a).unwrap());
        for i in 0..=6 {
            let expected = if (6 - i) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(c[i].signum(), expected, "coeff {i}");
        }
    }

    #[test]
    fn trace_and_det_coefficients() {
        let a = SymmetricMatrix::new(Matrix::from_rows(&[
            [4.0, 1.0, 0.5],
            [1.0, 3.0, 0.2],
            [0.5, 0.2, 2.0],
        ]))
        .unwrap();
        let c = char_poly_from_spectrum(&sym_eigen(&a).unwrap());
        let det = 4.0 * (3.0 * 2.0 - 0.04) - 1.0 * (2.0 - 0.1) + 0.5 * (0.2 - 1.5);
        assert!((c[2] + a.trace()).abs() <= 1e-9 * a.trace());
        assert!((c[0] + det).abs() <= 1e-9 * det);
    }
}
