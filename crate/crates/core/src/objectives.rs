//! Scalar uncertainty measures of the posterior covariance and their
//! analytic gradients, first with respect to `P_K` and then, by the chain
//! rule through the Joseph form, with respect to the gain.
//!
//! Every measure except `Trace` and `SmallestEig` is a symmetric function
//! of the eigenvalues, so its gradient with respect to `P_K` is the
//! spectral matrix `V diag(∂φ/∂λ_j) Vᵀ`. Eigenvalue partials of the
//! elementary symmetric polynomials are `∂e_k/∂λ_j = e_{k-1}` of the
//! remaining eigenvalues.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{gain_residual, posterior_cov, GainMatrix, KalmanProblem};
use crate::matrix::{
    char_poly_from_spectrum, char_poly_from_values, elem_sym_with_unit, eval_char_poly_at, eval_poly, sym_eigen,
    CharPolyCoeffs, Matrix, Spectrum, SymmetricMatrix,
};

/// Below this magnitude `|Φ(λ)|` is treated as zero and its logarithm as
/// undefined.
pub const LOG_FLOOR: f64 = 1e-300;
/// Relative gap `(λ₂ - λ₁)/λ_n` under which the smallest eigenvalue is
/// considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// One term `coefficient · ∏_k e_k^{exponents[k]}`; `exponents[k]` is the
/// power of `e_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPolyTerm {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

/// A symmetric polynomial in the eigenvalues, expressed in the
/// elementary-symmetric basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPolySpec {
    terms: Vec<SymmetricPolyTerm>,
}

impl SymmetricPolySpec {
    pub fn new(terms: Vec<SymmetricPolyTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidObjective(
                "symmetric polynomial needs at least one term".into(),
            ));
        };
        let n = first.exponents.len();
        if terms.iter().any(|t| t.exponents.len() != n) {
            return Err(Error::InvalidObjective(
                "all symmetric polynomial terms need the same number of exponents".into(),
            ));
        }
        if terms.iter().any(|t| !t.coefficient.is_finite()) {
            return Err(Error::InvalidObjective("non-finite coefficient".into()));
        }
        Ok(Self { terms })
    }

    /// Convenience for a single term `coefficient · e_k` in `n` variables.
    pub fn single(n: usize, k: usize, coefficient: f64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidObjective(format!("e_{k} out of range for n = {n}")));
        }
        let mut exponents = vec![0; n];
        exponents[k - 1] = 1;
        Self::new(vec![SymmetricPolyTerm {
            coefficient,
            exponents,
        }])
    }

    /// Random polynomial with `num_terms` terms; each term has a
    /// coefficient in `[-1, 1)` and powers up to 2 on at most two of the
    /// `e_k`.
    pub fn random<R: Rng + ?Sized>(n: usize, num_terms: usize, rng: &mut R) -> Self {
        let terms = (0..num_terms.max(1))
            .map(|_| {
                let mut exponents = vec![0u32; n];
                for _ in 0..2 {
                    let k = rng.random_range(0..n);
                    exponents[k] = rng.random_range(1..=2);
                }
                SymmetricPolyTerm {
                    coefficient: rng.random_range(-1.0..1.0),
                    exponents,
                }
            })
            .collect();
        Self { terms }
    }

    /// Parses the line format `coefficient exp_1 ... exp_n`. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |what: &str| {
                Error::InvalidObjective(format!("line {}: invalid {what}", lineno + 1))
            };
            let coefficient: f64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad("coefficient"))?;
            let exponents = fields
                .map(|f| f.parse::<u32>().map_err(|_| bad("exponent")))
                .collect::<Result<Vec<_>>>()?;
            terms.push(SymmetricPolyTerm {
                coefficient,
                exponents,
            });
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[SymmetricPolyTerm] {
        &self.terms
    }

    pub fn num_vars(&self) -> usize {
        self.terms[0].exponents.len()
    }

    /// Value at `e = (e_0, e_1, ..., e_n)`.
    fn eval(&self, e: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .enumerate()
                    .fold(t.coefficient, |acc, (k, &p)| acc * e[k + 1].powi(p as i32))
            })
            .sum()
    }

    /// `∂Q/∂e_k` for `k = 1..n`, returned at index `k - 1`.
    fn partials(&self, e: &[f64]) -> Vec<f64> {
        let n = self.num_vars();
        let mut out = vec![0.0; n];
        for t in &self.terms {
            for (k, &pk) in t.exponents.iter().enumerate() {
                if pk == 0 {
                    continue;
                }
                let mut d = t.coefficient * pk as f64 * e[k + 1].powi(pk as i32 - 1);
                for (l, &pl) in t.exponents.iter().enumerate() {
                    if l != k {
                        d *= e[l + 1].powi(pl as i32);
                    }
                }
                out[k] += d;
            }
        }
        out
    }
}

impl fmt::Display for SymmetricPolySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coefficient)?;
            for (k, &p) in t.exponents.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*e{}", k + 1)?,
                    _ => write!(f, "*e{}^{p}", k + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// A scalar uncertainty measure `φ(P_K)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Trace,
    Det,
    SmallestEig,
    /// `|Φ(P_K, λ)|`
    CharMag(f64),
    /// `log |Φ(P_K, λ)|`
    LogCharMag(f64),
    /// `|a_i|`, `i` in `0..n`
    CoefficientMag(usize),
    /// `e_k` of the eigenvalues, `k` in `1..=n`
    ElemSym(usize),
    /// `Σ_{i=0..n} |a_i|`
    CoeffAbsSum,
    SymmetricPoly(SymmetricPolySpec),
}

impl ObjectiveSpec {
    /// Checks parameter ranges against the state dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::CharMag(l) | Self::LogCharMag(l) if !l.is_finite() => {
                Err(Error::InvalidObjective(format!("{self}: lambda must be finite")))
            }
            Self::CoefficientMag(i) if *i >= n => Err(Error::InvalidObjective(format!(
                "{self}: coefficient index must be below n = {n}"
            ))),
            Self::ElemSym(k) if *k == 0 || *k > n => Err(Error::InvalidObjective(format!(
                "{self}: index must be in 1..={n}"
            ))),
            Self::SymmetricPoly(q) if q.num_vars() != n => Err(Error::InvalidObjective(format!(
                "symmetric polynomial has {} variables, problem has n = {n}",
                q.num_vars()
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn needs_spectrum(&self) -> bool {
        !matches!(self, Self::Trace)
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trace => write!(f, "trace"),
            Self::Det => write!(f, "det"),
            Self::SmallestEig => write!(f, "lmin"),
            Self::CharMag(l) => write!(f, "charmag:{l}"),
            Self::LogCharMag(l) => write!(f, "logcharmag:{l}"),
            Self::CoefficientMag(i) => write!(f, "coeff:{i}"),
            Self::ElemSym(k) => write!(f, "esym:{k}"),
            Self::CoeffAbsSum => write!(f, "coeffsum"),
            Self::SymmetricPoly(q) => write!(f, "sympoly[{q}]"),
        }
    }
}

/// Parses `NAME[:PARAM]` for every objective except symmetric
/// polynomials, which are loaded from a file.
impl FromStr for ObjectiveSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let lambda = || -> Result<f64> {
            param
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|l| l.is_finite())
                .ok_or_else(|| Error::InvalidObjective(format!("{name} needs a finite lambda, as {name}:LAMBDA")))
        };
        let index = || -> Result<usize> {
            param
                .and_then(|p| p.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidObjective(format!("{name} needs an index, as {name}:INDEX")))
        };
        let no_param = |spec: ObjectiveSpec| match param {
            None => Ok(spec),
            Some(_) => Err(Error::InvalidObjective(format!("{name} takes no parameter"))),
        };
        match name {
            "trace" => no_param(Self::Trace),
            "det" => no_param(Self::Det),
            "lmin" => no_param(Self::SmallestEig),
            "coeffsum" => no_param(Self::CoeffAbsSum),
            "charmag" => Ok(Self::CharMag(lambda()?)),
            "logcharmag" => Ok(Self::LogCharMag(lambda()?)),
            "coeff" => Ok(Self::CoefficientMag(index()?)),
            "esym" => Ok(Self::ElemSym(index()?)),
            _ => Err(Error::InvalidObjective(format!("unknown objective '{name}'"))),
        }
    }
}

/// Product and sign of `∏ (λ - λ_i)`, computed factor by factor.
fn char_value_sign(values: &[f64], lambda: f64) -> f64 {
    values.iter().map(|&v| lambda - v).product::<f64>().signum()
}

/// `e_{k}` of all eigenvalues except index `j`, for `k = 0..n-1`.
fn elem_sym_without(values: &[f64], j: usize) -> Vec<f64> {
    let others: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &v)| v)
        .collect();
    elem_sym_with_unit(&others)
}

/// Evaluates `spec` on a given posterior covariance.
pub fn eval_on_posterior(spec: &ObjectiveSpec, pk: &SymmetricMatrix) -> Result<f64> {
    spec.validate(pk.dim())?;
    if !spec.needs_spectrum() {
        return Ok(pk.trace());
    }
    let spectrum = sym_eigen(pk)?;
    eval_on_spectrum(spec, &spectrum)
}

pub(crate) fn eval_on_spectrum(spec: &ObjectiveSpec, spectrum: &Spectrum) -> Result<f64> {
    eval_on_values(spec, spectrum.values())
}

/// Objective value from ascending eigenvalues.
pub(crate) fn eval_on_values(spec: &ObjectiveSpec, values: &[f64]) -> Result<f64> {
    let value = match spec {
        ObjectiveSpec::Trace => values.iter().sum(),
        ObjectiveSpec::Det => values.iter().product(),
        ObjectiveSpec::SmallestEig => values[0],
        ObjectiveSpec::CharMag(l) => eval_char_poly_at(values, *l).abs(),
        ObjectiveSpec::LogCharMag(l) => {
            let mag = eval_char_poly_at(values, *l).abs();
            if !(mag >= LOG_FLOOR) {
                return Err(Error::EvalAtEigenvalue { lambda: *l });
            }
            mag.ln()
        }
        ObjectiveSpec::CoefficientMag(i) => char_poly_from_values(values)[*i].abs(),
        ObjectiveSpec::ElemSym(k) => elem_sym_with_unit(values)[*k],
        ObjectiveSpec::CoeffAbsSum => char_poly_from_values(values)
            .as_slice()
            .iter()
            .map(|a| a.abs())
            .sum(),
        ObjectiveSpec::SymmetricPoly(q) => q.eval(&elem_sym_with_unit(values)),
    };
    Ok(value)
}

/// `φ(P_K)` at gain `K`.
pub fn eval_objective(prob: &KalmanProblem, k: &GainMatrix, spec: &ObjectiveSpec) -> Result<f64> {
    eval_on_posterior(spec, &posterior_cov(prob, k)?)
}

/// `W = ∂φ/∂P_K` as a symmetric matrix.
pub fn objective_grad_p(spec: &ObjectiveSpec, pk: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = pk.dim();
    spec.validate(n)?;
    if let ObjectiveSpec::Trace = spec {
        return Ok(SymmetricMatrix::identity(n));
    }
    let spectrum = sym_eigen(pk)?;
    let values = spectrum.values();

    if let ObjectiveSpec::SmallestEig = spec {
        if n > 1 {
            let gap = values[1] - values[0];
            if gap <= DEGENERACY_TOL * spectrum.largest().abs() {
                return Err(Error::DegenerateEigenvalue { gap });
            }
        }
        let mut weights = vec![0.0; n];
        weights[0] = 1.0;
        return Ok(spectrum.reassemble(&weights));
    }

    // e_{k-1} of the eigenvalues other than j, as d e_k / d λ_j
    let de = |j: usize, k: usize| -> f64 {
        if k == 0 {
            0.0
        } else {
            elem_sym_without(values, j)[k - 1]
        }
    };

    let weights: Vec<f64> = match spec {
        ObjectiveSpec::Det => (0..n).map(|j| de(j, n)).collect(),
        ObjectiveSpec::CharMag(l) | ObjectiveSpec::LogCharMag(l) => {
            let mag = eval_poly(&char_poly_from_values(values), *l).abs();
            if !(mag >= LOG_FLOOR) {
                return Err(Error::EvalAtEigenvalue { lambda: *l });
            }
            if matches!(spec, ObjectiveSpec::LogCharMag(_)) {
                values.iter().map(|&v| -1.0 / (l - v)).collect()
            } else {
                // d|Φ|/dλ_j = -sgn(Φ) ∏_{i≠j} (λ - λ_i)
                let sign = char_value_sign(values, *l);
                (0..n)
                    .map(|j| {
                        let rest: f64 = values
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != j)
                            .map(|(_, &v)| l - v)
                            .product();
                        -sign * rest
                    })
                    .collect()
            }
        }
        ObjectiveSpec::CoefficientMag(i) => {
            let k = n - i;
            let sign = elem_sym_with_unit(values)[k].signum();
            (0..n).map(|j| sign * de(j, k)).collect()
        }
        ObjectiveSpec::ElemSym(k) => (0..n).map(|j| de(j, *k)).collect(),
        ObjectiveSpec::CoeffAbsSum => {
            let e = elem_sym_with_unit(values);
            (0..n)
                .map(|j| {
                    let rest = elem_sym_without(values, j);
                    (1..=n).map(|k| e[k].signum() * rest[k - 1]).sum()
                })
                .collect()
        }
        ObjectiveSpec::SymmetricPoly(q) => {
            let partials = q.partials(&elem_sym_with_unit(values));
            (0..n)
                .map(|j| {
                    let rest = elem_sym_without(values, j);
                    (1..=n).map(|k| partials[k - 1] * rest[k - 1]).sum()
                })
                .collect()
        }
        ObjectiveSpec::Trace | ObjectiveSpec::SmallestEig => unreachable!(),
    };
    Ok(spectrum.reassemble(&weights))
}

/// `∂φ/∂K = 2 W (K S - P Hᵀ)`.
pub fn objective_grad_k(prob: &KalmanProblem, k: &GainMatrix, spec: &ObjectiveSpec) -> Result<Matrix> {
    let pk = posterior_cov(prob, k)?;
    let w = objective_grad_p(spec, &pk)?;
    Ok(w.matmul(&gain_residual(prob, k)?).scale(2.0))
}

/// Characteristic polynomial coefficients of `P_K`.
pub fn coefficient_vector(prob: &KalmanProblem, k: &GainMatrix) -> Result<CharPolyCoeffs> {
    let pk = posterior_cov(prob, k)?;
    Ok(char_poly_from_spectrum(&sym_eigen(&pk)?))
}
