use crate::kalman::{optimal_gain, posterior_cov, KalmanProblem};
use crate::matrix::{sym_eigen, Spectrum};
use crate::objectives::{ObjectiveSpec, SymmetricPolySpec};

use super::checks::{
    coefficient_parity_study, critical_point_check_with, gain_residual_check, grid_check,
    gradient_agreement_check, joseph_equality_check, lambda_samples, local_min_probe,
    loewner_identity_check, sample_gain, trace_limit_check,
};
use super::config::{ProbeConfig, GRID_MAX_DIMS, GRID_POINTS};
use super::report::{ClaimKind, Record, VerificationReport};

pub const GAIN_RESIDUAL_TOL: f64 = 1e-10;
pub const JOSEPH_TOL: f64 = 1e-10;
pub const CRITICAL_TOL: f64 = 1e-8;
pub const GRADIENT_ORACLE_TOL: f64 = 1e-5;
pub const LOEWNER_TOL: f64 = 1e-9;
pub const TRACE_LIMIT_LAMBDA: f64 = -1e6;
pub const TRACE_LIMIT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Run the grid oracle (only applies when `n·m ≤ 4`).
    pub grid: bool,
    pub grid_points: usize,
    pub loewner_gains: usize,
    pub oracle_gains: usize,
    pub sympoly_count: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            grid: true,
            grid_points: GRID_POINTS,
            loewner_gains: 5,
            oracle_gains: 3,
            sympoly_count: 3,
        }
    }
}

/// Three-term random symmetric polynomials drawn from the config seed.
pub fn random_sympolys(n: usize, count: usize, cfg: &ProbeConfig) -> Vec<SymmetricPolySpec> {
    let mut rng = cfg.sympoly_rng();
    (0..count).map(|_| SymmetricPolySpec::random(n, 3, &mut rng)).collect()
}

/// Every measure whose gradient must vanish at `K*`, with `λ` sampled away
/// from `spectrum`.
pub fn critical_catalog(spectrum: &Spectrum, sympolys: &[SymmetricPolySpec]) -> Vec<ObjectiveSpec> {
    let n = spectrum.dim();
    let mut specs = vec![ObjectiveSpec::Trace, ObjectiveSpec::Det, ObjectiveSpec::SmallestEig];
    specs.extend(lambda_samples(spectrum).into_iter().map(ObjectiveSpec::LogCharMag));
    specs.extend((0..n).map(ObjectiveSpec::CoefficientMag));
    specs.extend((1..=n).map(ObjectiveSpec::ElemSym));
    specs.push(ObjectiveSpec::CoeffAbsSum);
    specs.extend(sympolys.iter().cloned().map(ObjectiveSpec::SymmetricPoly));
    specs
}

/// Measures `K*` minimizes: trace, determinant, smallest eigenvalue,
/// `|Φ(λ)|` at `λ ∈ {-λ₁, 0, 0.5 λ₁, 0.9 λ₁}` and the coefficient sum.
pub fn minimization_catalog(spectrum: &Spectrum) -> Vec<ObjectiveSpec> {
    let l1 = spectrum.smallest();
    let mut specs = vec![ObjectiveSpec::Trace, ObjectiveSpec::Det, ObjectiveSpec::SmallestEig];
    specs.extend([-l1, 0.0, 0.5 * l1, 0.9 * l1].map(ObjectiveSpec::CharMag));
    specs.push(ObjectiveSpec::CoeffAbsSum);
    specs
}

pub fn grid_catalog() -> Vec<ObjectiveSpec> {
    vec![
        ObjectiveSpec::Trace,
        ObjectiveSpec::Det,
        ObjectiveSpec::SmallestEig,
        ObjectiveSpec::CharMag(0.0),
    ]
}

pub fn run_suite(prob: &KalmanProblem, cfg: &ProbeConfig) -> VerificationReport {
    run_suite_with(prob, cfg, &SuiteOptions::default())
}

/// Runs every check in a fixed order. Individual failures are recorded and
/// the suite continues.
pub fn run_suite_with(prob: &KalmanProblem, cfg: &ProbeConfig, opts: &SuiteOptions) -> VerificationReport {
    let mut records = Vec::new();
    records.push(gain_residual_check(prob, GAIN_RESIDUAL_TOL));
    records.push(joseph_equality_check(prob, JOSEPH_TOL));

    let setup = optimal_gain(prob).and_then(|k| {
        let spectrum = sym_eigen(&posterior_cov(prob, &k)?)?;
        Ok((k, spectrum))
    });
    let (kstar, spectrum) = match setup {
        Ok(s) => s,
        Err(e) => {
            records.push(Record::new(ClaimKind::CriticalPoint, "setup", 0.0, cfg.seed).failed(e));
            return VerificationReport::new(records);
        }
    };

    for i in 0..opts.loewner_gains {
        let k = sample_gain(prob, &kstar, cfg, i);
        let mut r = loewner_identity_check(prob, &k, LOEWNER_TOL);
        r.objective = format!("posterior@gain{i}");
        r.seed = cfg.seed;
        records.push(r);
    }

    let sympolys = random_sympolys(prob.n(), opts.sympoly_count, cfg);
    for spec in critical_catalog(&spectrum, &sympolys) {
        records.push(critical_point_check_with(prob, &spec, CRITICAL_TOL, cfg));
    }

    for i in 0..opts.oracle_gains {
        let k = sample_gain(prob, &kstar, cfg, i);
        let local = match posterior_cov(prob, &k).and_then(|pk| sym_eigen(&pk)) {
            Ok(s) => s,
            Err(e) => {
                records.push(Record::new(ClaimKind::GradientOracle, format!("gain{i}"), 0.0, cfg.seed).failed(e));
                continue;
            }
        };
        for spec in critical_catalog(&local, &sympolys) {
            let mut r = gradient_agreement_check(prob, &k, &spec, GRADIENT_ORACLE_TOL, cfg);
            r.objective = format!("{}@gain{i}", r.objective);
            records.push(r);
        }
    }

    for spec in minimization_catalog(&spectrum) {
        records.push(local_min_probe(prob, &spec, cfg));
    }
    records.extend(coefficient_parity_study(prob, cfg));

    records.push(trace_limit_check(prob, &kstar, TRACE_LIMIT_LAMBDA, TRACE_LIMIT_TOL));

    if opts.grid && prob.n() * prob.m() <= GRID_MAX_DIMS {
        for spec in grid_catalog() {
            records.push(grid_check(prob, &spec, opts.grid_points, cfg));
        }
    }

    VerificationReport::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::ExecMode;
    use crate::kalman::MeasurementMode;
    use crate::matrix::{Matrix, SpdMatrix};

    fn scalar() -> KalmanProblem {
        let one = || SpdMatrix::from_matrix(Matrix::identity(1)).unwrap();
        KalmanProblem::new(one(), one(), Matrix::identity(1)).unwrap()
    }

    fn quick() -> ProbeConfig {
        ProbeConfig::new(20, vec![1e-2, 1e-1], 1).unwrap()
    }

    #[test]
    fn scalar_suite_passes() {
        let report = run_suite(&scalar(), &quick());
        assert!(report.passed(), "{}", report.to_table());
        assert!(report.records.iter().any(|r| r.claim == ClaimKind::GlobalMinGrid));
    }

    #[test]
    fn seeded_three_by_two_passes() {
        let prob = KalmanProblem::random(3, 2, (-2.0, 2.0), (-2.0, 2.0), MeasurementMode::Gaussian, 42).unwrap();
        let report = run_suite(&prob, &quick());
        assert!(report.passed(), "{}", report.to_table());
        assert!(!report.records.iter().any(|r| r.claim == ClaimKind::GlobalMinGrid));
    }

    #[test]
    fn zero_operator_passes() {
        let prob = KalmanProblem::random(3, 2, (-1.0, 1.0), (-1.0, 1.0), MeasurementMode::Zero, 3).unwrap();
        let report = run_suite(&prob, &quick());
        assert!(report.passed(), "{}", report.to_table());
    }

    #[test]
    fn suite_is_deterministic_across_modes() {
        let prob = KalmanProblem::random(2, 2, (-2.0, 2.0), (-2.0, 2.0), MeasurementMode::Gaussian, 8).unwrap();
        let opts = SuiteOptions { grid_points: 9, ..SuiteOptions::default() };
        let a = run_suite_with(&prob, &quick().with_exec(ExecMode::Sequential), &opts);
        let b = run_suite_with(&prob, &quick().with_exec(ExecMode::Parallel), &opts);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}
