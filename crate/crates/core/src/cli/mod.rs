//! `kgcert` command-line front end.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 parse error,
//! 3 validation error, 4 I/O error.

mod problem_file;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;
use crate::kalman::{optimal_gain, posterior_cov, KalmanProblem};
use crate::matrix::{char_poly_from_spectrum, sym_eigen, Matrix};
use crate::objectives::{eval_objective, ObjectiveSpec, SymmetricPolySpec};
use crate::verify::{probe_direction, run_suite_with, ProbeConfig, SuiteOptions};

pub use problem_file::{format_problem, parse_problem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("verification failed")]
    VerificationFailed,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::VerificationFailed => 1,
            Self::Parse(_) => 2,
            Self::Validation(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kgcert", version, about = "Certify optimality of the Kalman gain for spectral uncertainty measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print K*, the posterior spectrum and characteristic polynomial.
    Gain(GainArgs),
    /// Run the verification suite at K*.
    Verify(VerifyArgs),
    /// Write objective values along K* + eps * direction as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GainArgs {
    problem: PathBuf,
    /// Also write the problem as an explicit-matrix problem file.
    #[arg(long, value_name = "PATH")]
    emit_problem: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the machine-readable report (one JSON record per line).
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Include the brute-force grid oracle (n*m <= 4 only).
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 100)]
    directions: usize,
    /// Perturbation sizes as "lo,hi,count", linearly spaced.
    #[arg(long, default_value = "1e-2,1e-1,2", allow_hyphen_values = true)]
    epsilons: String,
}

#[derive(Debug, Args)]
struct SweepArgs {
    problem: PathBuf,
    /// NAME[:PARAM] with NAME in trace, det, lmin, charmag, logcharmag,
    /// coeff, esym, coeffsum, sympoly-file.
    #[arg(long, default_value = "trace")]
    objective: String,
    /// "random" or n*m comma-separated row-major entries.
    #[arg(long, default_value = "random", allow_hyphen_values = true)]
    direction: String,
    /// Step range as "lo,hi,count", linearly spaced.
    #[arg(long, default_value = "-1,1,21", allow_hyphen_values = true)]
    epsilons: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
}

/// Parses `"lo,hi,count"` into `count` evenly spaced values from `lo` to
/// `hi` inclusive.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Parse(format!("expected \"lo,hi,count\", got \"{text}\""));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi, count] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || count < 2 {
        return Err(CliError::Parse(format!("range \"{text}\" needs lo < hi and count >= 2")));
    }
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect())
}

/// Parses an objective name. `sympoly-file:PATH` reads a symmetric
/// polynomial file.
pub fn parse_objective(text: &str) -> Result<ObjectiveSpec, CliError> {
    if let Some(path) = text.strip_prefix("sympoly-file:") {
        let body = read_file(Path::new(path))?;
        let q = SymmetricPolySpec::parse(&body).map_err(|e| CliError::Parse(format!("{path}: {e}")))?;
        return Ok(ObjectiveSpec::SymmetricPoly(q));
    }
    text.parse().map_err(|e: Error| CliError::Parse(e.to_string()))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<KalmanProblem, CliError> {
    parse_problem(&read_file(path)?)
}

fn sci12(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|&v| sci12(v)).collect::<Vec<_>>().join("  ")
}

fn internal(e: Error) -> CliError {
    CliError::Validation(e.to_string())
}

fn cmd_gain(args: &GainArgs, out: &mut String) -> Result<(), CliError> {
    let prob = load_problem(&args.problem)?;
    let kstar = optimal_gain(&prob).map_err(internal)?;
    let pk = posterior_cov(&prob, &kstar).map_err(internal)?;
    let spectrum = sym_eigen(&pk).map_err(internal)?;
    let coeffs = char_poly_from_spectrum(&spectrum);

    let _ = writeln!(out, "K* ({}x{}):", prob.n(), prob.m());
    for i in 0..kstar.rows() {
        let _ = writeln!(out, "  {}", fmt_row(kstar.row(i)));
    }
    let _ = writeln!(out, "P_K* ({0}x{0}):", prob.n());
    for i in 0..pk.rows() {
        let _ = writeln!(out, "  {}", fmt_row(pk.row(i)));
    }
    let det: f64 = spectrum.values().iter().product();
    let _ = writeln!(out, "trace = {}", sci12(pk.trace()));
    let _ = writeln!(out, "det = {}", sci12(det));
    let _ = writeln!(out, "eigenvalues = {}", fmt_row(spectrum.values()));
    let _ = writeln!(out, "coefficients = {}", fmt_row(coeffs.as_slice()));

    if let Some(path) = &args.emit_problem {
        write_file(path, &format_problem(&prob))?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, out: &mut String) -> Result<(), CliError> {
    let prob = load_problem(&args.problem)?;
    let epsilons = parse_range(&args.epsilons)?;
    if epsilons[0] <= 0.0 {
        return Err(CliError::Parse("verification epsilons must be positive".into()));
    }
    let cfg = ProbeConfig::new(args.directions, epsilons, args.seed)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let opts = SuiteOptions {
        grid: args.grid,
        ..SuiteOptions::default()
    };
    let report = run_suite_with(&prob, &cfg, &opts);
    out.push_str(&report.to_table());
    if let Some(path) = &args.report {
        write_file(path, &report.to_jsonl())?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn sweep_direction(text: &str, prob: &KalmanProblem, seed: u64) -> Result<Matrix, CliError> {
    let (n, m) = (prob.n(), prob.m());
    if text == "random" {
        let cfg = ProbeConfig {
            seed,
            ..ProbeConfig::default()
        };
        return Ok(probe_direction(&cfg, 0, n, m));
    }
    let entries = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Parse(format!("direction must be \"random\" or numbers, got \"{text}\"")))?;
    Matrix::from_row_major(n, m, entries).map_err(|e| CliError::Validation(format!("direction: {e}")))
}

/// CSV rows `epsilon,objective_value,objective_value_at_kstar,margin`
/// with 17 significant digits.
pub fn sweep_csv(prob: &KalmanProblem, spec: &ObjectiveSpec, direction: &Matrix, epsilons: &[f64]) -> Result<String, Error> {
    let kstar = optimal_gain(prob)?;
    let base = eval_objective(prob, &kstar, spec)?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let mut csv = String::from("epsilon,objective_value,objective_value_at_kstar,margin\n");
    for e in eps {
        let v = eval_objective(prob, &kstar.perturbed(direction, e), spec)?;
        let _ = writeln!(csv, "{e:.16e},{v:.16e},{base:.16e},{:.16e}", v - base);
    }
    Ok(csv)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let prob = load_problem(&args.problem)?;
    let spec = parse_objective(&args.objective)?;
    spec.validate(prob.n()).map_err(internal)?;
    let direction = sweep_direction(&args.direction, &prob, args.seed)?;
    let epsilons = parse_range(&args.epsilons)?;
    let csv = sweep_csv(&prob, &spec, &direction, &epsilons).map_err(internal)?;
    write_file(&args.output, &csv)
}

/// Runs the CLI on `args` (including the program name), writing normal
/// output to `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    let mut out = String::new();
    let result = match &cli.command {
        Command::Gain(a) => cmd_gain(a, &mut out),
        Command::Verify(a) => cmd_verify(a, &mut out),
        Command::Sweep(a) => cmd_sweep(a),
    };
    let _ = stdout.write_all(out.as_bytes());
    match result {
        Ok(()) => 0,
        Err(e) => {
            if e != CliError::VerificationFailed {
                let _ = writeln!(stderr, "kgcert: {e}");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-1,1,5").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_range("1e-2,1e-1,2").unwrap(), vec![1e-2, 1e-1]);
        assert!(parse_range("1,0,3").is_err());
        assert!(parse_range("0,1,1").is_err());
        assert!(parse_range("0,1").is_err());
    }

    #[test]
    fn scalar_trace_sweep_values() {
        let prob = parse_problem("n = 1\nm = 1\nP = [1.0]\nR = [1.0]\nH = [1.0]\n").unwrap();
        let csv = sweep_csv(&prob, &ObjectiveSpec::Trace, &Matrix::identity(1), &parse_range("-1,1,5").unwrap()).unwrap();
        let values: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values, vec![2.5, 1.0, 0.5, 1.0, 2.5]);
        let det = sweep_csv(&prob, &ObjectiveSpec::Det, &Matrix::identity(1), &parse_range("-1,1,5").unwrap()).unwrap();
        assert_eq!(csv, det);
    }

    #[test]
    fn objective_names() {
        assert_eq!(parse_objective("charmag:0").unwrap(), ObjectiveSpec::CharMag(0.0));
        assert_eq!(parse_objective("nope").unwrap_err().exit_code(), 2);
        assert_eq!(parse_objective("sympoly-file:/definitely/missing").unwrap_err().exit_code(), 4);
    }
}
