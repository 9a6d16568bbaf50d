//! Problem files: a flat TOML document with `n`, `m` and either explicit
//! row-major `P`, `R`, `H` arrays or a `[random]` block.
//!
//! ```toml
//! n = 2
//! m = 1
//! P = [1.0, 0.0, 0.0, 4.0]
//! R = [1.0]
//! H = [1.0, 0.0]
//! ```
//!
//! ```toml
//! n = 3
//! m = 2
//! [random]
//! seed = 7
//! log10_eig_range_P = [-2.0, 2.0]
//! log10_eig_range_R = [-2.0, 2.0]
//! H_mode = "gaussian"
//! ```

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::Error;
use crate::kalman::{KalmanProblem, MeasurementMode};
use crate::matrix::{Matrix, SpdMatrix};

use super::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: i64,
    m: i64,
    #[serde(rename = "P")]
    p: Option<Vec<f64>>,
    #[serde(rename = "R")]
    r: Option<Vec<f64>>,
    #[serde(rename = "H")]
    h: Option<Vec<f64>>,
    random: Option<RandomBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomBlock {
    seed: u64,
    #[serde(rename = "log10_eig_range_P")]
    p_range: [f64; 2],
    #[serde(rename = "log10_eig_range_R")]
    r_range: [f64; 2],
    #[serde(rename = "H_mode")]
    h_mode: HMode,
}

#[derive(Debug, Clone, Copy, Deserialize)]
enum HMode {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "identity-block")]
    IdentityBlock,
    #[serde(rename = "zero")]
    Zero,
}

impl From<HMode> for MeasurementMode {
    fn from(mode: HMode) -> Self {
        match mode {
            HMode::Gaussian => MeasurementMode::Gaussian,
            HMode::IdentityBlock => MeasurementMode::IdentityBlock,
            HMode::Zero => MeasurementMode::Zero,
        }
    }
}

fn spd(key: &str, dim: usize, entries: Vec<f64>) -> Result<SpdMatrix, CliError> {
    let m = Matrix::from_row_major(dim, dim, entries).map_err(|e| CliError::Validation(format!("{key}: {e}")))?;
    SpdMatrix::from_matrix(m).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => CliError::Validation(format!("{key} is not positive definite")),
        other => CliError::Validation(format!("{key}: {other}")),
    })
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<KalmanProblem, CliError> {
    let raw: RawProblem = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let explicit = [&raw.p, &raw.r, &raw.h];
    let present = explicit.iter().filter(|x| x.is_some()).count();
    match (present, raw.random.is_some()) {
        (3, false) | (0, true) => {}
        (0, false) => {
            return Err(CliError::Parse(
                "problem needs either P, R, H or a [random] block".into(),
            ))
        }
        (_, true) => {
            return Err(CliError::Parse(
                "explicit matrices and [random] block are mutually exclusive".into(),
            ))
        }
        _ => {
            let missing: Vec<&str> = ["P", "R", "H"]
                .into_iter()
                .zip(explicit)
                .filter(|(_, v)| v.is_none())
                .map(|(k, _)| k)
                .collect();
            return Err(CliError::Parse(format!("missing key(s): {}", missing.join(", "))));
        }
    }
    if raw.n < 1 {
        return Err(CliError::Validation(format!("n must be at least 1, got {}", raw.n)));
    }
    if raw.m < 1 {
        return Err(CliError::Validation(format!("m must be at least 1, got {}", raw.m)));
    }
    let (n, m) = (raw.n as usize, raw.m as usize);

    if let Some(block) = raw.random {
        for (key, [lo, hi]) in [("log10_eig_range_P", block.p_range), ("log10_eig_range_R", block.r_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(CliError::Validation(format!("{key} must satisfy lo <= hi")));
            }
        }
        return KalmanProblem::random(
            n,
            m,
            (block.p_range[0], block.p_range[1]),
            (block.r_range[0], block.r_range[1]),
            block.h_mode.into(),
            block.seed,
        )
        .map_err(|e| CliError::Validation(e.to_string()));
    }

    let p = spd("P", n, raw.p.expect("checked"))?;
    let r = spd("R", m, raw.r.expect("checked"))?;
    let h = Matrix::from_row_major(m, n, raw.h.expect("checked"))
        .map_err(|e| CliError::Validation(format!("H: {e}")))?;
    KalmanProblem::new(p, r, h).map_err(|e| CliError::Validation(e.to_string()))
}

fn write_array(out: &mut String, key: &str, values: &[f64]) {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "{key} = [{}]", items.join(", "));
}

/// Explicit-matrix problem document. Floats use the shortest
/// round-tripping representation, so re-parsing is bit-exact.
pub fn format_problem(prob: &KalmanProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n = {}", prob.n());
    let _ = writeln!(out, "m = {}", prob.m());
    write_array(&mut out, "P", prob.p().as_slice());
    write_array(&mut out, "R", prob.r().as_slice());
    write_array(&mut out, "H", prob.h().as_slice());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_scalar() {
        let prob = parse_problem("n = 1\nm = 1\nP = [1.0]\nR = [1]\nH = [1.0]\n").unwrap();
        assert_eq!(prob.p().as_slice(), &[1.0]);
    }

    #[test]
    fn random_block() {
        let text = "n = 3\nm = 2\n[random]\nseed = 7\nlog10_eig_range_P = [-2.0, 2.0]\nlog10_eig_range_R = [-1, 1]\nH_mode = \"identity-block\"\n";
        let prob = parse_problem(text).unwrap();
        assert_eq!(prob.h().as_slice(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(parse_problem(text).unwrap(), prob);
    }

    #[test]
    fn not_positive_definite_names_key() {
        let err = parse_problem("n = 2\nm = 1\nP = [1, 2, 2, 1]\nR = [1]\nH = [1, 0]\n").unwrap_err();
        assert_eq!(err, CliError::Validation("P is not positive definite".into()));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn parse_errors() {
        for text in [
            "n = 1\nm = 1\nP = [1.0]\n",
            "n = 1\nm = 1\n",
            "n = 1\nm = 1\nP = [1.0]\nR = [1]\nH = [1]\n[random]\nseed = 1\nlog10_eig_range_P = [0, 1]\nlog10_eig_range_R = [0, 1]\nH_mode = \"zero\"\n",
            "n = 1\nm = 1\nP = [1.0]\nR = [1]\nH = [1]\nextra = 3\n",
            "n = 1\nm = 1\n[random]\nseed = 1\nlog10_eig_range_P = [0, 1]\nlog10_eig_range_R = [0, 1]\nH_mode = \"sparse\"\n",
            "this is not toml",
        ] {
            let err = parse_problem(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err:?}");
        }
    }

    #[test]
    fn validation_errors() {
        for text in [
            "n = 2\nm = 1\nP = [1.0]\nR = [1]\nH = [1, 0]\n",
            "n = 1\nm = 1\nP = [1.0]\nR = [1]\nH = [1, 0]\n",
            "n = 0\nm = 1\nP = []\nR = [1]\nH = []\n",
            "n = 1\nm = 1\n[random]\nseed = 1\nlog10_eig_range_P = [1, 0]\nlog10_eig_range_R = [0, 1]\nH_mode = \"zero\"\n",
        ] {
            let err = parse_problem(text).unwrap_err();
            assert_eq!(err.exit_code(), 3, "{text}: {err:?}");
        }
    }

    #[test]
    fn format_round_trips_bits() {
        let text = "n = 3\nm = 2\n[random]\nseed = 11\nlog10_eig_range_P = [-2.0, 2.0]\nlog10_eig_range_R = [-2.0, 2.0]\nH_mode = \"gaussian\"\n";
        let prob = parse_problem(text).unwrap();
        let again = parse_problem(&format_problem(&prob)).unwrap();
        let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(prob.p()), bits(again.p()));
        assert_eq!(bits(prob.r()), bits(again.r()));
        assert_eq!(bits(prob.h()), bits(again.h()));
    }
}
