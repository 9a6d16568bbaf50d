use std::fmt::Write as _;

use serde::Serialize;

/// Which claim a record certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClaimKind {
    GainResidual,
    JosephEquality,
    CriticalPoint,
    GradientOracle,
    LocalMin,
    GlobalMinGrid,
    LoewnerIdentity,
    TraceLimit,
    CoeffEvenMin,
}

/// One verification outcome. Optional fields are `null` in the report
/// when a check does not produce them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub index: usize,
    pub claim: ClaimKind,
    pub objective: String,
    pub asserted: bool,
    pub passed: bool,
    pub tolerance: f64,
    pub value_at_kstar: Option<f64>,
    pub grad_norm: Option<f64>,
    pub fd_grad_norm: Option<f64>,
    pub fd_rel_error: Option<f64>,
    pub worst_margin: Option<f64>,
    pub worst_direction: Option<usize>,
    pub worst_epsilon: Option<f64>,
    pub grid_gap_cells: Option<f64>,
    pub residual: Option<f64>,
    pub seed: u64,
    pub note: Option<String>,
}

impl Record {
    pub fn new(claim: ClaimKind, objective: impl Into<String>, tolerance: f64, seed: u64) -> Self {
        Self {
            index: 0,
            claim,
            objective: objective.into(),
            asserted: true,
            passed: false,
            tolerance,
            value_at_kstar: None,
            grad_norm: None,
            fd_grad_norm: None,
            fd_rel_error: None,
            worst_margin: None,
            worst_direction: None,
            worst_epsilon: None,
            grid_gap_cells: None,
            residual: None,
            seed,
            note: None,
        }
    }

    /// Failed asserted record carrying an error message.
    pub(crate) fn failed(mut self, note: impl ToString) -> Self {
        self.passed = false;
        self.note = Some(note.to_string());
        self
    }

    /// Record that is kept for information only.
    pub(crate) fn unasserted(mut self, note: impl ToString) -> Self {
        self.asserted = false;
        self.note = Some(note.to_string());
        self
    }

    pub fn verdict(&self) -> &'static str {
        match (self.asserted, self.passed) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "info",
            (false, false) => "info!",
        }
    }

    /// Failing asserted record.
    pub fn is_failure(&self) -> bool {
        self.asserted && !self.passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub records: Vec<Record>,
}

impl VerificationReport {
    pub fn new(mut records: Vec<Record>) -> Self {
        for (i, r) in records.iter_mut().enumerate() {
            r.index = i;
        }
        Self { records }
    }

    /// True iff every asserted record passed.
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| !r.is_failure())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.is_failure())
    }

    /// One JSON object per record, in record order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Fixed-width human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<16} {:<28} {:<6} {:>12} {:>12} {:>12}  note",
            "#", "claim", "objective", "status", "grad/resid", "margin", "fd_rel"
        );
        let num = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"));
        for r in &self.records {
            let mut objective = r.objective.clone();
            if objective.len() > 28 {
                objective.truncate(25);
                objective.push_str("...");
            }
            let _ = writeln!(
                out,
                "{:>4}  {:<16} {:<28} {:<6} {:>12} {:>12} {:>12}  {}",
                r.index,
                format!("{:?}", r.claim),
                objective,
                r.verdict(),
                num(r.grad_norm.or(r.residual).or(r.grid_gap_cells)),
                num(r.worst_margin),
                num(r.fd_rel_error),
                r.note.as_deref().unwrap_or("")
            );
        }
        let asserted = self.records.iter().filter(|r| r.asserted).count();
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} records, {} asserted, {} failed: {}",
            self.records.len(),
            asserted,
            failed,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}
