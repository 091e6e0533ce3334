//! Structured verification results: verdicts, worst-case margins, residuals
//! and offending sample points, serializable as JSON-compatible records.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// A sample point achieving the worst margin or violating a condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub chart: String,
    pub point: Vec<f64>,
    pub value: f64,
    pub what: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GridMeta {
    pub chart: String,
    pub counts: Vec<usize>,
    pub margin: f64,
    pub points: usize,
}

/// Outcome of one checked condition.
///
/// `margin` is the decisive worst-case scalar of the check: the minimum
/// positivity ratio for contact/confoliation checks, the largest equation
/// residual for identity checks. `residuals` holds per-subcondition maxima
/// keyed by name. A failing report always carries at least one witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub condition: String,
    pub verdict: Verdict,
    pub margin: f64,
    pub residuals: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub grid: GridMeta,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Incremental builder used by the checkers.
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    condition: String,
    residuals: BTreeMap<String, f64>,
    witnesses: Vec<Witness>,
    grid: GridMeta,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub fn new(condition: &str) -> Self {
        ReportBuilder {
            condition: condition.to_owned(),
            residuals: BTreeMap::new(),
            witnesses: Vec::new(),
            grid: GridMeta::default(),
            notes: Vec::new(),
        }
    }

    pub fn grid(mut self, grid: GridMeta) -> Self {
        self.grid = grid;
        self
    }

    pub fn residual(mut self, name: &str, value: f64) -> Self {
        self.add_residual(name, value);
        self
    }

    pub fn add_residual(&mut self, name: &str, value: f64) {
        let slot = self.residuals.entry(name.to_owned()).or_insert(0.0);
        if value.abs() > slot.abs() {
            *slot = value;
        }
    }

    pub fn add_witness(&mut self, chart: &str, point: &[f64], value: f64, what: &str) {
        self.witnesses.push(Witness {
            chart: chart.to_owned(),
            point: point.to_vec(),
            value,
            what: what.to_owned(),
        });
    }

    pub fn note(mut self, text: String) -> Self {
        self.notes.push(text);
        self
    }

    pub fn add_note(&mut self, text: String) {
        self.notes.push(text);
    }

    /// Finish the report. Non-finite margins force a fail verdict; a fail
    /// without witnesses records a synthetic marker so the invariant
    /// "fail implies a witness" always holds.
    pub fn finish(self, verdict: Verdict, margin: f64) -> VerificationReport {
        let (verdict, margin) = if margin.is_finite() {
            (verdict, margin)
        } else {
            (Verdict::Fail, f64::MAX)
        };
        let mut witnesses = self.witnesses;
        if verdict == Verdict::Fail && witnesses.is_empty() {
            witnesses.push(Witness {
                chart: String::new(),
                point: Vec::new(),
                value: margin,
                what: "failure without grid witness (precondition or structural failure)".into(),
            });
        }
        let residuals = self
            .residuals
            .into_iter()
            .map(|(k, v)| (k, if v.is_finite() { v } else { f64::MAX }))
            .collect();
        VerificationReport {
            condition: self.condition,
            verdict,
            margin,
            residuals,
            witnesses,
            grid: self.grid,
            notes: self.notes,
        }
    }
}

/// Numeric thresholds shared by the checkers.
///
/// `residual` bounds equation residuals on exact-symbolic pipelines; `fd`
/// replaces it whenever a finite-difference oracle is in the loop. Strict
/// positivity means margin above `strict_positive`; weak positivity means
/// margin above `-strict_positive`, separating contact from the confoliation
/// boundary case.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub residual: f64,
    pub strict_positive: f64,
    pub fd: f64,
    pub rank_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-9,
            strict_positive: 1e-10,
            fd: 1e-6,
            rank_rel: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_residual(residual: f64) -> Self {
        Tolerances {
            residual,
            ..Default::default()
        }
    }
}
