//! Verification rows comparing an analytic value with an independent oracle.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One identity check. The verdict is `pass` iff `|analytic - oracle| <= budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub identity: String,
    /// The formula being checked.
    pub anchor: String,
    pub analytic: f64,
    pub oracle: f64,
    /// Allowed absolute discrepancy: a tolerance, or a multiple of the
    /// standard error plus bias bounds for Monte Carlo oracles.
    pub budget: f64,
    pub verdict: Verdict,
}

impl VerificationRow {
    pub fn new(
        identity: impl Into<String>,
        anchor: impl Into<String>,
        analytic: f64,
        oracle: f64,
        budget: f64,
    ) -> Self {
        let verdict = if (analytic - oracle).abs() <= budget { Verdict::Pass } else { Verdict::Fail };
        VerificationRow { identity: identity.into(), anchor: anchor.into(), analytic, oracle, budget, verdict }
    }

    /// A row for a check that could not be computed. Stored values are zero
    /// so the report stays valid JSON; the reason goes in the anchor.
    pub fn failed(identity: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        VerificationRow {
            identity: identity.into(),
            anchor: format!("error: {reason}"),
            analytic: 0.0,
            oracle: 0.0,
            budget: 0.0,
            verdict: Verdict::Fail,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `|analytic - oracle|`.
    pub fn discrepancy(&self) -> f64 {
        (self.analytic - self.oracle).abs()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: VerificationRow) {
        self.summary.total += 1;
        if row.passed() {
            self.summary.passed += 1;
        } else {
            self.summary.failed += 1;
        }
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = VerificationRow>) {
        for r in rows {
            self.push(r);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
