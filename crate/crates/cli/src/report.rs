//! Verification reports: check records, the ledger of formula corrections,
//! and merging of several runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// One named residual judged against a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    /// The relation being tested, written out.
    pub eq: String,
    pub samples: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tol: f64,
    pub pass: bool,
    /// Verdict or context for checks that are not plain residuals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Which residual a record is judged on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Judge {
    Abs,
    Rel,
}

impl CheckRecord {
    pub fn residual(check: &str, eq: &str, samples: usize, max_abs: f64, max_rel: f64, tol: f64, judge: Judge) -> Self {
        let value = match judge {
            Judge::Abs => max_abs,
            Judge::Rel => max_rel,
        };
        CheckRecord {
            check: check.into(),
            eq: eq.into(),
            samples,
            max_abs,
            max_rel,
            tol,
            // NaN fails
            pass: value <= tol,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// A correction applied to one of the intermediate formulas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: String,
    pub note: String,
}

/// Outcome of a run, as written with `--out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// Input reports of a merge, with their overall verdicts.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceSummary>,
    pub checks: Vec<CheckRecord>,
    pub ledger: Vec<LedgerEntry>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub path: String,
    pub name: Option<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(command: &str, suite: Option<&str>, config: Option<RunConfig>) -> Self {
        VerificationReport {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            suite: suite.map(str::to_string),
            config,
            sources: Vec::new(),
            checks: Vec::new(),
            ledger: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.pass &= record.pass;
        self.checks.push(record);
    }

    pub fn add_ledger(&mut self, entries: impl IntoIterator<Item = LedgerEntry>) {
        for e in entries {
            if !self.ledger.contains(&e) {
                self.ledger.push(e);
            }
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check == name)
    }

    /// Recompute the overall flag from the records.
    pub fn finalize(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass) && self.sources.iter().all(|s| s.pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path.display(), e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Report {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Report {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Concatenate the checks of several reports and deduplicate their ledgers.
pub fn merge(reports: &[(String, VerificationReport)]) -> VerificationReport {
    let mut out = VerificationReport::new("report", None, None);
    for (path, r) in reports {
        out.sources.push(SourceSummary {
            path: path.clone(),
            name: r.config.as_ref().map(|c| c.name.clone()),
            pass: r.pass,
        });
        for c in &r.checks {
            let mut c = c.clone();
            if let Some(cfg) = &r.config {
                c.check = format!("{}/{}", cfg.name, c.check);
            }
            out.checks.push(c);
        }
        out.add_ledger(r.ledger.iter().cloned());
    }
    out.finalize();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(pass: bool, ledger: &[&str]) -> VerificationReport {
        let mut r = VerificationReport::new("verify", Some("all"), None);
        r.push(CheckRecord::residual("c", "a = b", 1, if pass { 0.0 } else { 1.0 }, 0.0, 0.5, Judge::Abs));
        r.add_ledger(ledger.iter().map(|id| LedgerEntry {
            id: id.to_string(),
            note: "n".into(),
        }));
        r
    }

    #[test]
    fn merge_rules() {
        let both = merge(&[("a".into(), report(true, &["x"])), ("b".into(), report(true, &["x", "y"]))]);
        assert!(both.pass);
        assert_eq!(both.ledger.len(), 2);
        assert_eq!(both.checks.len(), 2);
        let mixed = merge(&[("a".into(), report(true, &[])), ("b".into(), report(false, &[]))]);
        assert!(!mixed.pass);
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!CheckRecord::residual("c", "", 1, f64::NAN, 0.0, 1.0, Judge::Abs).pass);
    }

    #[test]
    fn json_round_trip() {
        let r = report(false, &["x"]);
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
