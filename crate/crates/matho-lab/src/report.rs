//! Reports produced by the command-line runner and their serializations.
//!
//! JSON keys are stable within a report schema version; the only field that changes
//! between identical runs is `wall_time_s`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::Error;
use crate::operators::{MembershipReport, TransformResult, Verdict};

/// Version of the report layout, bumped on any key change.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Overall outcome and the process exit code that goes with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accept,
    Reject,
    Invalid,
    Internal,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Accept => 0,
            Outcome::Reject => 1,
            Outcome::Invalid => 2,
            Outcome::Internal => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Accept => "accept",
            Outcome::Reject => "reject",
            Outcome::Invalid => "invalid",
            Outcome::Internal => "internal",
        }
    }

    /// Bad input is `invalid`; a failed numerical self-check is `internal`.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Numerical(_) => Outcome::Internal,
            _ => Outcome::Invalid,
        }
    }
}

/// One pass/fail line. `verdict` is accept iff `residual <= threshold * scale`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub scale: f64,
    pub verdict: Verdict,
}

impl CheckRecord {
    pub fn relative(name: impl Into<String>, residual: f64, threshold: f64, reference_norm: f64) -> Self {
        let scale = 1.0 + reference_norm;
        CheckRecord {
            name: name.into(),
            residual,
            threshold,
            scale,
            verdict: Verdict::from_bool(residual <= threshold * scale),
        }
    }

    pub fn absolute(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            residual,
            threshold,
            scale: 1.0,
            verdict: Verdict::from_bool(residual <= threshold),
        }
    }

    /// A boolean fact recorded as a check; the residual is 0 or 1.
    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        CheckRecord::absolute(name, if holds { 0.0 } else { 1.0 }, 0.5)
    }
}

impl From<&MembershipReport> for CheckRecord {
    fn from(r: &MembershipReport) -> Self {
        CheckRecord {
            name: r.kind.clone(),
            residual: r.residual,
            threshold: r.threshold,
            scale: 1.0 + r.displacement_norm,
            verdict: r.verdict,
        }
    }
}

impl From<&TransformResult> for CheckRecord {
    fn from(r: &TransformResult) -> Self {
        CheckRecord {
            name: r.name.clone(),
            residual: r.residual,
            threshold: r.threshold,
            scale: 1.0 + r.lhs_norm,
            verdict: r.verdict,
        }
    }
}

/// A registry entry that could not run on the supplied inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedCheck {
    pub name: String,
    pub reason: String,
}

/// Effective run settings after overrides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub trunc_order: usize,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            message: e.to_string(),
            field: match e {
                Error::Invalid { field, .. } => Some(field.clone()),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<Settings>,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedCheck>,
    pub overall: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
    pub wall_time_s: f64,
}

impl Report {
    /// Report of a completed run; the overall verdict follows the checks.
    pub fn finished(command: &str, settings: Settings, checks: Vec<CheckRecord>, skipped: Vec<SkippedCheck>, details: Value) -> Self {
        let overall = if checks.iter().any(|c| c.residual.is_nan()) {
            Outcome::Internal
        } else if checks.iter().all(|c| c.verdict.is_accept()) {
            Outcome::Accept
        } else {
            Outcome::Reject
        };
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            settings: Some(settings),
            checks,
            skipped,
            overall,
            error: None,
            details,
            wall_time_s: 0.0,
        }
    }

    pub fn failed(command: &str, settings: Option<Settings>, outcome: Outcome, error: ErrorRecord) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            settings,
            checks: vec![],
            skipped: vec![],
            overall: outcome,
            error: Some(error),
            details: Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.overall.exit_code()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite-keyed data");
        s.push('\n');
        s
    }

    /// One line per check, residuals in scientific notation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "matho-lab {} ({})", self.command, self.tool_version);
        if let Some(s) = &self.settings {
            let _ = writeln!(out, "trunc_order {}  tolerance {:e}  seed {}", s.trunc_order, s.tolerance, s.seed);
        }
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  residual {:.3e}  limit {:.3e}  {}",
                c.name,
                c.residual,
                c.threshold * c.scale,
                c.verdict
            );
        }
        for s in &self.skipped {
            let _ = writeln!(out, "{:<width$}  skipped: {}", s.name, s.reason);
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {}", e.message);
        }
        let _ = writeln!(out, "overall: {}", self.overall.name());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> Settings {
        Settings {
            trunc_order: 64,
            tolerance: 1e-8,
            seed: 0,
        }
    }

    #[test]
    fn overall_follows_checks() {
        let ok = CheckRecord::absolute("a", 1e-12, 1e-8);
        let bad = CheckRecord::absolute("b", 1.0, 1e-8);
        let r = Report::finished("check", settings(), vec![ok.clone()], vec![], Value::Null);
        assert_eq!((r.overall, r.exit_code()), (Outcome::Accept, 0));
        assert!(r.to_json().contains(r#""overall": "accept""#));
        let r = Report::finished("check", settings(), vec![ok, bad], vec![], Value::Null);
        assert_eq!((r.overall, r.exit_code()), (Outcome::Reject, 1));
    }

    #[test]
    fn nan_residual_is_internal() {
        let r = Report::finished("check", settings(), vec![CheckRecord::absolute("a", f64::NAN, 1e-8)], vec![], Value::Null);
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn text_lists_one_line_per_check() {
        let r = Report::finished(
            "check",
            settings(),
            vec![CheckRecord::absolute("H1", 2.5e-13, 1e-8), CheckRecord::absolute("H2", 0.0, 1e-8)],
            vec![],
            Value::Null,
        );
        let text = r.to_text();
        assert!(text.lines().any(|l| l.starts_with("H1") && l.contains("2.500e-13") && l.ends_with("accept")));
        assert!(text.lines().any(|l| l.starts_with("H2")));
    }

    #[test]
    fn error_reports_carry_the_field() {
        let e = Error::Invalid {
            field: "tolerance".into(),
            reason: "too big".into(),
        };
        let r = Report::failed("check", None, Outcome::of_error(&e), (&e).into());
        assert_eq!(r.exit_code(), 2);
        assert!(r.to_json().contains(r#""field": "tolerance""#));
    }
}
