//! Verilog-subset parsing and assertion-style security checks.
//!
//! [`evaluate_checks`] is the validation oracle for repaired RTL. Structural
//! checks run on the parsed tree; [`CheckRule::ExternalCommand`] hands the
//! source to an outside tool (e.g. a simulator wrapper) and reads its exit code.

pub mod ast;
mod checks;
mod external;
pub mod lexer;
mod parser;
mod printer;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{RtlAst, Span};
pub use checks::evaluate_ast;
pub use parser::parse_expr;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RtlError {
    #[error("lex error at {position}: unexpected input near `{snippet}`")]
    Lex { position: Span, snippet: String },
    #[error("parse error at {position}: expected {expected}, found {found}")]
    Parse {
        position: Span,
        expected: String,
        found: String,
    },
    #[error("unsupported construct at {position}: {construct}")]
    Unsupported { position: Span, construct: String },
}

#[derive(Debug, Error)]
pub enum ChecksFileError {
    #[error("cannot read checks file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed checks file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid check `{check_id}`: {reason}")]
    Invalid { check_id: String, reason: String },
}

pub fn parse(source: &str) -> Result<RtlAst, RtlError> {
    parser::parse(source)
}

pub fn serialize(ast: &RtlAst) -> String {
    printer::serialize(ast)
}

/// One security assertion evaluated against a design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityCheck {
    pub check_id: String,
    #[serde(flatten)]
    pub rule: CheckRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CheckRule {
    /// Assigning `literal` to `signal` is only allowed inside a conditional
    /// whose condition mentions one of `allowed_guard_signals`.
    ForbidAssignment {
        signal: String,
        literal: String,
        #[serde(default)]
        allowed_guard_signals: Vec<String>,
    },
    /// Every assignment to `signal` sits under a conditional mentioning `guard`.
    RequireGuard { signal: String, guard: String },
    /// `signal` is declared as a port, net, register or parameter.
    RequireSignal { signal: String },
    /// Runs `command` (a shell template with a `{file}` placeholder) on a
    /// temporary copy of the source. Exit code 0 passes.
    ExternalCommand { command: String, timeout_seconds: f64 },
}

impl SecurityCheck {
    pub fn validate(&self) -> Result<(), ChecksFileError> {
        let invalid = |reason: &str| ChecksFileError::Invalid {
            check_id: self.check_id.clone(),
            reason: reason.to_string(),
        };
        if self.check_id.trim().is_empty() {
            return Err(invalid("empty check_id"));
        }
        match &self.rule {
            CheckRule::ForbidAssignment {
                signal,
                literal,
                allowed_guard_signals,
            } => {
                if signal.is_empty() || allowed_guard_signals.iter().any(String::is_empty) {
                    return Err(invalid("empty signal name"));
                }
                match parse_expr(literal) {
                    Ok(ast::Expr::Literal(_)) => {}
                    _ => return Err(invalid(&format!("`{literal}` is not a literal"))),
                }
            }
            CheckRule::RequireGuard { signal, guard } => {
                if signal.is_empty() || guard.is_empty() {
                    return Err(invalid("empty signal name"));
                }
            }
            CheckRule::RequireSignal { signal } => {
                if signal.is_empty() {
                    return Err(invalid("empty signal name"));
                }
            }
            CheckRule::ExternalCommand {
                command,
                timeout_seconds,
            } => {
                if command.trim().is_empty() {
                    return Err(invalid("empty command"));
                }
                if !timeout_seconds.is_finite() || *timeout_seconds <= 0.0 {
                    return Err(invalid("timeout must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a JSON array of checks.
pub fn load_checks(path: &Path) -> Result<Vec<SecurityCheck>, ChecksFileError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ChecksFileError::Io {
        path: display.clone(),
        source,
    })?;
    parse_checks(&text).map_err(|e| match e {
        ChecksFileError::Json { source, .. } => ChecksFileError::Json {
            path: display,
            source,
        },
        other => other,
    })
}

pub fn parse_checks(json: &str) -> Result<Vec<SecurityCheck>, ChecksFileError> {
    let checks: Vec<SecurityCheck> =
        serde_json::from_str(json).map_err(|source| ChecksFileError::Json {
            path: "<inline>".to_string(),
            source,
        })?;
    for c in &checks {
        c.validate()?;
    }
    Ok(checks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictStatus {
    Pass,
    Fail,
    Indeterminate,
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictStatus::Pass => "Pass",
            VerdictStatus::Fail => "Fail",
            VerdictStatus::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCheck {
    pub check_id: String,
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub failed_checks: Vec<FailedCheck>,
    pub notes: String,
}

impl Verdict {
    pub fn indeterminate(notes: impl Into<String>) -> Verdict {
        Verdict {
            status: VerdictStatus::Indeterminate,
            failed_checks: Vec::new(),
            notes: notes.into(),
        }
    }

    pub fn is_pass(&self) -> bool {
        self.status == VerdictStatus::Pass
    }
}

/// Outcome of a single check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Fail(String),
    Indeterminate(String),
}

/// Evaluates every check against `source`. Never errors: unparseable input
/// yields an Indeterminate verdict carrying the parse error.
pub fn evaluate_checks(source: &str, checks: &[SecurityCheck]) -> Verdict {
    let ast = match parse(source) {
        Ok(ast) => ast,
        Err(e) => return Verdict::indeterminate(format!("source does not parse: {e}")),
    };
    let outcomes: Vec<(&SecurityCheck, CheckOutcome)> = checks
        .iter()
        .map(|c| {
            let outcome = match &c.rule {
                CheckRule::ExternalCommand {
                    command,
                    timeout_seconds,
                } => external::run(command, *timeout_seconds, source),
                _ => checks::evaluate_ast(&ast, c),
            };
            (c, outcome)
        })
        .collect();
    combine(outcomes)
}

fn combine(outcomes: Vec<(&SecurityCheck, CheckOutcome)>) -> Verdict {
    if outcomes.is_empty() {
        return Verdict::indeterminate("no checks to evaluate");
    }
    let total = outcomes.len();
    let mut failed = Vec::new();
    let mut undecided = Vec::new();
    for (check, outcome) in outcomes {
        match outcome {
            CheckOutcome::Pass => {}
            CheckOutcome::Fail(explanation) => failed.push(FailedCheck {
                check_id: check.check_id.clone(),
                explanation,
            }),
            CheckOutcome::Indeterminate(why) => undecided.push(format!("{}: {why}", check.check_id)),
        }
    }
    let status = if !failed.is_empty() {
        VerdictStatus::Fail
    } else if !undecided.is_empty() {
        VerdictStatus::Indeterminate
    } else {
        VerdictStatus::Pass
    };
    let passed = total - failed.len() - undecided.len();
    let mut notes = format!("{passed} of {total} checks passed");
    if !undecided.is_empty() {
        notes.push_str("; undecided: ");
        notes.push_str(&undecided.join("; "));
    }
    Verdict {
        status,
        failed_checks: failed,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG7_VULNERABLE: &str = r#"
module config_ctrl(
    input clk,
    input rst,
    input maintenance_mode,
    input jtag_unlock,
    output reg config_lock
);
    always @(posedge clk or posedge rst) begin
        if (rst)
            config_lock <= 1'b1;
        else if (!maintenance_mode)
            config_lock <= 1'b0;
        else
            config_lock <= 1'b1;
    end
endmodule
"#;

    const RESET_ONLY_REPAIR: &str = r#"
module config_ctrl(
    input clk,
    input rst,
    input maintenance_mode,
    input jtag_unlock,
    output reg config_lock
);
    always @(posedge clk or posedge rst) begin
        if (rst)
            config_lock <= 1'b0;
        else
            config_lock <= 1'b1;
    end
endmodule
"#;

    fn lock_check() -> Vec<SecurityCheck> {
        vec![SecurityCheck {
            check_id: "no-unguarded-unlock".into(),
            rule: CheckRule::ForbidAssignment {
                signal: "config_lock".into(),
                literal: "1'b0".into(),
                allowed_guard_signals: vec!["rst".into(), "jtag_unlock".into()],
            },
        }]
    }

    #[test]
    fn unlock_outside_reset_or_jtag_fails() {
        let v = evaluate_checks(FIG7_VULNERABLE, &lock_check());
        assert_eq!(v.status, VerdictStatus::Fail);
        assert_eq!(v.failed_checks[0].check_id, "no-unguarded-unlock");
    }

    #[test]
    fn unlock_only_under_reset_passes() {
        // Manual walk: the single 1'b0 assignment is the then-branch of `if (rst)`.
        let v = evaluate_checks(RESET_ONLY_REPAIR, &lock_check());
        assert_eq!(v.status, VerdictStatus::Pass, "{v:?}");
        assert!(v.failed_checks.is_empty());
    }

    #[test]
    fn garbage_is_indeterminate_with_note() {
        let v = evaluate_checks("garbage", &lock_check());
        assert_eq!(v.status, VerdictStatus::Indeterminate);
        assert!(v.notes.contains("does not parse"), "{}", v.notes);
    }

    #[test]
    fn checks_json_schema() {
        let json = r#"[
            {"check_id": "a", "kind": "ForbidAssignment", "signal": "lock", "literal": "1'b0", "allowed_guard_signals": ["rst"]},
            {"check_id": "b", "kind": "RequireGuard", "signal": "cfg", "guard": "lock"},
            {"check_id": "c", "kind": "RequireSignal", "signal": "fsm_error"},
            {"check_id": "d", "kind": "ExternalCommand", "command": "iverilog-run.sh {file}", "timeout_seconds": 30}
        ]"#;
        let checks = parse_checks(json).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(matches!(checks[3].rule, CheckRule::ExternalCommand { .. }));
        let back = serde_json::to_string(&checks).unwrap();
        assert_eq!(parse_checks(&back).unwrap(), checks);
    }

    #[test]
    fn invalid_checks_are_rejected() {
        for json in [
            r#"[{"check_id": "a", "kind": "RequireSignal", "signal": ""}]"#,
            r#"[{"check_id": "a", "kind": "ExternalCommand", "command": "x {file}", "timeout_seconds": 0}]"#,
            r#"[{"check_id": "a", "kind": "ForbidAssignment", "signal": "s", "literal": "a + b"}]"#,
            r#"[{"check_id": "a", "kind": "Nonsense"}]"#,
        ] {
            assert!(parse_checks(json).is_err(), "{json}");
        }
    }

    #[test]
    fn indeterminate_only_without_failures() {
        let mut checks = lock_check();
        checks.push(SecurityCheck {
            check_id: "sim".into(),
            rule: CheckRule::ExternalCommand {
                command: "definitely-not-a-real-binary-xyz {file}".into(),
                timeout_seconds: 5.0,
            },
        });
        let v = evaluate_checks(RESET_ONLY_REPAIR, &checks);
        assert_eq!(v.status, VerdictStatus::Indeterminate);
        assert!(!v.notes.is_empty());
        let v = evaluate_checks(FIG7_VULNERABLE, &checks);
        assert_eq!(v.status, VerdictStatus::Fail);
    }
}
