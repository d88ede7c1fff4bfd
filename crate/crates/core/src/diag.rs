//! Diagnostics shared by every stage of the toolchain.
//!
//! A diagnostic carries a stable rule code (`AM-<AREA>-<NNN>`), a severity,
//! the path of the offending model element and a human readable message.
//! The line-oriented rendering `<severity> <code> <path>: <message>` is the
//! format written by the CLI and compared by golden tests.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// Stable rule codes.
pub mod code {
    pub const DUPLICATE: &str = "AM-STRUCT-001";
    pub const UNRESOLVED: &str = "AM-STRUCT-002";
    pub const DIRECTION: &str = "AM-STRUCT-003";
    pub const RECURSIVE: &str = "AM-STRUCT-004";
    pub const FAN_IN: &str = "AM-STRUCT-005";
    pub const UNCONNECTED: &str = "AM-STRUCT-006";
    pub const MTD_MODES: &str = "AM-STRUCT-007";
    pub const PRIORITY: &str = "AM-STRUCT-008";
    pub const STD_RESTRICTION: &str = "AM-STRUCT-009";
    pub const BAD_TYPE: &str = "AM-STRUCT-010";
    pub const BAD_CLOCK: &str = "AM-STRUCT-011";
    pub const CLUSTER_CLOCK: &str = "AM-STRUCT-012";
    pub const BAD_CHANNEL: &str = "AM-STRUCT-013";
    pub const DEPLOY_REF: &str = "AM-STRUCT-014";
    pub const MODE_SIGNATURE: &str = "AM-STRUCT-015";

    pub const LEVEL_UNSPECIFIED: &str = "AM-LEVEL-001";
    pub const LEVEL_IMPL_TYPE: &str = "AM-LEVEL-002";
    pub const LEVEL_CLUSTER: &str = "AM-LEVEL-003";
    pub const LEVEL_RECURSIVE_CCD: &str = "AM-LEVEL-004";

    pub const TYPE_MISMATCH: &str = "AM-TYPE-001";
    pub const TYPE_UNCONSTRAINED: &str = "AM-TYPE-002";
    pub const TYPE_UNKNOWN_NAME: &str = "AM-TYPE-003";

    pub const CLOCK_MISMATCH: &str = "AM-CLOCK-001";

    pub const INSTANT_LOOP: &str = "AM-CAUSAL-001";

    pub const ACTUATOR_CONFLICT: &str = "AM-FAA-001";

    pub const MISSING_DELAY: &str = "AM-CCD-001";
    pub const APERIODIC_EXEMPT: &str = "AM-CCD-002";

    pub const UNMAPPED_CLUSTER: &str = "AM-DEPLOY-001";
    pub const PERIOD_MISMATCH: &str = "AM-DEPLOY-002";
    pub const UNMAPPED_SIGNAL: &str = "AM-DEPLOY-003";
    pub const BUS_UNREACHABLE: &str = "AM-DEPLOY-004";

    pub const SYNTAX: &str = "AM-PARSE-001";
    pub const DUPLICATE_DEF: &str = "AM-PARSE-002";
    pub const INCLUDE: &str = "AM-PARSE-003";

    pub const MALFORMED_ROW: &str = "AM-IMPORT-001";
    pub const DUPLICATE_ROW: &str = "AM-IMPORT-002";

    pub const RANGE: &str = "AM-REFINE-001";
    pub const UNCLOCKED_BLOCK: &str = "AM-CLUSTER-001";
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, code, path: path.into(), message: message.into() }
    }

    pub fn warning(code: &'static str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, code, path: path.into(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.code, self.path, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Renders diagnostics one per line.
pub fn render(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let d = Diagnostic::error(code::DIRECTION, "Top.ch0", "direction mismatch");
        assert_eq!(d.to_string(), "error AM-STRUCT-003 Top.ch0: direction mismatch");
    }
}
