//! Diagnostics with stable codes.

use super::ast::Loc;
use std::fmt;

/// A located error with a stable code such as `unsafe-rule` or `syntax`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub loc: Loc,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>, loc: Loc) -> Diagnostic {
        Diagnostic { code, message: message.into(), loc }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.loc, self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// Renders a list of diagnostics, one per line.
pub fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("{d}\n")).collect()
}
