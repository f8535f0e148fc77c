//! Contract DSL: lexer, parser, renderer and validator.

pub mod ast;
mod lexer;
pub mod parser;
mod render;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use ast::{Body, Clause, Contract, DeonticOp, RefineKind, VarDecl};
pub use parser::parse_syntax;
pub use render::render_contract;
pub use validate::{validate, Finding, Rule, ValidationReport};

/// Diagnostic codes. Validation findings reuse their rule id as code.
pub mod codes {
    pub const SYNTAX: &str = "SYNTAX";
    pub const INVALID_CHARACTER: &str = "INVALID_CHARACTER";
    pub const NUMBER_TOO_LARGE: &str = "NUMBER_TOO_LARGE";
}

/// A positioned message about the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: u32, col: u32, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic { line, col, code, message: message.into() }
    }

    /// `file:line:col: code: message`
    pub fn display_in<'a>(&'a self, file: &'a str) -> impl fmt::Display + 'a {
        struct InFile<'a>(&'a str, &'a Diagnostic);
        impl fmt::Display for InFile<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}:{}", self.0, self.1)
            }
        }
        InFile(file, self)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.code, self.message)
    }
}

/// Failure of [`load`]: either the text is malformed or it parses into a
/// contract that breaks a well-formedness rule.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{} diagnostic(s)", .0.len())]
    Syntax(Vec<Diagnostic>),
    #[error("contract is not well formed ({} finding(s))", .0.findings.len())]
    Validation(ValidationReport),
}

/// Parses `src` and resolves names: duplicated clause names, undeclared
/// variables and `after(..)` references to unknown clauses are errors.
/// Structural well-formedness (agents, deontic placement, ...) is left to
/// [`validate`].
pub fn parse_contract(src: &str) -> Result<Contract, Vec<Diagnostic>> {
    let (contract, spans) = parse_syntax(src).map_err(|d| alloc::vec![d])?;
    let report = validate(&contract);
    let diagnostics: Vec<Diagnostic> = report
        .findings
        .iter()
        .filter(|f| f.rule.is_resolution())
        .map(|f| f.to_diagnostic(&spans))
        .collect();
    if diagnostics.is_empty() {
        Ok(contract)
    } else {
        Err(diagnostics)
    }
}

/// [`parse_contract`] followed by [`validate`]; only well-formed contracts
/// pass.
pub fn load(src: &str) -> Result<Contract, LoadError> {
    let contract = parse_contract(src).map_err(LoadError::Syntax)?;
    let report = validate(&contract);
    if report.is_clean() {
        Ok(contract)
    } else {
        Err(LoadError::Validation(report))
    }
}

/// Diagnostics for every finding of `report`, positioned using the spans of
/// a parse.
pub fn report_diagnostics(report: &ValidationReport, spans: &parser::Spans) -> Vec<Diagnostic> {
    report.findings.iter().map(|f| f.to_diagnostic(spans)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_contract_loads() {
        let c = load("contract c { clause n agent A { obligation act a; } }").unwrap();
        assert!(c.root.guard.is_empty());
        assert!(c.root.restriction.is_empty());
        assert!(c.root.reparation.is_none());
    }

    #[test]
    fn missing_agent_is_a_validation_error() {
        let err = load("contract c { clause n { obligation act a; } }").unwrap_err();
        let LoadError::Validation(report) = err else { panic!("{err:?}") };
        assert_eq!(report.findings.len(), 1);
        assert_eq!(report.findings[0].rule, Rule::MissingAgent);
        assert_eq!(report.findings[0].clause, "n");
    }

    #[test]
    fn resolution_errors_are_parse_errors() {
        let src = "vars { x = 1; }
contract c { and {
  clause n agent A { when y >= 1; obligation act a; }
  clause n agent A { within after(ghost) <= 3; obligation act b; }
} }";
        let diags = parse_contract(src).unwrap_err();
        let codes: Vec<&str> = diags.iter().map(|d| d.code).collect();
        assert!(codes.contains(&"DUPLICATE_NAME"), "{codes:?}");
        assert!(codes.contains(&"UNDECLARED_VARIABLE"), "{codes:?}");
        assert!(codes.contains(&"UNKNOWN_CLAUSE_REFERENCE"), "{codes:?}");
        let dup = diags.iter().find(|d| d.code == "DUPLICATE_NAME").unwrap();
        assert_eq!((dup.line, dup.col), (3, 10));
    }

    #[test]
    fn diagnostic_format() {
        let d = Diagnostic::new(3, 7, codes::SYNTAX, "expected `;`");
        assert_eq!(alloc::format!("{}", d.display_in("auction.cod")), "auction.cod:3:7: SYNTAX: expected `;`");
    }
}
