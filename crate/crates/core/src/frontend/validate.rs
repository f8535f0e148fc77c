use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Body, Clause, Contract, DeonticOp};
use super::parser::Spans;
use super::Diagnostic;

/// Well-formedness rule broken by a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    DuplicateName,
    MissingDeontic,
    NestedDeontic,
    MissingAgent,
    MisplacedAgent,
    DecoratedSubclause,
    PermissionReparation,
    MisplacedReparation,
    RefinementArity,
    UndeclaredVariable,
    UnknownClauseReference,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::DuplicateName => "DUPLICATE_NAME",
            Rule::MissingDeontic => "MISSING_DEONTIC",
            Rule::NestedDeontic => "NESTED_DEONTIC",
            Rule::MissingAgent => "MISSING_AGENT",
            Rule::MisplacedAgent => "MISPLACED_AGENT",
            Rule::DecoratedSubclause => "DECORATED_SUBCLAUSE",
            Rule::PermissionReparation => "PERMISSION_REPARATION",
            Rule::MisplacedReparation => "MISPLACED_REPARATION",
            Rule::RefinementArity => "REFINEMENT_ARITY",
            Rule::UndeclaredVariable => "UNDECLARED_VARIABLE",
            Rule::UnknownClauseReference => "UNKNOWN_CLAUSE_REFERENCE",
        }
    }

    /// Rules checked as part of name resolution by `parse_contract`.
    pub fn is_resolution(self) -> bool {
        matches!(self, Rule::DuplicateName | Rule::UndeclaredVariable | Rule::UnknownClauseReference)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub rule: Rule,
    pub clause: String,
    pub message: String,
}

impl Finding {
    pub fn to_diagnostic(&self, spans: &Spans) -> Diagnostic {
        let (line, col) = spans.get(&self.clause).copied().unwrap_or((1, 1));
        Diagnostic::new(line, col, self.rule.code(), self.message.clone())
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}): {}", self.rule, self.clause, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.findings.iter().map(|f| f.rule).collect()
    }
}

/// Checks every structural rule of the contract language. Findings are
/// listed in pre-order of the offending boxes.
pub fn validate(c: &Contract) -> ValidationReport {
    let mut v = Validator { findings: Vec::new(), norm_level: BTreeSet::new() };
    v.collect_norm_level(&c.root);

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    c.root.walk(&mut |b| *seen.entry(b.name.as_str()).or_default() += 1);
    let mut reported = BTreeSet::new();
    let declared: BTreeSet<&str> = c.vars.iter().map(|d| d.name.as_str()).collect();

    c.root.walk(&mut |b| {
        if seen[b.name.as_str()] > 1 && reported.insert(b.name.as_str()) {
            v.push(Rule::DuplicateName, b, format!("clause name `{}` is used more than once", b.name));
        }
        for var in b.guard.variables() {
            if !declared.contains(var) {
                v.push(Rule::UndeclaredVariable, b, format!("variable `{var}` is not declared in `vars`"));
            }
        }
        for target in b.restriction.referenced_clauses() {
            if !v.norm_level.contains(target) {
                v.push(
                    Rule::UnknownClauseReference,
                    b,
                    format!("`after({target})` does not name a norm or refinement clause"),
                );
            }
        }
    });
    v.contract(&c.root);
    ValidationReport { findings: v.findings }
}

struct Validator {
    findings: Vec<Finding>,
    /// Names of boxes that sit above (or carry) a deontic operator; only
    /// these can be satisfied and hence referenced by relative time.
    norm_level: BTreeSet<String>,
}

impl Validator {
    fn push(&mut self, rule: Rule, b: &Clause, message: String) {
        self.findings.push(Finding { rule, clause: b.name.clone(), message });
    }

    fn collect_norm_level(&mut self, b: &Clause) {
        self.norm_level.insert(b.name.clone());
        if let Body::Refinement(_, children) = &b.body {
            children.iter().for_each(|c| self.collect_norm_level(c));
        }
        if let Some(rep) = &b.reparation {
            self.collect_norm_level(rep);
        }
    }

    /// A box at contract level: above any deontic operator.
    fn contract(&mut self, b: &Clause) {
        match &b.body {
            Body::Action(a) => {
                self.push(Rule::MissingDeontic, b, format!("action `{a}` is not governed by any deontic operator"));
                self.reparation_on_non_norm(b);
                self.agent_on_non_norm(b);
            }
            Body::Deontic(op, inner) => {
                if b.agent.is_none() {
                    self.push(Rule::MissingAgent, b, format!("{op} clause `{}` names no agent", b.name));
                }
                self.under_deontic_body(b, inner);
                if let Some(rep) = &b.reparation {
                    if *op == DeonticOp::Permission {
                        self.push(Rule::PermissionReparation, b, "a permission cannot carry a reparation".to_string());
                    }
                    self.contract(rep);
                }
            }
            Body::Refinement(kind, children) => {
                self.agent_on_non_norm(b);
                self.reparation_on_non_norm(b);
                self.arity(b, kind.keyword(), children.len());
                for child in children {
                    self.contract(child);
                }
            }
        }
    }

    fn agent_on_non_norm(&mut self, b: &Clause) {
        if let Some(agent) = &b.agent {
            self.push(Rule::MisplacedAgent, b, format!("agent `{agent}` given on a clause without a deontic operator"));
        }
    }

    fn reparation_on_non_norm(&mut self, b: &Clause) {
        if b.reparation.is_some() {
            self.push(Rule::MisplacedReparation, b, "only obligations and prohibitions carry reparations".to_string());
        }
        if let Some(rep) = &b.reparation {
            self.contract(rep);
        }
    }

    fn arity(&mut self, b: &Clause, kind: &str, n: usize) {
        if n < 2 {
            self.push(Rule::RefinementArity, b, format!("`{kind}` refinement has {n} clause(s), needs at least 2"));
        }
    }

    /// The action tree governed by the deontic operator of `owner`.
    fn under_deontic_body(&mut self, owner: &Clause, body: &Body) {
        match body {
            Body::Action(_) => {}
            Body::Deontic(op, inner) => {
                self.push(Rule::NestedDeontic, owner, format!("{op} applied under another deontic operator"));
                self.under_deontic_body(owner, inner);
            }
            Body::Refinement(kind, children) => {
                self.arity(owner, kind.keyword(), children.len());
                for child in children {
                    self.subclause(child);
                }
            }
        }
    }

    /// A box below a deontic operator: `(ε, name, ε, ε, C2, ε)`.
    fn subclause(&mut self, b: &Clause) {
        let mut decorations = Vec::new();
        if b.agent.is_some() {
            decorations.push("an agent");
        }
        if !b.guard.is_empty() {
            decorations.push("a guard");
        }
        if !b.restriction.is_empty() {
            decorations.push("a time restriction");
        }
        if b.reparation.is_some() {
            decorations.push("a reparation");
        }
        if !decorations.is_empty() {
            self.push(
                Rule::DecoratedSubclause,
                b,
                format!("action clause below a deontic operator carries {}", decorations.join(", ")),
            );
        }
        if let Some(rep) = &b.reparation {
            self.contract(rep);
        }
        self.under_deontic_body(b, &b.body);
    }
}
