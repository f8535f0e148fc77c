//! Recursive-descent parser for the contract DSL.
//!
//! ```text
//! file     := header* "contract" IDENT ( "{" clause "}" | boxbody )
//! header   := "unit" IDENT ";" | "vars" "{" (IDENT "=" NAT ";")* "}"
//! boxbody  := "{" opts (norm | refine) "}"
//! opts     := ("when" guard ";")? ("within" trestr ";")?
//! norm     := ("agent" IDENT)? deon acttree ("reparation" repair)? ";"
//! repair   := clause | boxbody
//! deon     := "obligation" | "permission" | "prohibition"
//! acttree  := "act" IDENT | kind "{" named (","? named)+ "}"
//! named    := "clause" IDENT "{" acttree "}"
//! refine   := kind "{" clause (","? clause)+ "}"
//! clause   := "clause" IDENT ("agent" IDENT)? boxbody
//! kind     := "and" | "or" | "seq"
//! guard    := gatom ("and" gatom)*        gatom := IDENT ("-" IDENT)? op NAT
//! trestr   := catom ("and" catom)*        catom := cref ("-" cref)? op NAT
//! cref     := "T" | "after" "(" IDENT ")"
//! ```
//!
//! An unnamed reparation box is named `<clause>_reparation`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{Body, Clause, Contract, DeonticOp, RefineKind, VarDecl};
use super::lexer::{tokenize, Tok, Token};
use super::{codes, Diagnostic};
use crate::temporal::{Clock, ClockConstraint, CmpOp, Guard, TimeRestriction, VarConstraint};

const MAX_DEPTH: usize = 128;

pub const KEYWORDS: &[&str] = &[
    "contract",
    "clause",
    "unit",
    "vars",
    "when",
    "within",
    "agent",
    "obligation",
    "permission",
    "prohibition",
    "act",
    "and",
    "or",
    "seq",
    "reparation",
    "after",
];

/// Source position of every named box, keyed by clause name (first
/// occurrence wins).
pub type Spans = BTreeMap<String, (u32, u32)>;

/// Parses the concrete syntax only; no name resolution.
pub fn parse_syntax(src: &str) -> Result<(Contract, Spans), Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, depth: 0, spans: Spans::new() };
    let contract = p.file()?;
    Ok((contract, p.spans))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    spans: Spans,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let t = self.peek();
        let message = match expected {
            [one] => format!("expected {one}, found {}", t.tok),
            many => format!("expected one of {}, found {}", many.join(", "), t.tok),
        };
        Diagnostic::new(t.line, t.col, codes::SYNTAX, message)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, u32, u32)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            Tok::Ident(s) => Err(Diagnostic::new(
                t.line,
                t.col,
                codes::SYNTAX,
                format!("expected {what}, found keyword `{s}`"),
            )),
            _ => Err(self.error(&[what])),
        }
    }

    fn nat(&mut self) -> PResult<u32> {
        match self.peek().tok {
            Tok::Nat(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error(&["a natural number"])),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.peek();
            return Err(Diagnostic::new(t.line, t.col, codes::SYNTAX, format!("nesting deeper than {MAX_DEPTH} levels")));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn record(&mut self, name: &str, line: u32, col: u32) {
        self.spans.entry(name.to_string()).or_insert((line, col));
    }

    fn file(&mut self) -> PResult<Contract> {
        let mut unit = None;
        let mut vars = Vec::new();
        loop {
            if self.eat_keyword("unit") {
                unit = Some(self.ident("a unit name")?.0);
                self.expect(Tok::Semi)?;
            } else if self.eat_keyword("vars") {
                self.expect(Tok::LBrace)?;
                while !matches!(self.peek().tok, Tok::RBrace) {
                    let (name, ..) = self.ident("a variable name")?;
                    self.expect(Tok::Assign)?;
                    let init = self.nat()?;
                    self.expect(Tok::Semi)?;
                    vars.push(VarDecl { name, init });
                }
                self.bump();
            } else {
                break;
            }
        }
        if !self.at_keyword("contract") {
            return Err(self.error(&["`unit`", "`vars`", "`contract`"]));
        }
        self.bump();
        let (name, line, col) = self.ident("a contract name")?;
        let root = if *self.peek_at(0) == Tok::LBrace && matches!(self.peek_at(1), Tok::Ident(s) if s == "clause") {
            self.bump();
            let root = self.clause()?;
            self.expect(Tok::RBrace)?;
            root
        } else {
            self.record(&name, line, col);
            self.boxbody(name.clone(), None)?
        };
        if self.peek().tok != Tok::Eof {
            return Err(self.error(&["end of input"]));
        }
        Ok(Contract { name, unit, vars, root })
    }

    fn clause(&mut self) -> PResult<Clause> {
        self.expect_keyword("clause")?;
        let (name, line, col) = self.ident("a clause name")?;
        self.record(&name, line, col);
        let agent = if self.eat_keyword("agent") { Some(self.ident("an agent name")?.0) } else { None };
        self.boxbody(name, agent)
    }

    fn boxbody(&mut self, name: String, header_agent: Option<String>) -> PResult<Clause> {
        self.enter()?;
        self.expect(Tok::LBrace)?;
        let guard = if self.eat_keyword("when") {
            let g = self.guard()?;
            self.expect(Tok::Semi)?;
            g
        } else {
            Guard::default()
        };
        let restriction = if self.eat_keyword("within") {
            let tr = self.restriction()?;
            self.expect(Tok::Semi)?;
            tr
        } else {
            TimeRestriction::default()
        };
        let mut clause = Clause { name, agent: header_agent, guard, restriction, body: Body::Action(String::new()), reparation: None };
        if let Some(kind) = self.refine_kind() {
            self.bump();
            let children = self.block(Self::clause)?;
            clause.body = Body::Refinement(kind, children);
        } else {
            let agent_tok = self.peek().clone();
            if self.eat_keyword("agent") {
                let (agent, ..) = self.ident("an agent name")?;
                if clause.agent.is_some() {
                    return Err(Diagnostic::new(agent_tok.line, agent_tok.col, codes::SYNTAX, "agent given twice for one clause"));
                }
                clause.agent = Some(agent);
            }
            let op = match &self.peek().tok {
                Tok::Ident(s) if s == "obligation" => DeonticOp::Obligation,
                Tok::Ident(s) if s == "permission" => DeonticOp::Permission,
                Tok::Ident(s) if s == "prohibition" => DeonticOp::Prohibition,
                _ if clause.agent.is_some() => return Err(self.error(&["`obligation`", "`permission`", "`prohibition`"])),
                _ => {
                    return Err(self.error(&[
                        "`agent`",
                        "`obligation`",
                        "`permission`",
                        "`prohibition`",
                        "`and`",
                        "`or`",
                        "`seq`",
                    ]))
                }
            };
            self.bump();
            let acts = self.acttree()?;
            clause.body = Body::Deontic(op, Box::new(acts));
            if self.eat_keyword("reparation") {
                let rep = if self.at_keyword("clause") {
                    self.clause()?
                } else {
                    let rep_name = format!("{}_reparation", clause.name);
                    let t = self.peek();
                    let (line, col) = (t.line, t.col);
                    self.record(&rep_name, line, col);
                    self.boxbody(rep_name, None)?
                };
                clause.reparation = Some(Box::new(rep));
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        self.leave();
        Ok(clause)
    }

    fn refine_kind(&self) -> Option<RefineKind> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "and" => Some(RefineKind::And),
            Tok::Ident(s) if s == "or" => Some(RefineKind::Or),
            Tok::Ident(s) if s == "seq" => Some(RefineKind::Seq),
            _ => None,
        }
    }

    /// `"{" item (","? item)+ "}"` with at least two items.
    fn block(&mut self, item: fn(&mut Self) -> PResult<Clause>) -> PResult<Vec<Clause>> {
        self.expect(Tok::LBrace)?;
        let open = self.tokens[self.pos - 1].clone();
        let mut items = alloc::vec![item(self)?];
        loop {
            if self.peek().tok == Tok::Comma {
                self.bump();
                items.push(item(self)?);
            } else if self.at_keyword("clause") {
                items.push(item(self)?);
            } else {
                break;
            }
        }
        if self.peek().tok != Tok::RBrace {
            return Err(self.error(&["`clause`", "`,`", "`}`"]));
        }
        if items.len() < 2 {
            return Err(Diagnostic::new(open.line, open.col, codes::SYNTAX, "a refinement needs at least two clauses"));
        }
        self.bump();
        Ok(items)
    }

    fn acttree(&mut self) -> PResult<Body> {
        if self.eat_keyword("act") {
            return Ok(Body::Action(self.ident("an action name")?.0));
        }
        let Some(kind) = self.refine_kind() else {
            return Err(self.error(&["`act`", "`and`", "`or`", "`seq`"]));
        };
        self.bump();
        self.enter()?;
        let children = self.block(Self::named)?;
        self.leave();
        Ok(Body::Refinement(kind, children))
    }

    fn named(&mut self) -> PResult<Clause> {
        self.expect_keyword("clause")?;
        let (name, line, col) = self.ident("a clause name")?;
        self.record(&name, line, col);
        self.expect(Tok::LBrace)?;
        let body = self.acttree()?;
        self.expect(Tok::RBrace)?;
        Ok(Clause::bare(name, body))
    }

    fn op(&mut self) -> PResult<CmpOp> {
        match self.peek().tok {
            Tok::Op(op) => {
                self.bump();
                Ok(op)
            }
            Tok::Assign => {
                self.bump();
                Ok(CmpOp::Eq)
            }
            _ => Err(self.error(&["`<=`", "`<`", "`==`", "`>`", "`>=`"])),
        }
    }

    fn guard(&mut self) -> PResult<Guard> {
        let mut conjuncts = alloc::vec![self.guard_atom()?];
        while self.eat_keyword("and") {
            conjuncts.push(self.guard_atom()?);
        }
        Ok(Guard::new(conjuncts))
    }

    fn guard_atom(&mut self) -> PResult<VarConstraint> {
        let (left, ..) = self.ident("a variable name")?;
        let right = if self.peek().tok == Tok::Minus {
            self.bump();
            Some(self.ident("a variable name")?.0)
        } else {
            None
        };
        let op = self.op()?;
        let bound = i64::from(self.nat()?);
        Ok(VarConstraint { left, right, op, bound })
    }

    fn restriction(&mut self) -> PResult<TimeRestriction> {
        let mut conjuncts = alloc::vec![self.clock_atom()?];
        while self.eat_keyword("and") {
            conjuncts.push(self.clock_atom()?);
        }
        Ok(TimeRestriction::new(conjuncts))
    }

    fn clock_atom(&mut self) -> PResult<ClockConstraint> {
        let left = self.clock_ref()?;
        let right = if self.peek().tok == Tok::Minus {
            self.bump();
            Some(self.clock_ref()?)
        } else {
            None
        };
        let op = self.op()?;
        let bound = self.nat()?;
        Ok(ClockConstraint { left, right, op, bound })
    }

    fn clock_ref(&mut self) -> PResult<Clock> {
        if self.eat_keyword("T") {
            return Ok(Clock::Global);
        }
        if self.eat_keyword("after") {
            self.expect(Tok::LParen)?;
            let (name, ..) = self.ident("a clause name")?;
            self.expect(Tok::RParen)?;
            return Ok(Clock::After(name));
        }
        Err(self.error(&["`T`", "`after`"]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn parse(src: &str) -> Contract {
        parse_syntax(src).map(|(c, _)| c).unwrap_or_else(|d| panic!("{d}"))
    }

    #[test]
    fn minimal_contract() {
        let c = parse("contract c { clause n agent A { obligation act a; } }");
        assert_eq!(c.name, "c");
        let mut expected = Clause::bare("n", Body::Deontic(DeonticOp::Obligation, Box::new(Body::Action("a".into()))));
        expected.agent = Some("A".into());
        assert_eq!(c.root, expected);
    }

    #[test]
    fn bare_boxbody_names_the_root_after_the_contract() {
        let c = parse("contract n { agent A permission act a; }");
        assert_eq!(c.root.name, "n");
        assert_eq!(c.root.agent.as_deref(), Some("A"));
    }

    #[test]
    fn headers_guards_and_restrictions() {
        let c = parse(
            "unit day; vars { x = 3; y = 0; }
             contract c { clause n {
                 when x >= 3 and y - x <= 2;
                 within T >= 5 and after(m) < 10;
                 agent A prohibition act a reparation { agent B obligation act b; };
             } }",
        );
        assert_eq!(c.unit.as_deref(), Some("day"));
        assert_eq!(c.vars, vec![VarDecl { name: "x".into(), init: 3 }, VarDecl { name: "y".into(), init: 0 }]);
        assert_eq!(c.root.guard.to_string(), "x >= 3 and y - x <= 2");
        assert_eq!(c.root.restriction.to_string(), "T >= 5 and after(m) < 10");
        let rep = c.root.reparation.as_ref().unwrap();
        assert_eq!(rep.name, "n_reparation");
        assert_eq!(rep.agent.as_deref(), Some("B"));
    }

    #[test]
    fn compound_actions_and_refinements() {
        let c = parse(
            "contract c { clause root { and {
                 clause p agent A { obligation seq { clause s1 { act a }, clause s2 { or { clause x { act b } clause y { act c } } } }; }
                 clause q agent B { permission act d; }
             } } }",
        );
        let Body::Refinement(RefineKind::And, children) = &c.root.body else { panic!() };
        assert_eq!(children.len(), 2);
        let Body::Deontic(DeonticOp::Obligation, inner) = &children[0].body else { panic!() };
        let Body::Refinement(RefineKind::Seq, steps) = inner.as_ref() else { panic!() };
        assert_eq!(steps[1].name, "s2");
    }

    #[test]
    fn single_child_refinement_is_rejected() {
        let err = parse_syntax("contract c { and { clause a agent A { obligation act a; } } }").unwrap_err();
        assert_eq!(err.code, codes::SYNTAX);
        assert!(err.message.contains("at least two"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_syntax("contract c {\n  obligation act ;\n}").unwrap_err();
        assert_eq!((err.line, err.col), (2, 18));
        assert!(err.message.contains("action name"), "{err}");
        let err = parse_syntax("contract c { clause and { } }").unwrap_err();
        assert!(err.message.contains("keyword `and`"), "{err}");
        let err = parse_syntax("contract c { agent A agent B obligation act a; }").unwrap_err();
        assert!(err.message.contains("obligation"), "{err}");
    }

    #[test]
    fn deep_nesting_is_a_diagnostic() {
        let mut src = String::from("contract c ");
        for _ in 0..400 {
            src.push_str("{ and { clause x ");
        }
        let err = parse_syntax(&src).unwrap_err();
        assert!(err.message.contains("nesting"), "{err}");
    }

    #[test]
    fn spans_are_recorded() {
        let (_, spans) = parse_syntax("contract c {\n clause n agent A { obligation act a; } }").unwrap();
        assert_eq!(spans.get("n"), Some(&(2, 9)));
    }
}
