//! Query language.
//!
//! ```text
//! query   := "E<>" expr | "A[]" expr | expr "-->" expr
//! expr    := conj (("or" | "||") conj)*
//! conj    := unary (("and" | "&&") unary)*
//! unary   := ("not" | "!") unary | "(" expr ")" | atom
//! atom    := "true" | "false"
//!          | ("V" | "S" | "P") "[" IDENT "]" ("==" ("true" | "false"))?
//!          | "done" "[" IDENT "." IDENT "]"
//!          | IDENT ("-" IDENT)? op NAT          clock or variable
//!          | IDENT "." node                     location of an automaton
//! ```
//!
//! A node is named by its id (`A2.Valid_Information.init`) or by the
//! exported form with dots replaced (`A2.Valid_Information_init`).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Explorer;
use crate::nta::Nta;
use crate::temporal::{Clock, CmpOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SetKind {
    V,
    S,
    P,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Bool(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Location { automaton: String, node: String },
    Compare { left: String, right: Option<String>, op: CmpOp, bound: u32 },
    Set { kind: SetKind, clause: String, value: bool },
    Done { agent: String, action: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Query {
    /// `E<> e`
    Reach(Expr),
    /// `A[] e`
    Always(Expr),
    /// `p --> q`
    LeadsTo(Expr, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {col}: {message}")]
pub struct QueryError {
    pub col: usize,
    pub message: String,
}

impl Query {
    /// Largest constant the query compares a clock of `nta` with.
    pub fn clock_ceiling(&self, nta: &Nta) -> u32 {
        fn walk(e: &Expr, nta: &Nta, max: &mut u32) {
            match e {
                Expr::Not(x) => walk(x, nta, max),
                Expr::And(a, b) | Expr::Or(a, b) => {
                    walk(a, nta, max);
                    walk(b, nta, max);
                }
                Expr::Compare { left, bound, .. } if Clock::from_name(left).is_some_and(|c| nta.clocks.entries.contains(&c)) => {
                    *max = (*max).max(*bound);
                }
                _ => {}
            }
        }
        let mut max = 0;
        match self {
            Query::Reach(e) | Query::Always(e) => walk(e, nta, &mut max),
            Query::LeadsTo(p, q) => {
                walk(p, nta, &mut max);
                walk(q, nta, &mut max);
            }
        }
        max
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetKind::V => "V",
            SetKind::S => "S",
            SetKind::P => "P",
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Not(x) => write!(f, "not {}", Paren(x)),
            Expr::And(a, b) => write!(f, "{} and {}", Paren(a), Paren(b)),
            Expr::Or(a, b) => write!(f, "{} or {}", Paren(a), Paren(b)),
            Expr::Location { automaton, node } => write!(f, "{automaton}.{node}"),
            Expr::Compare { left, right: Some(r), op, bound } => write!(f, "{left} - {r} {op} {bound}"),
            Expr::Compare { left, right: None, op, bound } => write!(f, "{left} {op} {bound}"),
            Expr::Set { kind, clause, value } => write!(f, "{kind}[{clause}] == {value}"),
            Expr::Done { agent, action } => write!(f, "done[{agent}.{action}]"),
        }
    }
}

struct Paren<'a>(&'a Expr);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::And(..) | Expr::Or(..) => write!(f, "({})", self.0),
            e => write!(f, "{e}"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Reach(e) => write!(f, "E<> {e}"),
            Query::Always(e) => write!(f, "A[] {e}"),
            Query::LeadsTo(p, q) => write!(f, "{} --> {}", Paren(p), Paren(q)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u32),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Minus,
    Op(CmpOp),
    Not,
    And,
    Or,
    End,
}

fn tokenize(text: &str, base: usize) -> Result<Vec<(Tok, usize)>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| QueryError { col: base + col + 1, message };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                _ => Tok::Ident(word),
            };
            out.push((tok, start));
            continue;
        }
        if c.is_ascii_digit() {
            let mut value: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                value = value.saturating_mul(10).saturating_add(u64::from(chars[i] as u8 - b'0'));
                i += 1;
            }
            let value = u32::try_from(value).map_err(|_| err(start, "number too large".into()))?;
            out.push((Tok::Nat(value), start));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('.', _) => (Tok::Dot, 1),
            ('-', _) => (Tok::Minus, 1),
            ('<', Some('=')) => (Tok::Op(CmpOp::Le), 2),
            ('>', Some('=')) => (Tok::Op(CmpOp::Ge), 2),
            ('=', Some('=')) => (Tok::Op(CmpOp::Eq), 2),
            ('&', Some('&')) => (Tok::And, 2),
            ('|', Some('|')) => (Tok::Or, 2),
            ('<', _) => (Tok::Op(CmpOp::Lt), 1),
            ('>', _) => (Tok::Op(CmpOp::Gt), 1),
            ('!', _) => (Tok::Not, 1),
            _ => return Err(err(start, format!("unexpected character `{}`", c.escape_debug()))),
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::End, chars.len()));
    Ok(out.into_iter().map(|(t, p)| (t, base + p)).collect())
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError { col: self.toks[self.pos].1 + 1, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), QueryError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        self.depth += 1;
        if self.depth > 64 {
            return Err(self.err("expression nested too deeply"));
        }
        let mut left = self.conj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            left = Expr::Or(Box::new(left), Box::new(self.conj()?));
        }
        self.depth -= 1;
        Ok(left)
    }

    fn conj(&mut self) -> Result<Expr, QueryError> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            left = Expr::And(Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                self.depth += 1;
                if self.depth > 64 {
                    return Err(self.err("expression nested too deeply"));
                }
                let inner = self.unary()?;
                self.depth -= 1;
                Ok(Expr::Not(Box::new(inner)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.atom(),
        }
    }

    fn bool_lit(&mut self) -> Result<bool, QueryError> {
        match self.ident("`true` or `false`")?.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.err("expected `true` or `false`")),
        }
    }

    fn atom(&mut self) -> Result<Expr, QueryError> {
        let name = self.ident("an expression")?;
        match name.as_str() {
            "true" => return Ok(Expr::Bool(true)),
            "false" => return Ok(Expr::Bool(false)),
            _ => {}
        }
        if *self.peek() == Tok::LBracket {
            self.bump();
            if name == "done" {
                let agent = self.ident("an agent")?;
                self.expect(Tok::Dot, "`.`")?;
                let action = self.ident("an action")?;
                self.expect(Tok::RBracket, "`]`")?;
                return Ok(Expr::Done { agent, action });
            }
            let kind = match name.as_str() {
                "V" => SetKind::V,
                "S" => SetKind::S,
                "P" => SetKind::P,
                _ => return Err(self.err("only V, S, P and done can be indexed")),
            };
            let clause = self.ident("a clause name")?;
            self.expect(Tok::RBracket, "`]`")?;
            let mut value = true;
            if *self.peek() == Tok::Op(CmpOp::Eq) {
                self.bump();
                value = self.bool_lit()?;
            }
            return Ok(Expr::Set { kind, clause, value });
        }
        if *self.peek() == Tok::Dot {
            let mut node = String::new();
            while *self.peek() == Tok::Dot {
                self.bump();
                if !node.is_empty() {
                    node.push('.');
                }
                node.push_str(&self.ident("a node name")?);
            }
            return Ok(Expr::Location { automaton: name, node });
        }
        let right = if *self.peek() == Tok::Minus {
            self.bump();
            Some(self.ident("a clock or variable")?)
        } else {
            None
        };
        let Tok::Op(op) = *self.peek() else {
            return Err(self.err("expected a comparison operator"));
        };
        self.bump();
        let Tok::Nat(bound) = *self.peek() else {
            return Err(self.err("expected a number"));
        };
        self.bump();
        Ok(Expr::Compare { left: name, right, op, bound })
    }
}

fn parse_expr(text: &str, base: usize) -> Result<Expr, QueryError> {
    let mut p = Parser { toks: tokenize(text, base)?, pos: 0, depth: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("unexpected input after the expression"));
    }
    Ok(e)
}

/// Parses query text.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim_start();
    if let Some(rest) = body.strip_prefix("E<>") {
        return Ok(Query::Reach(parse_expr(rest, lead + 3)?));
    }
    if let Some(rest) = body.strip_prefix("A[]") {
        return Ok(Query::Always(parse_expr(rest, lead + 3)?));
    }
    match text.find("-->") {
        Some(at) => {
            if text[at + 3..].contains("-->") {
                return Err(QueryError { col: at + 1, message: "`-->` may appear only once".to_string() });
            }
            Ok(Query::LeadsTo(parse_expr(&text[..at], 0)?, parse_expr(&text[at + 3..], at + 3)?))
        }
        None => Err(QueryError { col: lead + 1, message: "expected `E<>`, `A[]` or `p --> q`".to_string() }),
    }
}

/// Expression with every name replaced by an explorer index. Variable
/// comparisons are folded, since variables never change.
#[derive(Debug, Clone)]
pub(crate) enum Resolved {
    Bool(bool),
    Not(Box<Resolved>),
    And(Box<Resolved>, Box<Resolved>),
    Or(Box<Resolved>, Box<Resolved>),
    Loc(usize, u32),
    Clock(usize, CmpOp, u32),
    Set(SetKind, usize, bool),
    Done(usize),
}

/// Replaces every non-alphanumeric character by `_`.
pub fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

impl Explorer<'_> {
    pub(crate) fn resolve(&self, e: &Expr) -> Result<Resolved, String> {
        Ok(match e {
            Expr::Bool(b) => Resolved::Bool(*b),
            Expr::Not(x) => Resolved::Not(Box::new(self.resolve(x)?)),
            Expr::And(a, b) => Resolved::And(Box::new(self.resolve(a)?), Box::new(self.resolve(b)?)),
            Expr::Or(a, b) => Resolved::Or(Box::new(self.resolve(a)?), Box::new(self.resolve(b)?)),
            Expr::Location { automaton, node } => {
                let nta = self.nta();
                let a = nta.automata.iter().position(|x| x.name == *automaton).ok_or_else(|| format!("no automaton `{automaton}`"))?;
                let nodes = &nta.automata[a].nodes;
                let found = nodes.iter().position(|n| n.id == *node).or_else(|| {
                    let matches: Vec<usize> = (0..nodes.len()).filter(|&i| sanitize(&nodes[i].id) == *node).collect();
                    (matches.len() == 1).then(|| matches[0])
                });
                let n = found.ok_or_else(|| format!("automaton `{automaton}` has no node `{node}`"))?;
                Resolved::Loc(a, n as u32)
            }
            Expr::Compare { left, right, op, bound } => {
                if let Some(c) = self.clock_index(left) {
                    if right.is_some() {
                        return Err(format!("clock difference `{e}` is not supported in queries"));
                    }
                    Resolved::Clock(c, *op, *bound)
                } else {
                    let vars = &self.nta().variables;
                    let value = |v: &str| vars.get(v).copied().ok_or_else(|| format!("no clock or variable `{v}`"));
                    let mut lhs = value(left)?;
                    if let Some(r) = right {
                        lhs -= value(r)?;
                    }
                    Resolved::Bool(op.holds(lhs, i64::from(*bound)))
                }
            }
            Expr::Set { kind, clause, value } => {
                let i = self.clauses().iter().position(|c| c == clause).ok_or_else(|| format!("no deontic clause `{clause}`"))?;
                Resolved::Set(*kind, i, *value)
            }
            Expr::Done { agent, action } => {
                let label = format!("{agent}.{action}");
                let i = self.actions().iter().position(|a| *a == label).ok_or_else(|| format!("no action `{label}`"))?;
                Resolved::Done(i)
            }
        })
    }

    fn clock_index(&self, name: &str) -> Option<usize> {
        let c = Clock::from_name(name)?;
        self.clocks().iter().position(|x| *x == c)
    }

    pub(crate) fn eval(&self, e: &Resolved, s: &super::State) -> bool {
        match e {
            Resolved::Bool(b) => *b,
            Resolved::Not(x) => !self.eval(x, s),
            Resolved::And(a, b) => self.eval(a, s) && self.eval(b, s),
            Resolved::Or(a, b) => self.eval(a, s) || self.eval(b, s),
            Resolved::Loc(a, n) => s.locs[*a] == *n,
            Resolved::Clock(c, op, n) => op.holds(i64::from(s.clocks[*c]), i64::from(*n)),
            Resolved::Set(kind, i, value) => {
                let bits = match kind {
                    SetKind::V => &s.v,
                    SetKind::S => &s.s,
                    SetKind::P => &s.p,
                };
                bits.get(*i) == *value
            }
            Resolved::Done(i) => s.done.get(*i),
        }
    }
}
