//! UPPAAL 4 flat XML.
//!
//! Urgency of internal edges is expressed by a helper template `Urgent`
//! with a single location and a receiving self loop on the urgent channel
//! `urg_edge`; every urgent edge sends on it. Agent actions become boolean
//! flags `agent_action`, the sets become arrays `V`, `S` (obligations and
//! prohibitions) and `P` (permissions) indexed by one constant per clause.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::explorer::{sanitize, Expr, Query, SetKind};
use crate::frontend::DeonticOp;
use crate::nta::{Automaton, ClockGuard, Edge, EffectKind, Nta, SyncDir};
use crate::temporal::{Clock, ClockInterval};

pub const URGENT_TEMPLATE: &str = "Urgent";
pub const URGENT_CHANNEL: &str = "urg_edge";

const ARRAYS: [&str; 3] = ["V", "S", "P"];

const RESERVED: &[&str] = &[
    "A", "E", "and", "assign", "bool", "break", "broadcast", "case", "chan", "clock", "commit", "committed", "const",
    "continue", "deadlock", "default", "do", "double", "else", "exists", "false", "for", "forall", "guard", "hybrid",
    "if", "imply", "init", "int", "meta", "not", "or", "priority", "process", "return", "scalar", "select", "state",
    "string", "struct", "sum", "switch", "sync", "system", "trans", "true", "typedef", "urgent", "void", "while",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("`{first}` and `{second}` both become `{name}` in the exported model")]
    NameCollisionAfterSanitize { first: String, second: String, name: String },
    #[error("query `{query}` names `{name}`, which is not in the network")]
    UnknownQueryName { query: String, name: String },
}

/// The `.xml` model and the `.q` query file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UppaalModel {
    pub xml: String,
    pub queries: String,
}

/// Reachability of `S`/`V` for each obligation and prohibition and of `P`
/// for each permission.
pub fn default_queries(nta: &Nta) -> Vec<Query> {
    let mut out = Vec::new();
    for c in &nta.clauses {
        let kinds: &[SetKind] = match c.kind {
            DeonticOp::Permission => &[SetKind::P],
            _ => &[SetKind::S, SetKind::V],
        };
        for &kind in kinds {
            out.push(Query::Reach(Expr::Set { kind, clause: c.name.clone(), value: true }));
        }
    }
    out
}

/// Exported identifiers of a network.
struct Names {
    /// Clause name to (array position, is permission).
    clauses: BTreeMap<String, (usize, bool)>,
    tracked: usize,
    permissions: usize,
    /// Sanitized node names per automaton.
    nodes: Vec<Vec<String>>,
    actions: BTreeMap<String, String>,
}

fn claim(taken: &mut BTreeMap<String, String>, original: &str, name: String) -> Result<String, ExportError> {
    match taken.get(&name) {
        Some(first) if first != original => Err(ExportError::NameCollisionAfterSanitize {
            first: first.clone(),
            second: original.to_string(),
            name,
        }),
        _ => {
            taken.insert(name.clone(), original.to_string());
            Ok(name)
        }
    }
}

fn names(nta: &Nta) -> Result<Names, ExportError> {
    let mut global: BTreeMap<String, String> = BTreeMap::new();
    for word in RESERVED.iter().chain(&ARRAYS).chain(&[URGENT_TEMPLATE, URGENT_CHANNEL]) {
        global.insert(word.to_string(), format!("reserved word `{word}`"));
    }
    for a in &nta.automata {
        claim(&mut global, &format!("automaton {}", a.name), sanitize(&a.name))?;
    }
    for c in nta.clocks.iter() {
        let s = c.to_string();
        claim(&mut global, &format!("clock {s}"), sanitize(&s))?;
    }
    for v in nta.variables.keys() {
        claim(&mut global, &format!("variable {v}"), sanitize(v))?;
    }
    for ch in &nta.channels {
        claim(&mut global, &format!("channel {}", ch.name), sanitize(&ch.name))?;
    }
    let mut clauses = BTreeMap::new();
    let (mut tracked, mut permissions) = (0, 0);
    for c in &nta.clauses {
        claim(&mut global, &format!("clause {}", c.name), sanitize(&c.name))?;
        let slot = if c.kind == DeonticOp::Permission {
            permissions += 1;
            (permissions - 1, true)
        } else {
            tracked += 1;
            (tracked - 1, false)
        };
        clauses.insert(c.name.clone(), slot);
    }
    let mut actions = BTreeMap::new();
    for a in &nta.automata {
        for e in &a.edges {
            if let Some(act) = &e.action {
                let label = act.label();
                if let alloc::collections::btree_map::Entry::Vacant(slot) = actions.entry(label) {
                    let flag = claim(&mut global, &format!("action {}", slot.key()), sanitize(slot.key()))?;
                    slot.insert(flag);
                }
            }
        }
    }
    let mut nodes = Vec::new();
    for a in &nta.automata {
        let mut local: BTreeMap<String, String> = RESERVED.iter().map(|w| (w.to_string(), format!("reserved word `{w}`"))).collect();
        let mut list = Vec::new();
        for n in &a.nodes {
            list.push(claim(&mut local, &format!("node {}", n.id), sanitize(&n.id))?);
        }
        nodes.push(list);
    }
    Ok(Names { clauses, tracked, permissions, nodes, actions })
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn clock_name(c: &Clock) -> String {
    sanitize(&c.to_string())
}

fn interval(i: &ClockInterval) -> Vec<String> {
    let c = clock_name(&i.clock);
    let mut parts = Vec::new();
    if i.lower > 0 {
        parts.push(format!("{c} >= {}", i.lower));
    }
    if let Some(u) = i.upper {
        parts.push(format!("{c} <= {u}"));
    }
    parts
}

fn guard_text(e: &Edge) -> String {
    let mut parts: Vec<String> = e
        .guard
        .conjuncts
        .iter()
        .map(|c| match &c.right {
            Some(r) => format!("{} - {} {} {}", sanitize(&c.left), sanitize(r), c.op, c.bound),
            None => format!("{} {} {}", sanitize(&c.left), c.op, c.bound),
        })
        .collect();
    for g in &e.clock_guards {
        match g {
            ClockGuard::Within(i) => parts.extend(interval(i)),
            ClockGuard::At(c, n) => parts.push(format!("{} == {n}", clock_name(c))),
        }
    }
    parts.join(" && ")
}

fn sync_text(e: &Edge) -> Option<String> {
    match &e.sync {
        Some(s) => Some(format!("{}{}", sanitize(&s.channel), if s.dir == SyncDir::Send { '!' } else { '?' })),
        None if e.urgent => Some(format!("{URGENT_CHANNEL}!")),
        None => None,
    }
}

fn assignment_text(e: &Edge, names: &Names) -> String {
    let mut parts: Vec<String> = e.resets.iter().map(|c| format!("{} = 0", clock_name(c))).collect();
    for eff in &e.effects {
        let (array, value) = match eff.kind {
            EffectKind::AddViolation => ("V", true),
            EffectKind::AddSatisfaction => ("S", true),
            EffectKind::AddPermission => ("P", true),
            EffectKind::ClearViolation => ("V", false),
        };
        parts.push(format!("{array}[{}] = {value}", sanitize(&eff.clause)));
    }
    if let Some(act) = &e.action {
        parts.push(format!("{} = true", names.actions[&act.label()]));
    }
    parts.join(", ")
}

fn declarations(nta: &Nta, names: &Names) -> String {
    let mut d = String::new();
    let clocks: Vec<String> = nta.clocks.iter().map(clock_name).collect();
    let _ = writeln!(d, "clock {};", clocks.join(", "));
    for (v, value) in &nta.variables {
        if (-32768..=32767).contains(value) {
            let _ = writeln!(d, "int {} = {value};", sanitize(v));
        } else {
            let _ = writeln!(d, "int[{value},{value}] {} = {value};", sanitize(v));
        }
    }
    for ch in &nta.channels {
        let _ = writeln!(d, "{}chan {};", if ch.urgent { "urgent " } else { "" }, sanitize(&ch.name));
    }
    let _ = writeln!(d, "urgent chan {URGENT_CHANNEL};");
    for flag in names.actions.values() {
        let _ = writeln!(d, "bool {flag} = false;");
    }
    for c in &nta.clauses {
        let _ = writeln!(d, "const int {} = {};", sanitize(&c.name), names.clauses[&c.name].0);
    }
    if names.tracked > 0 {
        let _ = writeln!(d, "bool V[{}];", names.tracked);
        let _ = writeln!(d, "bool S[{}];", names.tracked);
    }
    if names.permissions > 0 {
        let _ = writeln!(d, "bool P[{}];", names.permissions);
    }
    d
}

fn template(out: &mut String, a: &Automaton, index: usize, nodes: &[String], names: &Names) {
    let id = |i: usize| format!("a{index}_l{i}");
    let pos: BTreeMap<&str, usize> = a.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let _ = writeln!(out, "  <template>");
    let _ = writeln!(out, "    <name>{}</name>", escape(&sanitize(&a.name)));
    for (i, n) in a.nodes.iter().enumerate() {
        let (x, y) = ((i % 6) as i64 * 180, (i / 6) as i64 * 140);
        let _ = writeln!(out, "    <location id=\"{}\" x=\"{x}\" y=\"{y}\">", id(i));
        let _ = writeln!(out, "      <name x=\"{}\" y=\"{}\">{}</name>", x - 20, y - 30, escape(&nodes[i]));
        if !n.invariant.is_empty() {
            let inv: Vec<String> = n.invariant.iter().map(|b| format!("{} <= {}", clock_name(&b.clock), b.bound)).collect();
            let _ = writeln!(out, "      <label kind=\"invariant\" x=\"{}\" y=\"{}\">{}</label>", x - 20, y + 15, escape(&inv.join(" && ")));
        }
        let mut comment = Vec::new();
        if !n.annot.is_empty() {
            comment.push(n.annot.to_string());
        }
        if let Some(s) = &n.summary {
            comment.push(s.clone());
        }
        if !comment.is_empty() {
            let _ = writeln!(out, "      <label kind=\"comments\">{}</label>", escape(&comment.join("\n")));
        }
        let _ = writeln!(out, "    </location>");
    }
    let _ = writeln!(out, "    <init ref=\"{}\"/>", id(pos[a.initial.as_str()]));
    for e in &a.edges {
        let _ = writeln!(out, "    <transition>");
        let _ = writeln!(out, "      <source ref=\"{}\"/>", id(pos[e.source.as_str()]));
        let _ = writeln!(out, "      <target ref=\"{}\"/>", id(pos[e.target.as_str()]));
        let guard = guard_text(e);
        if !guard.is_empty() {
            let _ = writeln!(out, "      <label kind=\"guard\">{}</label>", escape(&guard));
        }
        if let Some(sync) = sync_text(e) {
            let _ = writeln!(out, "      <label kind=\"synchronisation\">{}</label>", escape(&sync));
        }
        let assign = assignment_text(e, names);
        if !assign.is_empty() {
            let _ = writeln!(out, "      <label kind=\"assignment\">{}</label>", escape(&assign));
        }
        let _ = writeln!(out, "    </transition>");
    }
    let _ = writeln!(out, "  </template>");
}

/// Exports `nta` and `queries`.
pub fn to_uppaal(nta: &Nta, queries: &[Query]) -> Result<UppaalModel, ExportError> {
    let names = names(nta)?;
    let mut q = String::new();
    for query in queries {
        let _ = writeln!(q, "{}", translate(nta, &names, query)?);
    }
    let mut xml = String::new();
    xml.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    xml.push_str(
        "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' 'http://www.it.uu.se/research/group/darts/uppaal/flat-1_2.dtd'>\n",
    );
    xml.push_str("<nta>\n");
    let _ = writeln!(xml, "  <declaration>{}</declaration>", escape(&declarations(nta, &names)));
    for (i, a) in nta.automata.iter().enumerate() {
        template(&mut xml, a, i, &names.nodes[i], &names);
    }
    let _ = writeln!(xml, "  <template>");
    let _ = writeln!(xml, "    <name>{URGENT_TEMPLATE}</name>");
    let _ = writeln!(xml, "    <location id=\"urgent_l0\" x=\"0\" y=\"0\">");
    let _ = writeln!(xml, "      <name x=\"-20\" y=\"-30\">idle</name>");
    let _ = writeln!(xml, "    </location>");
    let _ = writeln!(xml, "    <init ref=\"urgent_l0\"/>");
    let _ = writeln!(xml, "    <transition>");
    let _ = writeln!(xml, "      <source ref=\"urgent_l0\"/>");
    let _ = writeln!(xml, "      <target ref=\"urgent_l0\"/>");
    let _ = writeln!(xml, "      <label kind=\"synchronisation\">{URGENT_CHANNEL}?</label>");
    let _ = writeln!(xml, "      <nail x=\"60\" y=\"-40\"/>");
    let _ = writeln!(xml, "      <nail x=\"60\" y=\"40\"/>");
    let _ = writeln!(xml, "    </transition>");
    let _ = writeln!(xml, "  </template>");
    let mut system: Vec<String> = nta.automata.iter().map(|a| sanitize(&a.name)).collect();
    system.push(URGENT_TEMPLATE.to_string());
    let _ = writeln!(xml, "  <system>system {};</system>", system.join(", "));
    xml.push_str("</nta>\n");
    Ok(UppaalModel { xml, queries: q })
}

/// Query text in UPPAAL syntax over the exported names.
pub fn translate_query(nta: &Nta, query: &Query) -> Result<String, ExportError> {
    translate(nta, &names(nta)?, query)
}

fn translate(nta: &Nta, names: &Names, query: &Query) -> Result<String, ExportError> {
    let unknown = |name: String| ExportError::UnknownQueryName { query: query.to_string(), name };
    let expr = |e: &Expr| -> Result<String, ExportError> {
        let mut out = String::new();
        expr_text(nta, names, e, &mut out).map_err(unknown)?;
        Ok(out)
    };
    Ok(match query {
        Query::Reach(e) => format!("E<> {}", expr(e)?),
        Query::Always(e) => format!("A[] {}", expr(e)?),
        Query::LeadsTo(p, q) => format!("({}) --> ({})", expr(p)?, expr(q)?),
    })
}

fn expr_text(nta: &Nta, names: &Names, e: &Expr, out: &mut String) -> Result<(), String> {
    let sub = |x: &Expr, out: &mut String| -> Result<(), String> {
        let simple = !matches!(x, Expr::And(..) | Expr::Or(..));
        if !simple {
            out.push('(');
        }
        expr_text(nta, names, x, out)?;
        if !simple {
            out.push(')');
        }
        Ok(())
    };
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Not(x) => {
            out.push_str("not ");
            sub(x, out)?;
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            sub(a, out)?;
            out.push_str(if matches!(e, Expr::And(..)) { " and " } else { " or " });
            sub(b, out)?;
        }
        Expr::Location { automaton, node } => {
            let a = nta.automata.iter().position(|x| x.name == *automaton).ok_or_else(|| automaton.clone())?;
            let nodes = &nta.automata[a].nodes;
            let i = nodes
                .iter()
                .position(|n| n.id == *node)
                .or_else(|| names.nodes[a].iter().position(|s| s == node))
                .ok_or_else(|| format!("{automaton}.{node}"))?;
            let _ = write!(out, "{}.{}", sanitize(automaton), names.nodes[a][i]);
        }
        Expr::Compare { left, right, op, bound } => {
            let known = |n: &str| {
                nta.variables.contains_key(n) || Clock::from_name(n).is_some_and(|c| nta.clocks.entries.contains(&c))
            };
            for n in core::iter::once(left).chain(right) {
                if !known(n) {
                    return Err(n.clone());
                }
            }
            match right {
                Some(r) => {
                    let _ = write!(out, "{} - {} {op} {bound}", sanitize(left), sanitize(r));
                }
                None => {
                    let _ = write!(out, "{} {op} {bound}", sanitize(left));
                }
            }
        }
        Expr::Set { kind, clause, value } => {
            let &(_, permission) = names.clauses.get(clause).ok_or_else(|| clause.clone())?;
            if permission == (*kind == SetKind::P) {
                let _ = write!(out, "{kind}[{}] == {value}", sanitize(clause));
            } else {
                // The clause never enters this set.
                out.push_str(if *value { "false" } else { "true" });
            }
        }
        Expr::Done { agent, action } => {
            let label = format!("{agent}.{action}");
            out.push_str(names.actions.get(&label).ok_or(label.clone())?);
        }
    }
    Ok(())
}
