use alloc::string::String;
use core::fmt::Write;

use super::ast::{Body, Clause, Contract};

/// Canonical DSL text for a contract. Parsing the output yields the same
/// contract.
pub fn render_contract(c: &Contract) -> String {
    let mut out = String::new();
    if let Some(unit) = &c.unit {
        let _ = writeln!(out, "unit {unit};");
    }
    if !c.vars.is_empty() {
        out.push_str("vars {\n");
        for v in &c.vars {
            let _ = writeln!(out, "    {} = {};", v.name, v.init);
        }
        out.push_str("}\n");
    }
    let _ = write!(out, "contract {} {{\n    ", c.name);
    clause(&mut out, &c.root, 1);
    out.push_str("\n}\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn clause(out: &mut String, c: &Clause, level: usize) {
    let _ = write!(out, "clause {}", c.name);
    let norm = matches!(c.body, Body::Deontic(..));
    if let (Some(agent), false) = (&c.agent, norm) {
        let _ = write!(out, " agent {agent}");
    }
    out.push_str(" {\n");
    boxbody_inner(out, c, level + 1);
    indent(out, level);
    out.push('}');
}

fn boxbody_inner(out: &mut String, c: &Clause, level: usize) {
    if !c.guard.is_empty() {
        indent(out, level);
        let _ = writeln!(out, "when {};", c.guard);
    }
    if !c.restriction.is_empty() {
        indent(out, level);
        let _ = writeln!(out, "within {};", c.restriction);
    }
    indent(out, level);
    match &c.body {
        Body::Deontic(op, acts) => {
            if let Some(agent) = &c.agent {
                let _ = write!(out, "agent {agent} ");
            }
            let _ = write!(out, "{} ", op.keyword());
            acttree(out, acts, level);
            if let Some(rep) = &c.reparation {
                out.push_str(" reparation ");
                clause(out, rep, level);
            }
            out.push_str(";\n");
        }
        Body::Refinement(kind, children) => {
            let _ = writeln!(out, "{} {{", kind.keyword());
            for child in children {
                indent(out, level + 1);
                clause(out, child, level + 1);
                out.push('\n');
            }
            indent(out, level);
            out.push_str("}\n");
        }
        // Not expressible in the grammar; only reachable for invalid trees.
        Body::Action(a) => {
            let _ = writeln!(out, "act {a};");
        }
    }
}

fn acttree(out: &mut String, body: &Body, level: usize) {
    match body {
        Body::Action(a) => {
            let _ = write!(out, "act {a}");
        }
        Body::Refinement(kind, children) => {
            let _ = writeln!(out, "{} {{", kind.keyword());
            for child in children {
                indent(out, level + 1);
                let _ = write!(out, "clause {} {{ ", child.name);
                acttree(out, &child.body, level + 1);
                out.push_str(" }\n");
            }
            indent(out, level);
            out.push('}');
        }
        Body::Deontic(op, inner) => {
            let _ = write!(out, "{} ", op.keyword());
            acttree(out, inner, level);
        }
    }
}
