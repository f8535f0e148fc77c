//! Graphviz rendering: one cluster per automaton, urgent edges with open
//! arrowheads, node sets between braces.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::nta::{Automaton, Nta};

fn quote(text: &str) -> String {
    let mut out = String::from("\"");
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn cluster(out: &mut String, index: usize, a: &Automaton) {
    let id = |node: &str| quote(&format!("{}::{node}", a.name));
    let _ = writeln!(out, "  subgraph cluster_{index} {{");
    let _ = writeln!(out, "    label={};", quote(&a.name));
    for n in &a.nodes {
        let mut lines: Vec<String> = alloc::vec![n.id.clone()];
        if !n.annot.is_empty() {
            lines.push(format!("{}", n.annot));
        }
        if let Some(s) = &n.summary {
            lines.push(s.clone());
        }
        for b in &n.invariant {
            lines.push(format!("{b}"));
        }
        let extra = if n.id == a.initial { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "    {} [label={}{extra}];", id(&n.id), quote(&lines.join("\n")));
    }
    for e in &a.edges {
        let mut attrs = Vec::new();
        let label = e.label();
        if !label.is_empty() {
            attrs.push(format!("label={}", quote(&label)));
        }
        if e.urgent {
            attrs.push(String::from("arrowhead=onormal"));
        }
        let attrs = if attrs.is_empty() { String::new() } else { format!(" [{}]", attrs.join(", ")) };
        let _ = writeln!(out, "    {} -> {}{attrs};", id(&e.source), id(&e.target));
    }
    let _ = writeln!(out, "  }}");
}

pub fn to_dot(nta: &Nta) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&nta.name));
    out.push_str("  rankdir=LR;\n  node [shape=ellipse, fontsize=10];\n  edge [fontsize=9];\n");
    for (i, a) in nta.automata.iter().enumerate() {
        cluster(&mut out, i, a);
    }
    out.push_str("}\n");
    out
}
