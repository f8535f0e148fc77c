//! Action automata: atomic actions and their AND/OR/SEQ compositions.
//! None of these touch the violation, satisfaction or permission sets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Fragment;
use crate::frontend::{Body, RefineKind};
use crate::nta::{Automaton, Edge, Node, NodeRole};

/// `X.init --a--> X.end`.
pub fn compile_atomic(owner: &str, action: &str) -> Fragment {
    let init = format!("{owner}.init");
    let end = format!("{owner}.end");
    let mut a = Automaton::new("", Node::new(init.clone(), NodeRole::Init));
    a.add_node(Node::new(end.clone(), NodeRole::End));
    a.add_edge(Edge::new(init, end.clone()).with_action(action));
    Fragment { automaton: a, end, extras: Vec::new() }
}

/// Interleaving product of action automata.
///
/// Product nodes are tuples of component nodes; the all-initial tuple is
/// `X.init`, the all-final tuple `X.end`, and the others are `X.p<k>`
/// numbered in row-major order of the tuples.
pub fn product_and(owner: &str, parts: Vec<Fragment>) -> Fragment {
    let autos: Vec<&Automaton> = parts.iter().map(|p| &p.automaton).collect();
    for a in &autos {
        debug_assert!(a.nodes.iter().all(|n| n.invariant.is_empty()));
        debug_assert!(a.edges.iter().all(|e| e.effects.is_empty() && e.sync.is_none()));
    }
    let sizes: Vec<usize> = autos.iter().map(|a| a.nodes.len()).collect();
    let total: usize = sizes.iter().product();
    let init_idx: Vec<usize> = autos.iter().map(|a| position(a, &a.initial)).collect();
    let end_idx: Vec<usize> = parts.iter().map(|p| position(&p.automaton, &p.end)).collect();

    let decode = |mut k: usize| -> Vec<usize> {
        let mut tuple = alloc::vec![0; sizes.len()];
        for i in (0..sizes.len()).rev() {
            tuple[i] = k % sizes[i];
            k /= sizes[i];
        }
        tuple
    };
    let encode = |tuple: &[usize]| tuple.iter().zip(&sizes).fold(0, |acc, (t, s)| acc * s + t);

    let init = format!("{owner}.init");
    let end = format!("{owner}.end");
    let mut names: Vec<String> = Vec::with_capacity(total);
    let mut plain = 0;
    for k in 0..total {
        let tuple = decode(k);
        names.push(if tuple == init_idx {
            init.clone()
        } else if tuple == end_idx {
            end.clone()
        } else {
            plain += 1;
            format!("{owner}.p{plain}")
        });
    }

    let mut out = Automaton::new("", Node::new(init.clone(), NodeRole::Init));
    for name in names.iter().filter(|n| **n != init) {
        let role = if *name == end { NodeRole::End } else { NodeRole::Plain };
        out.add_node(Node::new(name.clone(), role));
    }
    for k in 0..total {
        let tuple = decode(k);
        for (i, a) in autos.iter().enumerate() {
            let here = &a.nodes[tuple[i]].id;
            for e in a.edges_from(here) {
                let mut next = tuple.clone();
                next[i] = position(a, &e.target);
                let mut edge = e.clone();
                edge.source = names[k].clone();
                edge.target = names[encode(&next)].clone();
                out.add_edge(edge);
            }
        }
    }
    Fragment { automaton: out, end, extras: Vec::new() }
}

fn position(a: &Automaton, id: &str) -> usize {
    a.nodes.iter().position(|n| n.id == id).expect("node of the same automaton")
}

/// Alternative: urgent edges from `X.init` into every part and from every
/// part's end into `X.end`.
pub fn alt_or(owner: &str, parts: Vec<Fragment>) -> Fragment {
    let init = format!("{owner}.init");
    let end = format!("{owner}.end");
    let mut out = Automaton::new("", Node::new(init.clone(), NodeRole::Init));
    let mut extras = Vec::new();
    let mut ends = Vec::new();
    for p in parts {
        out.add_edge(Edge::urgent(init.clone(), p.automaton.initial.clone()));
        ends.push(p.end);
        out.absorb(p.automaton);
        extras.extend(p.extras);
    }
    out.add_node(Node::new(end.clone(), NodeRole::End));
    for e in ends {
        out.add_edge(Edge::urgent(e, end.clone()));
    }
    Fragment { automaton: out, end, extras }
}

/// Sequence: urgent edges from each part's end to the next part's start;
/// no new nodes.
pub fn seq_chain(parts: Vec<Fragment>) -> Fragment {
    let mut iter = parts.into_iter();
    let first = iter.next().expect("a sequence has parts");
    let mut out = first.automaton;
    let mut end = first.end;
    let mut extras = first.extras;
    for p in iter {
        out.add_edge(Edge::urgent(end, p.automaton.initial.clone()));
        end = p.end;
        out.absorb(p.automaton);
        extras.extend(p.extras);
    }
    Fragment { automaton: out, end, extras }
}

/// Action automaton of the propositional content of box `owner`.
pub fn compile_actions(owner: &str, body: &Body) -> Fragment {
    match body {
        Body::Action(a) => compile_atomic(owner, a),
        Body::Deontic(_, inner) => compile_actions(owner, inner),
        Body::Refinement(kind, children) => {
            let parts: Vec<Fragment> = children.iter().map(|c| compile_actions(&c.name, &c.body)).collect();
            match kind {
                RefineKind::And => product_and(owner, parts),
                RefineKind::Or => alt_or(owner, parts),
                RefineKind::Seq => seq_chain(parts),
            }
        }
    }
}

/// Every sequence of action labels leading from the initial node to the end
/// node. Only meaningful for acyclic action automata.
pub fn action_traces(f: &Fragment) -> alloc::collections::BTreeSet<Vec<String>> {
    let mut out = alloc::collections::BTreeSet::new();
    let mut stack: Vec<(String, Vec<String>)> = alloc::vec![(f.automaton.initial.clone(), Vec::new())];
    while let Some((node, trace)) = stack.pop() {
        if node == f.end {
            out.insert(trace.clone());
        }
        for e in f.automaton.edges_from(&node) {
            let mut t = trace.clone();
            if let Some(a) = &e.action {
                t.push(a.name.clone());
            }
            stack.push((e.target.clone(), t));
        }
    }
    out
}
