//! Composition of finalized norm automata under AND, OR and SEQ
//! refinements.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::deontic::{add_skip_edges, guard_departures};
use super::{CompileError, Fragment};
use crate::nta::{Automaton, Channel, Edge, Node, NodeRole, SyncDir};
use crate::temporal::Guard;

/// Hands out the urgent barrier channels `m_1, m_2, ...`.
#[derive(Debug, Default)]
pub struct Channels {
    pub declared: Vec<Channel>,
}

impl Channels {
    pub fn fresh(&mut self) -> String {
        let name = format!("m_{}", self.declared.len() + 1);
        self.declared.push(Channel { name: name.clone(), urgent: true });
        name
    }
}

/// Parallel composition. The first part becomes the main automaton and
/// gains `C.init`, `C.final` and, with a guard, `C.skip`. Part `i >= 2`
/// waits in `C.syn<i-1>.in` for the start barrier and ends in
/// `C.syn<i-1>.out`; middle parts relay the barrier through
/// `C.syn<i>.relay` and `C.syn<i>.join`.
pub fn compose_and_norms(
    name: &str,
    guard: &Guard,
    parts: Vec<(String, Fragment)>,
    channels: &mut Channels,
) -> Result<Fragment, CompileError> {
    let n = parts.len();
    let chans: Vec<String> = (1..n).map(|_| channels.fresh()).collect();
    let init = format!("{name}.init");
    let fin = format!("{name}.final");
    let mut names = Vec::new();
    let mut extras_tail = Vec::new();
    let mut helpers = Vec::new();
    let mut main: Option<Automaton> = None;

    for (idx, (label, part)) in parts.into_iter().enumerate() {
        let i = idx + 1;
        let Fragment { automaton: body, end, extras } = part;
        names.push(label);
        extras_tail.extend(extras);
        let body_init = body.initial.clone();
        if i == 1 {
            let mut a = Automaton::new("", Node::new(init.clone(), NodeRole::Init));
            a.add_edge(Edge::new(init.clone(), body_init).with_sync(&chans[0], SyncDir::Send).with_guard(guard.clone()));
            a.absorb(body);
            a.add_node(Node::new(fin.clone(), NodeRole::Final));
            a.add_edge(Edge::new(end, fin.clone()).with_sync(&chans[0], SyncDir::Send));
            if !guard.is_empty() {
                let skip = format!("{name}.skip");
                a.add_node(Node::new(skip.clone(), NodeRole::Skip));
                add_skip_edges(&mut a.edges, &init, &skip, guard, name)?;
            }
            main = Some(a);
            continue;
        }
        let wait = format!("{name}.syn{}.in", i - 1);
        let done = format!("{name}.syn{}.out", i - 1);
        let prev = &chans[i - 2];
        let mut a = Automaton::new("", Node::new(wait.clone(), NodeRole::Syn));
        a.absorb(body);
        a.add_node(Node::new(done.clone(), NodeRole::Syn));
        if i < n {
            let relay = format!("{name}.syn{i}.relay");
            let join = format!("{name}.syn{i}.join");
            let next = &chans[i - 1];
            a.add_node(Node::new(relay.clone(), NodeRole::Syn));
            a.add_node(Node::new(join.clone(), NodeRole::Syn));
            a.add_edge(Edge::new(wait, relay.clone()).with_sync(prev, SyncDir::Receive));
            a.add_edge(Edge::new(relay, body_init).with_sync(next, SyncDir::Send));
            a.add_edge(Edge::new(end, join.clone()).with_sync(next, SyncDir::Send));
            a.add_edge(Edge::new(join, done).with_sync(prev, SyncDir::Receive));
        } else {
            a.add_edge(Edge::new(wait, body_init).with_sync(prev, SyncDir::Receive));
            a.add_edge(Edge::new(end, done).with_sync(prev, SyncDir::Receive));
        }
        helpers.push(a);
    }

    let mut main = main.expect("at least two parts");
    let summary = union_summary(&names);
    main.node_mut(&fin).expect("added above").summary = Some(summary);
    helpers.extend(extras_tail);
    Ok(Fragment { automaton: main, end: fin, extras: helpers })
}

fn union_summary(parts: &[String]) -> String {
    format!("sets: union of {}", parts.join(", "))
}

/// Alternative composition: `C.init` branches into every part and every
/// part's final node leads to `C.final`.
pub fn compose_or_norms(name: &str, guard: &Guard, parts: Vec<Fragment>) -> Result<Fragment, CompileError> {
    let init = format!("{name}.init");
    let fin = format!("{name}.final");
    let mut a = Automaton::new("", Node::new(init.clone(), NodeRole::Init));
    let mut extras = Vec::new();
    let mut ends = Vec::new();
    for p in parts {
        a.add_edge(Edge::urgent(init.clone(), p.automaton.initial.clone()).with_guard(guard.clone()));
        ends.push(p.end);
        a.absorb(p.automaton);
        extras.extend(p.extras);
    }
    a.add_node(Node::new(fin.clone(), NodeRole::Final));
    for e in ends {
        a.add_edge(Edge::urgent(e, fin.clone()));
    }
    if !guard.is_empty() {
        let skip = format!("{name}.skip");
        a.add_node(Node::new(skip.clone(), NodeRole::Skip));
        add_skip_edges(&mut a.edges, &init, &skip, guard, name)?;
    }
    Ok(Fragment { automaton: a, end: fin, extras })
}

/// Sequential composition: each part's final node leads to the next part's
/// initial node. Only `C.skip` is added.
pub fn compose_seq_norms(name: &str, guard: &Guard, parts: Vec<Fragment>) -> Result<Fragment, CompileError> {
    let mut iter = parts.into_iter();
    let first = iter.next().expect("at least two parts");
    let start = first.automaton.initial.clone();
    let mut a = first.automaton;
    let mut end = first.end;
    let mut extras = first.extras;
    for p in iter {
        a.add_edge(Edge::urgent(end, p.automaton.initial.clone()));
        end = p.end;
        a.absorb(p.automaton);
        extras.extend(p.extras);
    }
    if !guard.is_empty() {
        let skip = format!("{name}.skip");
        guard_departures(&mut a.edges, &start, guard);
        a.add_node(Node::new(skip.clone(), NodeRole::Skip));
        add_skip_edges(&mut a.edges, &start, &skip, guard, name)?;
    }
    Ok(Fragment { automaton: a, end, extras })
}
