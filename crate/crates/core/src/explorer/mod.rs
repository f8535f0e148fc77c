//! Discrete-time exploration of a network and query checking.
//!
//! Time advances in unit steps. A clock never grows past `ceiling + 1`,
//! where the ceiling is the largest constant it is compared with (in the
//! network or in the query), so the state space is finite. Time cannot pass
//! while an urgent edge or a handshake on an urgent channel is enabled, or
//! when passing it would break an invariant.

mod check;
mod query;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::nta::{ClockGuard, EffectKind, Nta, StateSets, SyncDir};
use crate::temporal::Clock;

pub use check::{check, CheckError, RankedTerminal, ReplayError, Trace, Verdict};
pub use query::{parse_query, sanitize, Expr, Query, QueryError, SetKind};

/// Fixed-size bit set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits(alloc::vec![0; len.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.0[i / 64] |= mask;
        } else {
            self.0[i / 64] &= !mask;
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, bits)| (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b))
    }
}

/// A point of the discrete state space. Indices refer to the explorer's
/// tables: nodes per automaton, clocks, clauses and agent actions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State {
    pub locs: Vec<u32>,
    pub clocks: Vec<u32>,
    pub v: Bits,
    pub s: Bits,
    pub p: Bits,
    /// Agent actions performed so far.
    pub done: Bits,
}

/// How one state leads to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Step {
    Delay,
    Edge { automaton: u32, edge: u32 },
    Sync { sender: u32, send_edge: u32, receiver: u32, receive_edge: u32 },
}

#[derive(Debug, Clone)]
struct EdgeModel {
    target: u32,
    /// Variables never change, so the data guard is decided once.
    guard_holds: bool,
    clock_guards: Vec<(usize, ClockGuard)>,
    sync: Option<(usize, SyncDir)>,
    resets: Vec<usize>,
    effects: Vec<(EffectKind, usize)>,
    done: Option<usize>,
    urgent: bool,
}

#[derive(Debug, Clone)]
struct AutomatonModel {
    invariants: Vec<Vec<(usize, u32)>>,
    initial: u32,
    edges: Vec<EdgeModel>,
    outgoing: Vec<Vec<u32>>,
}

/// Indexed view of a network, ready for exploration.
#[derive(Debug, Clone)]
pub struct Explorer<'a> {
    nta: &'a Nta,
    autos: Vec<AutomatonModel>,
    clocks: Vec<Clock>,
    clauses: Vec<String>,
    actions: Vec<String>,
    channel_urgent: Vec<bool>,
    cap: u32,
}

/// Reachable part of the state space.
#[derive(Debug, Clone, Default)]
pub struct StateGraph {
    pub states: Vec<State>,
    /// Distinct successors of each expanded state, in generation order.
    pub successors: Vec<Vec<(Step, u32)>>,
    /// BFS tree: how each state was first reached.
    pub parent: Vec<Option<(u32, Step)>>,
    /// Number of leading states whose successors were computed.
    pub expanded: usize,
    /// The state budget stopped the search early.
    pub truncated: bool,
}

impl StateGraph {
    /// A state whose only possible future is itself: every successor is a
    /// self loop (or there is none).
    pub fn is_terminal(&self, i: usize) -> bool {
        i < self.expanded && self.successors[i].iter().all(|(_, t)| *t as usize == i)
    }

    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.expanded).filter(|&i| self.is_terminal(i))
    }

    /// Steps from the initial state to state `i` along the BFS tree.
    pub fn path_to(&self, i: usize) -> (Vec<u32>, Vec<Step>) {
        let mut states = alloc::vec![i as u32];
        let mut steps = Vec::new();
        let mut cur = i;
        while let Some((p, step)) = self.parent[cur] {
            states.push(p);
            steps.push(step);
            cur = p as usize;
        }
        states.reverse();
        steps.reverse();
        (states, steps)
    }
}

impl<'a> Explorer<'a> {
    pub fn new(nta: &'a Nta) -> Self {
        let clocks: Vec<Clock> = nta.clocks.iter().cloned().collect();
        let clauses: Vec<String> = nta.clauses.iter().map(|c| c.name.clone()).collect();
        let clock_idx = |c: &Clock| clocks.iter().position(|x| x == c).expect("well-formed network");
        let clause_idx = |c: &str| clauses.iter().position(|x| x == c).expect("well-formed network");
        let channel_idx: BTreeMap<&str, usize> = nta.channels.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
        let mut actions: Vec<String> = Vec::new();
        let mut autos = Vec::with_capacity(nta.automata.len());
        for a in &nta.automata {
            let node_idx: BTreeMap<&str, u32> = a.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i as u32)).collect();
            let invariants = a.nodes.iter().map(|n| n.invariant.iter().map(|b| (clock_idx(&b.clock), b.bound)).collect()).collect();
            let mut outgoing = alloc::vec![Vec::new(); a.nodes.len()];
            let mut edges = Vec::with_capacity(a.edges.len());
            for (k, e) in a.edges.iter().enumerate() {
                let source = node_idx[e.source.as_str()];
                outgoing[source as usize].push(k as u32);
                let done = e.action.as_ref().map(|act| {
                    let label = act.label();
                    match actions.iter().position(|x| *x == label) {
                        Some(i) => i,
                        None => {
                            actions.push(label);
                            actions.len() - 1
                        }
                    }
                });
                let guard_holds = e.guard.eval_with(|v| nta.variables.get(v).copied()).unwrap_or(false);
                edges.push(EdgeModel {
                    target: node_idx[e.target.as_str()],
                    guard_holds,
                    clock_guards: e.clock_guards.iter().map(|g| (clock_idx(g.clock()), g.clone())).collect(),
                    sync: e.sync.as_ref().map(|s| (channel_idx[s.channel.as_str()], s.dir)),
                    resets: e.resets.iter().map(clock_idx).collect(),
                    effects: e.effects.iter().map(|x| (x.kind, clause_idx(&x.clause))).collect(),
                    done,
                    urgent: e.urgent,
                });
            }
            let initial = node_idx[a.initial.as_str()];
            autos.push(AutomatonModel { invariants, initial, edges, outgoing });
        }
        Explorer {
            nta,
            autos,
            clocks,
            clauses,
            actions,
            channel_urgent: nta.channels.iter().map(|c| c.urgent).collect(),
            cap: nta.clock_ceiling() + 1,
        }
    }

    /// Raises the clock ceiling, e.g. to cover the constants of a query.
    pub fn with_ceiling(mut self, ceiling: u32) -> Self {
        self.cap = self.cap.max(ceiling + 1);
        self
    }

    pub fn nta(&self) -> &'a Nta {
        self.nta
    }

    /// Value at which clocks stop growing.
    pub fn clock_cap(&self) -> u32 {
        self.cap
    }

    pub fn clocks(&self) -> &[Clock] {
        &self.clocks
    }

    pub fn clauses(&self) -> &[String] {
        &self.clauses
    }

    /// `agent.action` labels, indexed as in [`State::done`].
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn initial_state(&self) -> State {
        State {
            locs: self.autos.iter().map(|a| a.initial).collect(),
            clocks: alloc::vec![0; self.clocks.len()],
            v: Bits::new(self.clauses.len()),
            s: Bits::new(self.clauses.len()),
            p: Bits::new(self.clauses.len()),
            done: Bits::new(self.actions.len()),
        }
    }

    /// Node id of automaton `a` in state `s`.
    pub fn location(&self, s: &State, a: usize) -> &'a str {
        &self.nta.automata[a].nodes[s.locs[a] as usize].id
    }

    pub fn sets(&self, s: &State) -> StateSets {
        let names = |b: &Bits| b.ones().map(|i| self.clauses[i].clone()).collect();
        StateSets { v: names(&s.v), s: names(&s.s), p: names(&s.p) }
    }

    fn guard_ok(&self, e: &EdgeModel, s: &State) -> bool {
        e.guard_holds && e.clock_guards.iter().all(|(c, g)| g.holds(s.clocks[*c]))
    }

    fn invariant_ok(&self, a: usize, s: &State) -> bool {
        self.autos[a].invariants[s.locs[a] as usize].iter().all(|(c, n)| s.clocks[*c] <= *n)
    }

    fn fire(&self, s: &mut State, a: usize, e: &EdgeModel) {
        s.locs[a] = e.target;
        for &c in &e.resets {
            s.clocks[c] = 0;
        }
        for &(kind, i) in &e.effects {
            match kind {
                EffectKind::AddViolation => s.v.set(i, true),
                EffectKind::AddSatisfaction => s.s.set(i, true),
                EffectKind::AddPermission => s.p.set(i, true),
                EffectKind::ClearViolation => s.v.set(i, false),
            }
        }
        if let Some(d) = e.done {
            s.done.set(d, true);
        }
    }

    /// Every step possible from `s`, in a fixed order: internal edges by
    /// automaton and edge index, then handshakes, then delay.
    pub fn successors(&self, s: &State) -> Vec<(Step, State)> {
        let mut out = Vec::new();
        let mut urgent = false;
        for (a, auto) in self.autos.iter().enumerate() {
            for &k in &auto.outgoing[s.locs[a] as usize] {
                let e = &auto.edges[k as usize];
                if e.sync.is_some() || !self.guard_ok(e, s) {
                    continue;
                }
                let mut next = s.clone();
                self.fire(&mut next, a, e);
                if self.invariant_ok(a, &next) {
                    urgent |= e.urgent;
                    out.push((Step::Edge { automaton: a as u32, edge: k }, next));
                }
            }
        }
        for (a, auto) in self.autos.iter().enumerate() {
            for &k in &auto.outgoing[s.locs[a] as usize] {
                let e = &auto.edges[k as usize];
                let Some((ch, SyncDir::Send)) = e.sync else { continue };
                if !self.guard_ok(e, s) {
                    continue;
                }
                for (b, other) in self.autos.iter().enumerate() {
                    if b == a {
                        continue;
                    }
                    for &j in &other.outgoing[s.locs[b] as usize] {
                        let f = &other.edges[j as usize];
                        if f.sync != Some((ch, SyncDir::Receive)) || !self.guard_ok(f, s) {
                            continue;
                        }
                        let mut next = s.clone();
                        self.fire(&mut next, a, e);
                        self.fire(&mut next, b, f);
                        if self.invariant_ok(a, &next) && self.invariant_ok(b, &next) {
                            urgent |= self.channel_urgent[ch] || e.urgent || f.urgent;
                            let step = Step::Sync { sender: a as u32, send_edge: k, receiver: b as u32, receive_edge: j };
                            out.push((step, next));
                        }
                    }
                }
            }
        }
        if !urgent {
            let mut next = s.clone();
            for c in &mut next.clocks {
                *c = (*c + 1).min(self.cap);
            }
            if (0..self.autos.len()).all(|a| self.invariant_ok(a, &next)) {
                out.push((Step::Delay, next));
            }
        }
        out
    }

    /// Successors of each state of `frontier`, in order.
    pub fn expand(&self, frontier: &[State]) -> Vec<Vec<(Step, State)>> {
        frontier.iter().map(|s| self.successors(s)).collect()
    }

    /// Breadth-first exploration of at most `budget` states.
    pub fn explore(&self, budget: usize) -> StateGraph {
        self.explore_with(budget, |frontier| self.expand(frontier))
    }

    /// [`Explorer::explore`] with a caller-supplied frontier expander, which
    /// must return the same lists as [`Explorer::expand`]. The graph does not
    /// depend on how the expander splits its work.
    pub fn explore_with<F>(&self, budget: usize, mut expand: F) -> StateGraph
    where
        F: FnMut(&[State]) -> Vec<Vec<(Step, State)>>,
    {
        let budget = budget.max(1);
        let mut g = StateGraph::default();
        let mut index: BTreeMap<State, u32> = BTreeMap::new();
        let init = self.initial_state();
        index.insert(init.clone(), 0);
        g.states.push(init);
        g.parent.push(None);
        let mut level = 0..1usize;
        while !level.is_empty() {
            let expanded = expand(&g.states[level.clone()]);
            let next_start = g.states.len();
            for (offset, succs) in expanded.into_iter().enumerate() {
                let from = (level.start + offset) as u32;
                let mut list: Vec<(Step, u32)> = Vec::with_capacity(succs.len());
                for (step, state) in succs {
                    let id = match index.get(&state) {
                        Some(&id) => id,
                        None => {
                            if g.states.len() >= budget {
                                g.truncated = true;
                                continue;
                            }
                            let id = g.states.len() as u32;
                            index.insert(state.clone(), id);
                            g.states.push(state);
                            g.parent.push(Some((from, step)));
                            id
                        }
                    };
                    if !list.iter().any(|(_, t)| *t == id) {
                        list.push((step, id));
                    }
                }
                g.successors.push(list);
            }
            g.expanded = level.end;
            if g.truncated {
                break;
            }
            level = next_start..g.states.len();
        }
        g
    }

    /// One-line description of a state.
    pub fn describe(&self, s: &State) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (a, auto) in self.nta.automata.iter().enumerate() {
            parts.push(format!("{}={}", auto.name, self.location(s, a)));
        }
        for (c, clock) in self.clocks.iter().enumerate() {
            let v = s.clocks[c];
            if v >= self.cap {
                parts.push(format!("{clock}>{}", self.cap - 1));
            } else {
                parts.push(format!("{clock}={v}"));
            }
        }
        parts.push(format!("{}", self.sets(s)));
        parts.join(" ")
    }

    /// Human-readable step label.
    pub fn describe_step(&self, step: &Step) -> String {
        let edge = |a: u32, k: u32| {
            let auto = &self.nta.automata[a as usize];
            let e = &auto.edges[k as usize];
            let label = e.label();
            if label.is_empty() {
                format!("{}: {} -> {}", auto.name, e.source, e.target)
            } else {
                format!("{}: {} -> {} [{label}]", auto.name, e.source, e.target)
            }
        };
        match *step {
            Step::Delay => String::from("delay 1"),
            Step::Edge { automaton, edge: k } => edge(automaton, k),
            Step::Sync { sender, send_edge, receiver, receive_edge } => {
                format!("{} & {}", edge(sender, send_edge), edge(receiver, receive_edge))
            }
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Delay => f.write_str("delay"),
            Step::Edge { automaton, edge } => write!(f, "edge {automaton}:{edge}"),
            Step::Sync { sender, send_edge, receiver, receive_edge } => {
                write!(f, "sync {sender}:{send_edge} {receiver}:{receive_edge}")
            }
        }
    }
}

#[cfg(test)]
mod tests;
