//! Networks of timed automata extended with violation, satisfaction and
//! permission tracking.

mod sets;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::DeonticOp;
use crate::temporal::{Clock, ClockInterval, ClockTable, Guard};

pub use sets::{apply_effects, compare_edges, compare_nodes, EffectKind, Ordering, SetEffect, StateSets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeRole {
    Init,
    End,
    Time,
    Skip,
    Syn,
    Final,
    Plain,
}

/// `clock <= bound`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClockBound {
    pub clock: Clock,
    pub bound: u32,
}

impl fmt::Display for ClockBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.clock, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub role: NodeRole,
    /// Conjunction of upper bounds that must hold while time passes here.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant: Vec<ClockBound>,
    /// Display annotation: clauses added to the sets by the edges entering
    /// this node.
    #[serde(default, skip_serializing_if = "StateSets::is_empty")]
    pub annot: StateSets,
    /// Symbolic description of run-dependent sets (composition finals).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, role: NodeRole) -> Self {
        Node { id: id.into(), role, invariant: Vec::new(), annot: StateSets::default(), summary: None }
    }

    /// Adds `clock <= bound`, keeping only the tightest bound per clock.
    pub fn bound(&mut self, clock: &Clock, bound: u32) {
        match self.invariant.iter_mut().find(|b| b.clock == *clock) {
            Some(b) => b.bound = b.bound.min(bound),
            None => self.invariant.push(ClockBound { clock: clock.clone(), bound }),
        }
    }
}

/// Clock part of an edge guard.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClockGuard {
    Within(ClockInterval),
    /// `clock == value`: the timeout point of a window.
    At(Clock, u32),
}

impl ClockGuard {
    pub fn clock(&self) -> &Clock {
        match self {
            ClockGuard::Within(i) => &i.clock,
            ClockGuard::At(c, _) => c,
        }
    }

    pub fn holds(&self, value: u32) -> bool {
        match self {
            ClockGuard::Within(i) => i.contains(value),
            ClockGuard::At(_, n) => value == *n,
        }
    }

    /// Largest constant compared against.
    pub fn max_constant(&self) -> u32 {
        match self {
            ClockGuard::Within(i) => i.upper.unwrap_or(i.lower),
            ClockGuard::At(_, n) => *n,
        }
    }
}

impl fmt::Display for ClockGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockGuard::Within(i) => write!(f, "{i}"),
            ClockGuard::At(c, n) => write!(f, "{c} == {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
}

impl Action {
    /// `agent.action`, or the bare action name.
    pub fn label(&self) -> String {
        match &self.agent {
            Some(agent) => alloc::format!("{agent}.{}", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SyncDir {
    Send,
    Receive,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sync {
    pub channel: String,
    pub dir: SyncDir,
}

impl fmt::Display for Sync {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.dir {
            SyncDir::Send => '!',
            SyncDir::Receive => '?',
        };
        write!(f, "{}{mark}", self.channel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Guard::is_empty")]
    pub guard: Guard,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clock_guards: Vec<ClockGuard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync: Option<Sync>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub resets: BTreeSet<Clock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<SetEffect>,
    #[serde(default)]
    pub urgent: bool,
}

impl Edge {
    /// Plain, non-urgent edge without labels.
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Edge {
            source: source.into(),
            target: target.into(),
            guard: Guard::default(),
            clock_guards: Vec::new(),
            action: None,
            sync: None,
            resets: BTreeSet::new(),
            effects: Vec::new(),
            urgent: false,
        }
    }

    pub fn urgent(source: impl Into<String>, target: impl Into<String>) -> Self {
        Edge { urgent: true, ..Edge::new(source, target) }
    }

    pub fn with_action(mut self, name: impl Into<String>) -> Self {
        self.action = Some(Action { name: name.into(), agent: None });
        self
    }

    pub fn with_sync(mut self, channel: impl Into<String>, dir: SyncDir) -> Self {
        self.sync = Some(Sync { channel: channel.into(), dir });
        self
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guard = self.guard.and(&guard);
        self
    }

    pub fn add_effect(&mut self, kind: EffectKind, clause: &str) {
        let effect = SetEffect::new(kind, clause);
        if !self.effects.contains(&effect) {
            self.effects.push(effect);
        }
    }

    /// Short human-readable label (guards, sync, action, updates).
    pub fn label(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if !self.guard.is_empty() {
            parts.push(alloc::format!("{}", self.guard));
        }
        for g in &self.clock_guards {
            parts.push(alloc::format!("{g}"));
        }
        if let Some(s) = &self.sync {
            parts.push(alloc::format!("{s}"));
        }
        if let Some(a) = &self.action {
            parts.push(a.label());
        }
        for c in &self.resets {
            parts.push(alloc::format!("{c} := 0"));
        }
        for e in &self.effects {
            parts.push(alloc::format!("{e}"));
        }
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Automaton {
    pub name: String,
    pub initial: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Automaton {
    pub fn new(name: impl Into<String>, initial: Node) -> Self {
        let id = initial.id.clone();
        Automaton { name: name.into(), initial: id, nodes: alloc::vec![initial], edges: Vec::new() }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn add_node(&mut self, node: Node) {
        self.nodes.push(node);
    }

    pub fn add_edge(&mut self, edge: Edge) {
        self.edges.push(edge);
    }

    pub fn edges_from<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == id)
    }

    pub fn edges_into<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.target == id)
    }

    /// Moves all nodes and edges of `other` into `self`.
    pub fn absorb(&mut self, other: Automaton) {
        self.nodes.extend(other.nodes);
        self.edges.extend(other.edges);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub urgent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseEntry {
    pub name: String,
    pub kind: DeonticOp,
}

/// A network of automata running in parallel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nta {
    pub name: String,
    pub automata: Vec<Automaton>,
    #[serde(default)]
    pub channels: Vec<Channel>,
    pub clocks: ClockTable,
    #[serde(default)]
    pub variables: BTreeMap<String, i64>,
    /// Every deontic clause, in pre-order of the contract.
    #[serde(default)]
    pub clauses: Vec<ClauseEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NtaError {
    #[error("automaton `{automaton}` has no node `{node}`")]
    MissingNode { automaton: String, node: String },
    #[error("node `{node}` appears twice in automaton `{automaton}`")]
    DuplicateNode { automaton: String, node: String },
    #[error("two automata are named `{0}`")]
    DuplicateAutomaton(String),
    #[error("edge {source_node} -> {target} of `{automaton}` has both an action and a synchronization")]
    ActionAndSync { automaton: String, source_node: String, target: String },
    #[error("urgent edge {source_node} -> {target} of `{automaton}` has a clock guard")]
    UrgentClockGuard { automaton: String, source_node: String, target: String },
    #[error("channel `{0}` is not declared")]
    UndeclaredChannel(String),
    #[error("channel `{0}` needs senders in exactly one automaton and receivers in exactly one other")]
    UnpairedChannel(String),
    #[error("clock `{0}` is not in the clock table")]
    UnknownClock(Clock),
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
    #[error("clause `{0}` is used by an effect but missing from the clause index")]
    UnindexedClause(String),
}

impl Nta {
    pub fn automaton(&self, name: &str) -> Option<&Automaton> {
        self.automata.iter().find(|a| a.name == name)
    }

    pub fn clause_kind(&self, name: &str) -> Option<DeonticOp> {
        self.clauses.iter().find(|c| c.name == name).map(|c| c.kind)
    }

    /// Checks the structural invariants every compiled network satisfies.
    pub fn check_well_formed(&self) -> Result<(), NtaError> {
        let mut automaton_names = BTreeSet::new();
        let mut senders: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        let mut receivers: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        let channels: BTreeSet<&str> = self.channels.iter().map(|c| c.name.as_str()).collect();
        let clauses: BTreeSet<&str> = self.clauses.iter().map(|c| c.name.as_str()).collect();
        let known_clock = |c: &Clock| if self.clocks.entries.contains(c) { Ok(()) } else { Err(NtaError::UnknownClock(c.clone())) };

        for (i, a) in self.automata.iter().enumerate() {
            if !automaton_names.insert(a.name.as_str()) {
                return Err(NtaError::DuplicateAutomaton(a.name.clone()));
            }
            let mut ids = BTreeSet::new();
            for n in &a.nodes {
                if !ids.insert(n.id.as_str()) {
                    return Err(NtaError::DuplicateNode { automaton: a.name.clone(), node: n.id.clone() });
                }
                for b in &n.invariant {
                    known_clock(&b.clock)?;
                }
            }
            let missing = |node: &str| NtaError::MissingNode { automaton: a.name.clone(), node: node.into() };
            if !ids.contains(a.initial.as_str()) {
                return Err(missing(&a.initial));
            }
            for e in &a.edges {
                for end in [&e.source, &e.target] {
                    if !ids.contains(end.as_str()) {
                        return Err(missing(end));
                    }
                }
                let (source_node, target) = (e.source.clone(), e.target.clone());
                if e.action.is_some() && e.sync.is_some() {
                    return Err(NtaError::ActionAndSync { automaton: a.name.clone(), source_node, target });
                }
                if e.urgent && !e.clock_guards.is_empty() {
                    return Err(NtaError::UrgentClockGuard { automaton: a.name.clone(), source_node, target });
                }
                for g in &e.clock_guards {
                    known_clock(g.clock())?;
                }
                for c in &e.resets {
                    known_clock(c)?;
                }
                for v in e.guard.variables() {
                    if !self.variables.contains_key(v) {
                        return Err(NtaError::UnknownVariable(v.into()));
                    }
                }
                for eff in &e.effects {
                    if !clauses.contains(eff.clause.as_str()) {
                        return Err(NtaError::UnindexedClause(eff.clause.clone()));
                    }
                }
                if let Some(s) = &e.sync {
                    if !channels.contains(s.channel.as_str()) {
                        return Err(NtaError::UndeclaredChannel(s.channel.clone()));
                    }
                    let side = match s.dir {
                        SyncDir::Send => &mut senders,
                        SyncDir::Receive => &mut receivers,
                    };
                    side.entry(s.channel.as_str()).or_default().insert(i);
                }
            }
        }
        for ch in &self.channels {
            let s = senders.get(ch.name.as_str());
            let r = receivers.get(ch.name.as_str());
            match (s, r) {
                (Some(s), Some(r)) if s.len() == 1 && r.len() == 1 && s != r => {}
                _ => return Err(NtaError::UnpairedChannel(ch.name.clone())),
            }
        }
        Ok(())
    }

    /// Largest constant any clock is compared with.
    pub fn clock_ceiling(&self) -> u32 {
        let mut ceiling = 0;
        for a in &self.automata {
            for n in &a.nodes {
                for b in &n.invariant {
                    ceiling = ceiling.max(b.bound);
                }
            }
            for e in &a.edges {
                for g in &e.clock_guards {
                    ceiling = ceiling.max(g.max_constant());
                }
            }
        }
        ceiling
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_party() -> Nta {
        let mut a = Automaton::new("A1", Node::new("x.init", NodeRole::Init));
        a.add_node(Node::new("x.end", NodeRole::End));
        a.add_edge(Edge::new("x.init", "x.end").with_sync("m_1", SyncDir::Send));
        let mut b = Automaton::new("A2", Node::new("y.init", NodeRole::Init));
        b.add_node(Node::new("y.end", NodeRole::End));
        b.add_edge(Edge::new("y.init", "y.end").with_sync("m_1", SyncDir::Receive));
        Nta {
            name: "t".into(),
            automata: vec![a, b],
            channels: vec![Channel { name: "m_1".into(), urgent: true }],
            clocks: ClockTable::default(),
            variables: BTreeMap::new(),
            clauses: Vec::new(),
        }
    }

    #[test]
    fn paired_channel_is_well_formed() {
        assert_eq!(two_party().check_well_formed(), Ok(()));
    }

    #[test]
    fn detects_structural_errors() {
        let mut n = two_party();
        n.automata[1].edges[0].sync.as_mut().unwrap().dir = SyncDir::Send;
        assert_eq!(n.check_well_formed(), Err(NtaError::UnpairedChannel("m_1".into())));

        let mut n = two_party();
        n.automata[0].edges[0].target = "nowhere".into();
        assert!(matches!(n.check_well_formed(), Err(NtaError::MissingNode { .. })));

        let mut n = two_party();
        n.automata[0].edges[0].action = Some(Action { name: "a".into(), agent: None });
        assert!(matches!(n.check_well_formed(), Err(NtaError::ActionAndSync { .. })));

        let mut n = two_party();
        n.automata[0].edges[0].effects.push(SetEffect::new(EffectKind::AddViolation, "ghost"));
        assert_eq!(n.check_well_formed(), Err(NtaError::UnindexedClause("ghost".into())));

        let mut n = two_party();
        n.automata[0].nodes.push(Node::new("x.end", NodeRole::Plain));
        assert!(matches!(n.check_well_formed(), Err(NtaError::DuplicateNode { .. })));
    }

    #[test]
    fn ceiling_and_tightest_invariant() {
        let mut n = two_party();
        let node = n.automata[0].node_mut("x.init").unwrap();
        node.bound(&Clock::Global, 7);
        node.bound(&Clock::Global, 4);
        assert_eq!(node.invariant, vec![ClockBound { clock: Clock::Global, bound: 4 }]);
        n.automata[1].edges[0].clock_guards.push(ClockGuard::At(Clock::Global, 9));
        assert_eq!(n.clock_ceiling(), 9);
    }
}
