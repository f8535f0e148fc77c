//! Translation of validated contracts into networks of timed automata.
//!
//! Node ids follow `<clause>.<role>`: `init`, `end`, `time`, `skip`,
//! `final`, `p<k>` for product states and `syn<k>.{in,out,relay,join}` for
//! the barrier states of parallel compositions. Automata are named `A1`,
//! `A2`, ... with the automaton holding the root first.

pub mod actions;
pub mod compose;
pub mod deontic;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::frontend::{validate, Body, Clause, Contract, RefineKind, ValidationReport};
use crate::nta::{Automaton, ClauseEntry, EffectKind, Nta, NtaError};
use crate::temporal::{normalize_restriction, Clock, ClockInterval, ClockTable, TemporalError};

pub use actions::{action_traces, alt_or, compile_actions, compile_atomic, product_and, seq_chain};
pub use compose::{compose_and_norms, compose_or_norms, compose_seq_norms, Channels};
pub use deontic::{apply_deontic, attach_reparation, finalize, NormAutomaton, NormContext};

/// A partially built network: the automaton holding the fragment's initial
/// node plus any helper automata created by parallel compositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    /// `automaton.initial` is the fragment's entry node.
    pub automaton: Automaton,
    /// Exit node, inside `automaton`.
    pub end: String,
    pub extras: Vec<Automaton>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("contract is not well formed ({} finding(s))", .0.findings.len())]
    Invalid(ValidationReport),
    #[error("clause `{clause}`: {source}")]
    Restriction { clause: String, source: TemporalError },
    #[error("clause `{0}`: time window is empty once enclosing restrictions are applied")]
    InvalidInterval(String),
    #[error("clause `{0}` carries a deontic norm but no agent")]
    MissingAgent(String),
    #[error("clause `{0}` is a permission and cannot carry a reparation")]
    ReparationOnPermission(String),
    #[error("clause `{0}` is an obligation without deadline, so its reparation can never start")]
    UnreachableReparation(String),
    #[error("compiled network is malformed: {0}")]
    Malformed(NtaError),
}

/// Compiles a well-formed contract.
pub fn compile(c: &Contract) -> Result<Nta, CompileError> {
    let report = validate(c);
    if !report.is_clean() {
        return Err(CompileError::Invalid(report));
    }
    let mut clocks = ClockTable::default();
    c.root.walk(&mut |b| {
        for name in b.restriction.referenced_clauses() {
            clocks.track(name);
        }
    });
    let mut cx = Compiler { clocks, channels: Channels::default() };
    let root = cx.clause(&c.root, &[])?;

    let mut automata = Vec::with_capacity(1 + root.extras.len());
    automata.push(root.automaton);
    automata.extend(root.extras);
    for (i, a) in automata.iter_mut().enumerate() {
        a.name = format!("A{}", i + 1);
        annotate(a);
    }
    let mut clauses = Vec::new();
    c.root.walk(&mut |b| {
        if let Some(kind) = b.deontic() {
            clauses.push(ClauseEntry { name: b.name.clone(), kind });
        }
    });
    let nta = Nta {
        name: c.name.clone(),
        automata,
        channels: cx.channels.declared,
        clocks: cx.clocks,
        variables: c.vars.iter().map(|v| (v.name.clone(), i64::from(v.init))).collect(),
        clauses,
    };
    nta.check_well_formed().map_err(CompileError::Malformed)?;
    Ok(nta)
}

struct Compiler {
    clocks: ClockTable,
    channels: Channels,
}

impl Compiler {
    /// Compiles a box above (or carrying) a deontic norm. `inherited` holds
    /// the windows imposed by enclosing refinements.
    fn clause(&mut self, b: &Clause, inherited: &[ClockInterval]) -> Result<Fragment, CompileError> {
        let windows = self.windows(b, inherited)?;
        match &b.body {
            Body::Deontic(kind, acts) => {
                let actions = compile_actions(&b.name, acts);
                let ctx = NormContext {
                    name: &b.name,
                    agent: b.agent.as_deref(),
                    guard: &b.guard,
                    windows: &windows,
                    tracked: self.clocks.tracks(&b.name),
                };
                let mut norm = apply_deontic(*kind, actions, &ctx)?;
                if let Some(rep) = &b.reparation {
                    let r = self.clause(rep, &[])?;
                    norm = attach_reparation(norm, r)?;
                }
                Ok(finalize(norm))
            }
            Body::Refinement(kind, children) => {
                let mut parts = Vec::with_capacity(children.len());
                for child in children {
                    parts.push(self.clause(child, &windows)?);
                }
                let mut f = match kind {
                    RefineKind::And => {
                        let labelled = children.iter().map(|c| c.name.clone()).zip(parts).collect();
                        compose_and_norms(&b.name, &b.guard, labelled, &mut self.channels)?
                    }
                    RefineKind::Or => compose_or_norms(&b.name, &b.guard, parts)?,
                    RefineKind::Seq => compose_seq_norms(&b.name, &b.guard, parts)?,
                };
                if self.clocks.tracks(&b.name) {
                    let own = Clock::After(b.name.clone());
                    let end = f.end.clone();
                    for e in f.automaton.edges.iter_mut().filter(|e| e.target == end) {
                        e.resets.insert(own.clone());
                    }
                }
                Ok(f)
            }
            Body::Action(_) => unreachable!("validation rejects actions outside a norm"),
        }
    }

    /// Own restriction of `b` combined with the inherited windows: same-clock
    /// intervals intersect, other clocks add a window of their own.
    fn windows(&self, b: &Clause, inherited: &[ClockInterval]) -> Result<Vec<ClockInterval>, CompileError> {
        let mut out = inherited.to_vec();
        if b.restriction.is_empty() {
            return Ok(out);
        }
        let own = normalize_restriction(&b.restriction)
            .map_err(|source| CompileError::Restriction { clause: b.name.clone(), source })?;
        match out.iter_mut().find(|w| w.clock == own.clock) {
            Some(w) => *w = w.intersect(&own).ok_or_else(|| CompileError::InvalidInterval(b.name.clone()))?,
            None => out.push(own),
        }
        Ok(out)
    }
}

/// Fills each node's display sets with the clauses added by the edges that
/// enter it.
fn annotate(a: &mut Automaton) {
    let mut marks: Vec<(String, EffectKind, String)> = Vec::new();
    for e in &a.edges {
        for eff in &e.effects {
            marks.push((e.target.clone(), eff.kind, eff.clause.clone()));
        }
    }
    for (target, kind, clause) in marks {
        let node = a.node_mut(&target).expect("edge endpoints exist");
        let set: &mut BTreeSet<String> = match kind {
            EffectKind::AddViolation => &mut node.annot.v,
            EffectKind::AddSatisfaction => &mut node.annot.s,
            EffectKind::AddPermission => &mut node.annot.p,
            EffectKind::ClearViolation => continue,
        };
        set.insert(clause.to_string());
    }
}
