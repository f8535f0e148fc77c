//! Deontic norms over action automata, reparations, and the single final
//! node every norm automaton ends with.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CompileError, Fragment};
use crate::frontend::DeonticOp;
use crate::nta::{ClockGuard, Edge, EffectKind, Node, NodeRole};
use crate::temporal::{negate_guard, Clock, ClockInterval, Guard};

/// What the norm construction needs to know about the clause carrying it.
#[derive(Debug, Clone)]
pub struct NormContext<'a> {
    pub name: &'a str,
    pub agent: Option<&'a str>,
    pub guard: &'a Guard,
    /// One interval per clock, already intersected with the enclosing
    /// restrictions.
    pub windows: &'a [ClockInterval],
    /// Whether some restriction refers to this clause through `after(..)`.
    pub tracked: bool,
}

/// A norm automaton before finalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormAutomaton {
    pub kind: DeonticOp,
    pub name: String,
    /// `end` is the node reached by completing the action.
    pub fragment: Fragment,
    pub time: Option<String>,
    pub skip: Option<String>,
    /// Final node of an attached reparation.
    pub reparation_end: Option<String>,
}

/// Puts the norm `kind` over the action automaton `a`.
///
/// Action edges are restricted to the window and attributed to the agent.
/// Every bounded window adds a `x <= t2 + 1` invariant to each node but the
/// end and a timeout edge at `x == t2 + 1` into `<name>.time`. A guard adds
/// urgent edges into `<name>.skip`, one per conjunct of its negation, and is
/// conjoined onto the other edges leaving the initial node so that skipping
/// and acting never race. A tracked clock `t_<name>` is reset where the norm
/// is satisfied.
pub fn apply_deontic(kind: DeonticOp, a: Fragment, ctx: &NormContext<'_>) -> Result<NormAutomaton, CompileError> {
    let agent = ctx.agent.ok_or_else(|| CompileError::MissingAgent(ctx.name.to_string()))?;
    let Fragment { automaton: mut auto, end, extras } = a;
    let init = auto.initial.clone();
    let own_clock = Clock::After(ctx.name.to_string());
    let windows: Vec<&ClockInterval> = ctx.windows.iter().filter(|w| !w.is_trivial()).collect();

    let done_effect = match kind {
        DeonticOp::Obligation => EffectKind::AddSatisfaction,
        DeonticOp::Permission => EffectKind::AddPermission,
        DeonticOp::Prohibition => EffectKind::AddViolation,
    };
    for e in &mut auto.edges {
        if let Some(action) = &mut e.action {
            action.agent = Some(agent.to_string());
            e.clock_guards.extend(windows.iter().map(|w| ClockGuard::Within((*w).clone())));
        }
        if e.target == end {
            e.add_effect(done_effect, ctx.name);
            if ctx.tracked && kind != DeonticOp::Prohibition {
                e.resets.insert(own_clock.clone());
            }
        }
    }

    let bounded: Vec<(&Clock, u32)> = windows.iter().filter_map(|w| w.upper.map(|u| (&w.clock, u + 1))).collect();
    let time = if bounded.is_empty() {
        None
    } else {
        let time = format!("{}.time", ctx.name);
        let body: Vec<String> = auto.nodes.iter().map(|n| n.id.clone()).filter(|id| *id != end).collect();
        for id in &body {
            let node = auto.node_mut(id).expect("listed above");
            for (clock, limit) in &bounded {
                node.bound(clock, *limit);
            }
            for (clock, limit) in &bounded {
                let mut e = Edge::new(id.clone(), time.clone());
                e.clock_guards.push(ClockGuard::At((*clock).clone(), *limit));
                match kind {
                    DeonticOp::Obligation => e.add_effect(EffectKind::AddViolation, ctx.name),
                    DeonticOp::Prohibition => {
                        e.add_effect(EffectKind::AddSatisfaction, ctx.name);
                        if ctx.tracked {
                            e.resets.insert(own_clock.clone());
                        }
                    }
                    DeonticOp::Permission => {}
                }
                auto.add_edge(e);
            }
        }
        auto.add_node(Node::new(time.clone(), NodeRole::Time));
        Some(time)
    };

    let skip = if ctx.guard.is_empty() {
        None
    } else {
        let skip = format!("{}.skip", ctx.name);
        guard_departures(&mut auto.edges, &init, ctx.guard);
        auto.add_node(Node::new(skip.clone(), NodeRole::Skip));
        add_skip_edges(&mut auto.edges, &init, &skip, ctx.guard, ctx.name)?;
        Some(skip)
    };

    Ok(NormAutomaton {
        kind,
        name: ctx.name.to_string(),
        fragment: Fragment { automaton: auto, end, extras },
        time,
        skip,
        reparation_end: None,
    })
}

/// Conjoins `g` onto every edge leaving `from`.
pub(crate) fn guard_departures(edges: &mut [Edge], from: &str, g: &Guard) {
    for e in edges.iter_mut().filter(|e| e.source == from) {
        e.guard = e.guard.and(g);
    }
}

/// Urgent `from --¬g--> skip` edges, one per conjunct of `¬g`.
pub(crate) fn add_skip_edges(edges: &mut Vec<Edge>, from: &str, skip: &str, g: &Guard, clause: &str) -> Result<(), CompileError> {
    let negated = negate_guard(g).map_err(|source| CompileError::Restriction { clause: clause.to_string(), source })?;
    for h in negated {
        edges.push(Edge::urgent(from, skip).with_guard(h));
    }
    Ok(())
}

/// Grafts the reparation automaton `r` (already finalized) onto the node
/// where the norm is violated: its initial node is merged into that node,
/// and completing it removes the clause from the violation set.
pub fn attach_reparation(mut da: NormAutomaton, r: Fragment) -> Result<NormAutomaton, CompileError> {
    let vio = match da.kind {
        DeonticOp::Permission => return Err(CompileError::ReparationOnPermission(da.name.clone())),
        DeonticOp::Obligation => da.time.clone().ok_or_else(|| CompileError::UnreachableReparation(da.name.clone()))?,
        DeonticOp::Prohibition => da.fragment.end.clone(),
    };
    let Fragment { automaton: mut rep, end: rep_end, extras } = r;
    let r_init = rep.initial.clone();
    let pos = rep.nodes.iter().position(|n| n.id == r_init).expect("initial node exists");
    let r_init_node = rep.nodes.remove(pos);
    for e in &mut rep.edges {
        if e.source == r_init {
            e.source = vio.clone();
        }
        if e.target == r_init {
            e.target = vio.clone();
        }
        if e.target == rep_end {
            e.add_effect(EffectKind::ClearViolation, &da.name);
        }
    }
    let auto = &mut da.fragment.automaton;
    auto.node_mut(&vio).expect("violation node exists").invariant = r_init_node.invariant;
    auto.absorb(rep);
    da.fragment.extras.extend(extras);
    da.reparation_end = Some(rep_end);
    Ok(da)
}

/// Adds `<name>.final` with urgent edges from every node where the norm is
/// settled. Unrepaired violations stay terminal.
pub fn finalize(da: NormAutomaton) -> Fragment {
    let NormAutomaton { kind, name, fragment, time, skip, reparation_end } = da;
    let Fragment { automaton: mut auto, end, extras } = fragment;
    let fin = format!("{name}.final");
    auto.add_node(Node::new(fin.clone(), NodeRole::Final));
    let sources: Vec<Option<String>> = match kind {
        DeonticOp::Obligation => alloc::vec![Some(end), reparation_end],
        DeonticOp::Permission => alloc::vec![Some(end), time],
        DeonticOp::Prohibition => alloc::vec![time, reparation_end],
    };
    for s in skip.into_iter().chain(sources.into_iter().flatten()) {
        auto.add_edge(Edge::urgent(s, fin.clone()));
    }
    Fragment { automaton: auto, end: fin, extras }
}
