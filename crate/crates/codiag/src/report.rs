//! Text and JSON renderings of verdicts, traces and terminal rankings.

use std::collections::BTreeMap;
use std::fmt::Write;

use codiag_core::explorer::{RankedTerminal, State, Trace};
use codiag_core::nta::{compare_nodes, Ordering};
use codiag_core::{Explorer, Verdict};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct StateRecord {
    pub locations: BTreeMap<String, String>,
    /// Clock values; a capped clock is reported as its cap.
    pub clocks: BTreeMap<String, u32>,
    #[serde(rename = "V")]
    pub v: Vec<String>,
    #[serde(rename = "S")]
    pub s: Vec<String>,
    #[serde(rename = "P")]
    pub p: Vec<String>,
    pub done: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct TraceRecord {
    pub states: Vec<StateRecord>,
    pub steps: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_start: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct VerdictRecord {
    pub query: String,
    /// `satisfied`, `not satisfied` or `unknown`.
    pub outcome: &'static str,
    pub states_explored: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceRecord>,
}

pub fn state_record(ex: &Explorer<'_>, s: &State) -> StateRecord {
    let nta = ex.nta();
    let sets = ex.sets(s);
    StateRecord {
        locations: nta.automata.iter().enumerate().map(|(a, auto)| (auto.name.clone(), ex.location(s, a).to_string())).collect(),
        clocks: ex.clocks().iter().zip(&s.clocks).map(|(c, v)| (c.to_string(), *v)).collect(),
        v: sets.v.into_iter().collect(),
        s: sets.s.into_iter().collect(),
        p: sets.p.into_iter().collect(),
        done: s.done.ones().map(|i| ex.actions()[i].clone()).collect(),
    }
}

pub fn trace_record(ex: &Explorer<'_>, t: &Trace) -> TraceRecord {
    TraceRecord {
        states: t.states.iter().map(|s| state_record(ex, s)).collect(),
        steps: t.steps.iter().map(|s| ex.describe_step(s)).collect(),
        loop_start: t.loop_start,
    }
}

pub fn verdict_record(ex: &Explorer<'_>, query: &str, v: &Verdict) -> VerdictRecord {
    VerdictRecord {
        query: query.to_string(),
        outcome: if v.holds { "satisfied" } else { "not satisfied" },
        states_explored: v.states_explored,
        trace: v.trace.as_ref().map(|t| trace_record(ex, t)),
    }
}

/// Line-oriented trace: numbered states, each followed by the step taken.
pub fn trace_text(ex: &Explorer<'_>, t: &Trace) -> String {
    let mut out = String::new();
    for (i, s) in t.states.iter().enumerate() {
        let _ = writeln!(out, "  [{i}] {}", ex.describe(s));
        if let Some(step) = t.steps.get(i) {
            let _ = writeln!(out, "      {}", ex.describe_step(step));
        }
    }
    if let Some(start) = t.loop_start {
        let _ = writeln!(out, "  repeats from [{start}]");
    }
    out
}

pub fn ranking_text(ranked: &[RankedTerminal]) -> String {
    let mut out = String::new();
    for (i, r) in ranked.iter().enumerate() {
        let _ = writeln!(out, "#{i} level {} {} ({} state(s))", r.level, r.sets, r.states.len());
        if !r.better_than.is_empty() {
            let list: Vec<String> = r.better_than.iter().map(|j| format!("#{j}")).collect();
            let _ = writeln!(out, "    better than {}", list.join(", "));
        }
        for (kind, label) in [(Ordering::Equal, "as good as"), (Ordering::Incomparable, "incomparable with")] {
            let list: Vec<String> = (0..ranked.len())
                .filter(|&j| j != i && compare_nodes(&r.sets, &ranked[j].sets) == kind)
                .map(|j| format!("#{j}"))
                .collect();
            if !list.is_empty() {
                let _ = writeln!(out, "    {label} {}", list.join(", "));
            }
        }
    }
    out
}
