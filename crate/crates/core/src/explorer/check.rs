//! Query verdicts over an explored state graph.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use super::query::Resolved;
use super::{Explorer, Query, QueryError, State, StateGraph, Step};
use crate::nta::{compare_nodes, Nta, Ordering, StateSets};

/// Run from the initial state. With `loop_start`, the last state equals
/// `states[loop_start]` and the run repeats from there forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub states: Vec<State>,
    pub steps: Vec<Step>,
    pub loop_start: Option<usize>,
}

impl Trace {
    pub fn last(&self) -> &State {
        self.states.last().expect("a trace has at least one state")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// Witness of `E<>`, counterexample of `A[]` and `-->`.
    pub trace: Option<Trace>,
    pub states_explored: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("query: {0}")]
    Query(#[from] QueryError),
    #[error("unresolved name: {0}")]
    UnresolvedName(String),
    #[error("state budget exhausted after {states} states without a verdict")]
    BudgetExceeded { states: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("trace is empty or has mismatched steps")]
    Shape,
    #[error("trace does not start in the initial state")]
    Start,
    #[error("step {index} does not lead to the recorded state")]
    Step { index: usize },
    #[error("loop start does not match the last state")]
    Loop,
}

/// A class of terminal states sharing the same sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedTerminal {
    pub sets: StateSets,
    /// Indices into the graph's states.
    pub states: Vec<u32>,
    /// 0 for classes no other class is better than, and so on down.
    pub level: usize,
    /// Classes (positions in the ranking) this one is better than.
    pub better_than: Vec<usize>,
}

/// Explores `nta` far enough to decide `query`.
pub fn check(nta: &Nta, query: &Query, budget: usize) -> Result<Verdict, CheckError> {
    let ex = Explorer::new(nta).with_ceiling(query.clock_ceiling(nta));
    ex.resolve_query(query)?;
    let g = ex.explore(budget);
    ex.check_graph(&g, query)
}

enum ResolvedQuery {
    Reach(Resolved),
    Always(Resolved),
    LeadsTo(Resolved, Resolved),
}

impl Explorer<'_> {
    fn resolve_query(&self, q: &Query) -> Result<ResolvedQuery, CheckError> {
        let r = |e| self.resolve(e).map_err(CheckError::UnresolvedName);
        Ok(match q {
            Query::Reach(e) => ResolvedQuery::Reach(r(e)?),
            Query::Always(e) => ResolvedQuery::Always(r(e)?),
            Query::LeadsTo(p, q) => ResolvedQuery::LeadsTo(r(p)?, r(q)?),
        })
    }

    /// Evaluates `q` on a graph produced by this explorer. The explorer's
    /// ceiling must cover the query's clock constants.
    pub fn check_graph(&self, g: &StateGraph, q: &Query) -> Result<Verdict, CheckError> {
        let rq = self.resolve_query(q)?;
        let verdict = |holds, trace| Verdict { holds, trace, states_explored: g.states.len() };
        let exceeded = || CheckError::BudgetExceeded { states: g.states.len() };
        match rq {
            ResolvedQuery::Reach(e) => match (0..g.states.len()).find(|&i| self.eval(&e, &g.states[i])) {
                Some(i) => Ok(verdict(true, Some(self.bfs_trace(g, i)))),
                None if g.truncated => Err(exceeded()),
                None => Ok(verdict(false, None)),
            },
            ResolvedQuery::Always(e) => match (0..g.states.len()).find(|&i| !self.eval(&e, &g.states[i])) {
                Some(i) => Ok(verdict(false, Some(self.bfs_trace(g, i)))),
                None if g.truncated => Err(exceeded()),
                None => Ok(verdict(true, None)),
            },
            ResolvedQuery::LeadsTo(p, q) => {
                if g.truncated {
                    return Err(exceeded());
                }
                let good = self.eventually(g, &q);
                match (0..g.states.len()).find(|&i| !good[i] && self.eval(&p, &g.states[i])) {
                    None => Ok(verdict(true, None)),
                    Some(i) => Ok(verdict(false, Some(self.avoiding_trace(g, &good, i)))),
                }
            }
        }
    }

    /// States from which every maximal run reaches a `q`-state.
    fn eventually(&self, g: &StateGraph, q: &Resolved) -> Vec<bool> {
        let n = g.states.len();
        let mut preds: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
        let mut pending: Vec<usize> = alloc::vec![0; n];
        for (i, succs) in g.successors.iter().enumerate() {
            pending[i] = succs.len();
            for &(_, t) in succs {
                preds[t as usize].push(i as u32);
            }
        }
        let mut good = alloc::vec![false; n];
        let mut queue = VecDeque::new();
        for (i, s) in g.states.iter().enumerate() {
            if self.eval(q, s) {
                good[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &p in &preds[i] {
                let p = p as usize;
                if good[p] {
                    continue;
                }
                pending[p] -= 1;
                if pending[p] == 0 {
                    good[p] = true;
                    queue.push_back(p);
                }
            }
        }
        good
    }

    fn bfs_trace(&self, g: &StateGraph, i: usize) -> Trace {
        let (ids, steps) = g.path_to(i);
        Trace { states: ids.iter().map(|&k| g.states[k as usize].clone()).collect(), steps, loop_start: None }
    }

    /// Path to `start`, then a walk through states outside `good` until it
    /// closes a loop or gets stuck.
    fn avoiding_trace(&self, g: &StateGraph, good: &[bool], start: usize) -> Trace {
        let (mut ids, mut steps) = g.path_to(start);
        let mut seen: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(pos, &k)| (k, pos)).collect();
        let mut cur = start;
        let loop_start = loop {
            let Some(&(step, next)) = g.successors[cur].iter().find(|(_, t)| !good[*t as usize]) else {
                break None;
            };
            ids.push(next);
            steps.push(step);
            if let Some(&pos) = seen.get(&next) {
                break Some(pos);
            }
            seen.insert(next, ids.len() - 1);
            cur = next as usize;
        };
        Trace { states: ids.iter().map(|&k| g.states[k as usize].clone()).collect(), steps, loop_start }
    }

    /// Re-executes `trace` step by step and returns its final state.
    pub fn replay(&self, trace: &Trace) -> Result<State, ReplayError> {
        if trace.states.is_empty() || trace.steps.len() + 1 != trace.states.len() {
            return Err(ReplayError::Shape);
        }
        if trace.states[0] != self.initial_state() {
            return Err(ReplayError::Start);
        }
        let mut cur = trace.states[0].clone();
        for (index, step) in trace.steps.iter().enumerate() {
            let next = self
                .successors(&cur)
                .into_iter()
                .find(|(s, _)| s == step)
                .map(|(_, st)| st)
                .filter(|st| *st == trace.states[index + 1])
                .ok_or(ReplayError::Step { index })?;
            cur = next;
        }
        if let Some(pos) = trace.loop_start {
            if pos + 1 >= trace.states.len() || trace.states[pos] != cur {
                return Err(ReplayError::Loop);
            }
        }
        Ok(cur)
    }

    /// Groups the terminal states of `g` by their sets and orders the groups
    /// by the node ordering, best first.
    pub fn rank_terminals(&self, g: &StateGraph) -> Vec<RankedTerminal> {
        let mut groups: BTreeMap<StateSets, Vec<u32>> = BTreeMap::new();
        for i in g.terminals() {
            groups.entry(self.sets(&g.states[i])).or_default().push(i as u32);
        }
        let classes: Vec<(StateSets, Vec<u32>)> = groups.into_iter().collect();
        let n = classes.len();
        let better = |a: usize, b: usize| compare_nodes(&classes[a].0, &classes[b].0) == Ordering::Better;
        let mut level = alloc::vec![usize::MAX; n];
        let mut current = 0;
        while level.contains(&usize::MAX) {
            let layer: Vec<usize> = (0..n)
                .filter(|&i| level[i] == usize::MAX)
                .filter(|&i| !(0..n).any(|j| level[j] == usize::MAX && better(j, i)))
                .collect();
            for i in layer {
                level[i] = current;
            }
            current += 1;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| level[i]);
        let pos: Vec<usize> = {
            let mut p = alloc::vec![0; n];
            for (k, &i) in order.iter().enumerate() {
                p[i] = k;
            }
            p
        };
        order
            .iter()
            .map(|&i| RankedTerminal {
                sets: classes[i].0.clone(),
                states: classes[i].1.clone(),
                level: level[i],
                better_than: {
                    let mut v: Vec<usize> = (0..n).filter(|&j| better(i, j)).map(|j| pos[j]).collect();
                    v.sort_unstable();
                    v
                },
            })
            .collect()
    }
}
