//! Frontier expansion split across worker threads.

use std::thread;

use codiag_core::explorer::{State, StateGraph, Step};
use codiag_core::Explorer;

/// Explores with `jobs` workers. The graph is identical to the one
/// [`Explorer::explore`] builds: each worker expands a contiguous chunk of
/// the frontier and chunks are merged back in order.
pub fn explore(ex: &Explorer<'_>, budget: usize, jobs: usize) -> StateGraph {
    let jobs = jobs.max(1);
    if jobs == 1 {
        return ex.explore(budget);
    }
    ex.explore_with(budget, |frontier| expand(ex, frontier, jobs))
}

fn expand(ex: &Explorer<'_>, frontier: &[State], jobs: usize) -> Vec<Vec<(Step, State)>> {
    if frontier.len() < 2 * jobs {
        return ex.expand(frontier);
    }
    let chunk = frontier.len().div_ceil(jobs);
    thread::scope(|scope| {
        let handles: Vec<_> = frontier.chunks(chunk).map(|part| scope.spawn(move || ex.expand(part))).collect();
        handles.into_iter().flat_map(|h| h.join().expect("expansion worker panicked")).collect()
    })
}
