use alloc::vec::Vec;

use super::*;
use crate::compiler::compile;
use crate::frontend::load;

const AUCTION: &str = "contract auction {
  clause Check_Item {
    within T <= 1;
    and {
      clause Inadequate_Item { agent seller prohibition act a2; }
      clause Valid_Information { agent seller obligation act a3; }
    }
  }
}";

fn net(src: &str) -> Nta {
    compile(&load(src).unwrap()).unwrap()
}

fn verdict(nta: &Nta, q: &str) -> Verdict {
    check(nta, &parse_query(q).unwrap(), 100_000).unwrap()
}

fn obligation(window: &str) -> Nta {
    net(&alloc::format!("contract c {{ clause n agent A {{ {window} obligation act a; }} }}"))
}

#[test]
fn auction_leads_to_violation() {
    let nta = net(AUCTION);
    let v = verdict(&nta, "A2.Valid_Information.init and T > 1 --> V[Valid_Information] == true");
    assert!(v.holds);
    assert!(v.trace.is_none());
    let v = verdict(&nta, "A2.Valid_Information_init and T > 1 --> S[Valid_Information]");
    assert!(!v.holds);
}

#[test]
fn safety_fails_with_timeout() {
    let nta = obligation("within T <= 2;");
    let v = verdict(&nta, "A[] not V[n]");
    assert!(!v.holds);
    let trace = v.trace.unwrap();
    let ex = Explorer::new(&nta);
    let end = ex.replay(&trace).unwrap();
    assert_eq!(ex.location(&end, 0), "n.time");
    assert_eq!(end.clocks[0], 3);
    assert!(end.v.get(0));
}

#[test]
fn reachability_witness_performs_action() {
    let nta = obligation("within T <= 2;");
    let v = verdict(&nta, "E<> S[n]");
    assert!(v.holds);
    let trace = v.trace.unwrap();
    let ex = Explorer::new(&nta);
    assert!(ex.replay(&trace).unwrap().s.get(0));
    assert!(trace.steps.iter().any(|s| ex.describe_step(s).contains("A.a")));
    assert!(verdict(&nta, "E<> done[A.a]").holds);
    assert!(!verdict(&nta, "E<> S[n] and V[n]").holds);
}

#[test]
fn terminals_settle_the_clause() {
    let nta = obligation("within T <= 2;");
    let ex = Explorer::new(&nta);
    let g = ex.explore(10_000);
    assert!(!g.truncated);
    let terminals: Vec<usize> = g.terminals().collect();
    assert!(!terminals.is_empty());
    for i in terminals {
        let s = &g.states[i];
        assert!(s.s.get(0) != s.v.get(0), "{}", ex.describe(s));
    }
}

#[test]
fn timing_window_five_to_ten() {
    let nta = obligation("within T >= 5 and T <= 10;");
    let ex = Explorer::new(&nta);
    let g = ex.explore(10_000);
    assert!(!g.truncated);
    let mut action_at = Vec::new();
    let mut timeout_at = Vec::new();
    for (i, succs) in g.successors.iter().enumerate() {
        let s = &g.states[i];
        for (step, t) in succs {
            let label = ex.describe_step(step);
            let target = ex.location(&g.states[*t as usize], 0);
            if label.contains("A.a") {
                action_at.push(s.clocks[0]);
            } else if target == "n.time" && ex.location(s, 0) == "n.init" {
                timeout_at.push(s.clocks[0]);
            }
        }
        if ex.location(s, 0) == "n.init" && s.clocks[0] == 11 {
            assert!(succs.iter().all(|(st, _)| *st != Step::Delay));
        }
    }
    action_at.sort_unstable();
    action_at.dedup();
    timeout_at.dedup();
    assert_eq!(action_at, (5..=10).collect::<Vec<u32>>());
    assert_eq!(timeout_at, [11]);
}

#[test]
fn urgent_edges_block_delay() {
    let nta = obligation("within T <= 2;");
    let ex = Explorer::new(&nta);
    let g = ex.explore(10_000);
    let at_end = (0..g.expanded).find(|&i| ex.location(&g.states[i], 0) == "n.end").unwrap();
    assert!(g.successors[at_end].iter().all(|(s, _)| *s != Step::Delay));
}

#[test]
fn idle_forever_is_a_lasso() {
    let nta = obligation("");
    let v = verdict(&nta, "A1.n.init --> S[n]");
    assert!(!v.holds);
    let trace = v.trace.unwrap();
    let start = trace.loop_start.unwrap();
    assert_eq!(trace.states[start], *trace.last());
    Explorer::new(&nta).replay(&trace).unwrap();
}

#[test]
fn budget_truncates() {
    let nta = net(AUCTION);
    let g = Explorer::new(&nta).explore(1);
    assert!(g.truncated);
    assert_eq!(g.states.len(), 1);
    let q = parse_query("A[] true").unwrap();
    assert_eq!(check(&nta, &q, 1), Err(CheckError::BudgetExceeded { states: 1 }));
    let q = parse_query("E<> A1.Check_Item.init").unwrap();
    assert!(check(&nta, &q, 1).unwrap().holds);
}

#[test]
fn unresolved_names() {
    let nta = net(AUCTION);
    for q in ["E<> A9.x", "E<> A1.nowhere", "E<> V[nobody]", "E<> done[seller.a9]", "E<> zz > 1", "E<> T - T > 1"] {
        let err = check(&nta, &parse_query(q).unwrap(), 100).unwrap_err();
        assert!(matches!(err, CheckError::UnresolvedName(_)), "{q}: {err}");
    }
}

#[test]
fn variables_are_folded() {
    let nta = net("vars { x = 3; } contract c { clause n agent A { when x >= 1; obligation act a; } }");
    assert!(verdict(&nta, "A[] x == 3").holds);
    assert!(!verdict(&nta, "E<> x > 3").holds);
}

#[test]
fn query_constants_raise_the_ceiling() {
    let nta = obligation("");
    assert!(verdict(&nta, "E<> T > 40").holds);
    let ex = Explorer::new(&nta).with_ceiling(40);
    assert_eq!(ex.clock_cap(), 41);
}

#[test]
fn ranking_puts_full_satisfaction_first() {
    let nta = net(AUCTION);
    let ex = Explorer::new(&nta);
    let g = ex.explore(100_000);
    let ranked = ex.rank_terminals(&g);
    assert!(ranked.len() >= 2);
    assert_eq!(ranked[0].level, 0);
    assert!(ranked[0].sets.v.is_empty());
    let worst = ranked.last().unwrap();
    assert!(worst.level > 0);
    assert!(ranked.iter().any(|r| r.better_than.contains(&(ranked.len() - 1))));
}

#[test]
fn exploration_is_deterministic() {
    let nta = net(AUCTION);
    let ex = Explorer::new(&nta);
    let a = ex.explore(100_000);
    let b = ex.explore_with(100_000, |f| {
        let mid = f.len() / 2;
        let mut out = ex.expand(&f[..mid]);
        out.extend(ex.expand(&f[mid..]));
        out
    });
    assert_eq!(a.states, b.states);
    assert_eq!(a.successors, b.successors);
}
