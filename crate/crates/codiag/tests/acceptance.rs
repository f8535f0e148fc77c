//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the test fails if any of them does.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use codiag::files::{render, Format};
use codiag_core::compiler::{action_traces, compile_actions};
use codiag_core::explorer::{check, parse_query, Explorer, StateGraph, Step};
use codiag_core::export::to_uppaal;
use codiag_core::frontend::{load, Body, Clause, DeonticOp, LoadError, RefineKind, Rule};
use codiag_core::nta::{apply_effects, compare_edges, compare_nodes, Edge, EffectKind, Ordering, StateSets};
use codiag_core::temporal::Clock;
use codiag_core::{compile, CompileError, Nta};
use rand::rngs::SmallRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cod"))
        .collect();
    files.sort();
    files
}

fn build(src: &str) -> Result<Nta, String> {
    let contract = load(src).map_err(|e| format!("{e:?}"))?;
    compile(&contract).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 ------------------------------------------------------------------------

fn auction_end_to_end() -> Outcome {
    let start = Instant::now();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus/auction.cod")).unwrap();
    let nta = build(&src)?;
    ensure(nta.automata.len() == 2, || format!("{} automata", nta.automata.len()))?;
    let templates = parse_xml(&to_uppaal(&nta, &[]).map_err(|e| e.to_string())?.xml)
        .map_err(|e| e.to_string())?
        .descendants()
        .filter(|n| n.has_tag_name("template"))
        .count();
    ensure(templates == 3, || format!("{templates} templates in the export"))?;
    let text = "A2.Valid_Information.init and T > 1 --> V[Valid_Information] == true";
    let q = parse_query(text).map_err(|e| e.to_string())?;
    let v = check(&nta, &q, 1_000_000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(v.holds, || "leads-to property not satisfied".into())?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("2 automata, SATISFIED over {} states in {elapsed:.2?}", v.states_explored))
}

// 2 ------------------------------------------------------------------------

fn random_tree(rng: &mut SmallRng, atoms: usize, next: &mut usize) -> Body {
    if atoms == 1 {
        return Body::Action(["a", "b", "c"].choose(rng).unwrap().to_string());
    }
    let kind = *[RefineKind::And, RefineKind::Or, RefineKind::Seq].choose(rng).unwrap();
    let parts = rng.gen_range(2..=atoms.min(3));
    let mut sizes = vec![1; parts];
    for _ in parts..atoms {
        let i = rng.gen_range(0..parts);
        sizes[i] += 1;
    }
    let children = sizes
        .into_iter()
        .map(|n| {
            *next += 1;
            Clause::bare(format!("c{next}"), random_tree(rng, n, next))
        })
        .collect();
    Body::Refinement(kind, children)
}

fn interleavings(a: &[String], b: &[String]) -> BTreeSet<Vec<String>> {
    if a.is_empty() || b.is_empty() {
        return BTreeSet::from([[a, b].concat()]);
    }
    let mut out = BTreeSet::new();
    for (head, x, y) in [(&a[0], &a[1..], b), (&b[0], a, &b[1..])] {
        for mut rest in interleavings(x, y) {
            rest.insert(0, head.clone());
            out.insert(rest);
        }
    }
    out
}

fn expected_traces(body: &Body) -> BTreeSet<Vec<String>> {
    match body {
        Body::Action(a) => BTreeSet::from([vec![a.clone()]]),
        Body::Deontic(_, inner) => expected_traces(inner),
        Body::Refinement(kind, children) => {
            let mut parts = children.iter().map(|c| expected_traces(&c.body));
            let first = parts.next().unwrap();
            parts.fold(first, |acc, p| match kind {
                RefineKind::Or => acc.union(&p).cloned().collect(),
                RefineKind::Seq => acc.iter().flat_map(|x| p.iter().map(move |y| [x.clone(), y.clone()].concat())).collect(),
                RefineKind::And => acc.iter().flat_map(|x| p.iter().flat_map(move |y| interleavings(x, y))).collect(),
            })
        }
    }
}

fn trace_sets() -> Outcome {
    let mut rng = SmallRng::seed_from_u64(0x7ace);
    let total = 250;
    let mut kinds = BTreeSet::new();
    for i in 0..total {
        let atoms = rng.gen_range(1..=4);
        let body = random_tree(&mut rng, atoms, &mut 0);
        if let Body::Refinement(k, _) = &body {
            kinds.insert(*k);
        }
        let got = action_traces(&compile_actions("n", &body));
        let want = expected_traces(&body);
        ensure(got == want, || format!("tree #{i} {body:?}: compiled {got:?}, expected {want:?}"))?;
    }
    ensure(kinds.len() == 3, || "not every refinement kind was generated".into())?;
    Ok(format!("{total}/{total} trees agree"))
}

// 3 ------------------------------------------------------------------------

const SKIPPED: u8 = 1;
const CLEARED: u8 = 2;
const LAPSED: u8 = 4;

/// History flags of every state, joined over all paths reaching it.
fn history(ex: &Explorer<'_>, g: &StateGraph, name: &str) -> Vec<u8> {
    let nta = ex.nta();
    let skip = format!("{name}.skip");
    let time = format!("{name}.time");
    let at = |i: usize| {
        let mut f = 0;
        for a in 0..nta.automata.len() {
            let loc = ex.location(&g.states[i], a);
            if loc == skip {
                f |= SKIPPED;
            }
            if loc == time {
                f |= LAPSED;
            }
        }
        f
    };
    let clears = |a: u32, k: u32| {
        let e: &Edge = &nta.automata[a as usize].edges[k as usize];
        e.effects.iter().any(|x| x.kind == EffectKind::ClearViolation && x.clause == name)
    };
    let mut flags: Vec<u8> = (0..g.states.len()).map(at).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..g.expanded {
            for (step, j) in &g.successors[i] {
                let mut f = flags[i];
                match *step {
                    Step::Edge { automaton, edge } if clears(automaton, edge) => f |= CLEARED,
                    Step::Sync { sender, send_edge, receiver, receive_edge }
                        if clears(sender, send_edge) || clears(receiver, receive_edge) =>
                    {
                        f |= CLEARED
                    }
                    _ => {}
                }
                let j = *j as usize;
                if flags[j] | f != flags[j] {
                    flags[j] |= f;
                    changed = true;
                }
            }
        }
    }
    flags
}

fn single_norm(kind: DeonticOp, guard: Option<u32>, reparation: bool, t2: u32) -> String {
    let mut src = String::new();
    if let Some(x) = guard {
        src += &format!("vars {{ x = {x}; }}\n");
    }
    src += "contract k {\n    clause n agent A {\n";
    if guard.is_some() {
        src += "        when x >= 1;\n";
    }
    src += &format!("        within T <= {t2};\n        {} act a", kind.keyword());
    if reparation {
        src += &format!(" reparation clause r agent A {{\n            within T <= {};\n            obligation act b;\n        }}", t2 + 2);
    }
    src += ";\n    }\n}\n";
    src
}

fn exclusivity_config(kind: DeonticOp, guarded: bool, reparation: bool, t2: u32, seen: &mut [usize; 4]) -> Result<(), String> {
    let valuations: Vec<Option<u32>> = if guarded { vec![Some(0), Some(1)] } else { vec![None] };
    for x in valuations {
        let src = single_norm(kind, x, reparation, t2);
        if kind == DeonticOp::Permission && reparation {
            let rejected = match load(&src) {
                Err(LoadError::Validation(report)) => report.rules().contains(&Rule::PermissionReparation),
                Err(LoadError::Syntax(_)) => false,
                Ok(c) => matches!(compile(&c), Err(CompileError::ReparationOnPermission(_))),
            };
            ensure(rejected, || "permission with a reparation was accepted".into())?;
            continue;
        }
        let nta = build(&src)?;
        let ex = Explorer::new(&nta);
        let g = ex.explore(1_000_000);
        ensure(!g.truncated, || "exploration did not terminate".into())?;
        let flags = history(&ex, &g, "n");
        let terminals: Vec<usize> = g.terminals().collect();
        ensure(!terminals.is_empty(), || "no terminal state".into())?;
        for i in terminals {
            let sets = ex.sets(&g.states[i]);
            let f = flags[i];
            let satisfied = sets.s.contains("n") || (kind == DeonticOp::Permission && (sets.p.contains("n") || f & LAPSED != 0));
            let verdicts = [satisfied, sets.v.contains("n"), f & CLEARED != 0, f & SKIPPED != 0];
            let n = verdicts.iter().filter(|b| **b).count();
            ensure(n == 1, || format!("x={x:?}: terminal {} has {n} outcomes {verdicts:?}", ex.describe(&g.states[i])))?;
            seen[verdicts.iter().position(|b| *b).unwrap()] += 1;
        }
    }
    Ok(())
}

fn deontic_exclusivity() -> Outcome {
    let start = Instant::now();
    let mut green = 0;
    let mut failures = Vec::new();
    let mut seen = [0; 4];
    for kind in [DeonticOp::Obligation, DeonticOp::Permission, DeonticOp::Prohibition] {
        for guarded in [false, true] {
            for reparation in [false, true] {
                for t2 in [1, 3] {
                    match exclusivity_config(kind, guarded, reparation, t2, &mut seen) {
                        Ok(()) => green += 1,
                        Err(e) => failures.push(format!("{}/guard={guarded}/rep={reparation}/t2={t2}: {e}", kind.letter())),
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    ensure(seen.iter().all(|n| *n > 0), || format!("some outcome never occurs: {seen:?}"))?;
    let [sat, vio, rep, skip] = seen;
    Ok(format!(
        "{green}/24 configurations green (permission + reparation rejected as ill-formed); terminals: {sat} satisfied, {vio} violated, {rep} repaired, {skip} skipped; {elapsed:.2?}"
    ))
}

// 4 ------------------------------------------------------------------------

fn random_sets(rng: &mut SmallRng) -> StateSets {
    let mut pick = || ["a", "b", "c", "d"].iter().filter(|_| rng.gen_bool(0.4)).map(|s| s.to_string()).collect();
    StateSets { v: pick(), s: pick(), p: pick() }
}

fn ordering_laws() -> Outcome {
    let mut rng = SmallRng::seed_from_u64(0x0d3e);
    let trials = 1000;
    let mut related = 0;
    for _ in 0..trials {
        let (a, b, c) = (random_sets(&mut rng), random_sets(&mut rng), random_sets(&mut rng));
        ensure(compare_nodes(&a, &a) == Ordering::Equal, || format!("{a} not equal to itself"))?;
        let ab = compare_nodes(&a, &b);
        let ba = compare_nodes(&b, &a);
        let flipped = match ab {
            Ordering::Better => Ordering::Worse,
            Ordering::Worse => Ordering::Better,
            o => o,
        };
        ensure(ba == flipped, || format!("{a} vs {b}: {ab:?} but reversed {ba:?}"))?;
        let strictly_fewer = a.v.is_subset(&b.v) && a.v != b.v;
        let more_done = a.v == b.v && b.s.is_subset(&a.s) && a.s != b.s;
        ensure((ab == Ordering::Better) == (strictly_fewer || more_done), || format!("{a} vs {b}: {ab:?}"))?;
        if ab == Ordering::Better {
            related += 1;
            if compare_nodes(&b, &c) == Ordering::Better {
                ensure(compare_nodes(&a, &c) == Ordering::Better, || format!("{a} > {b} > {c} not transitive"))?;
            }
        }
        ensure(compare_edges("n0", &a, "n1", &b) == Ordering::Incomparable, || "edges from different sources related".into())?;
        ensure(compare_edges("n0", &a, "n0", &b) == ab, || "same-source edges disagree with their targets".into())?;
    }
    Ok(format!("{trials} pairs/triples, {related} strictly ordered"))
}

// 5 ------------------------------------------------------------------------

fn timing_window() -> Outcome {
    let nta = build("contract k { clause n agent A { within T >= 5 and T <= 10; obligation act a; } }")?;
    let ex = Explorer::new(&nta);
    let g = ex.explore(100_000);
    ensure(!g.truncated, || "exploration truncated".into())?;
    let t = ex.clocks().iter().position(|c| *c == Clock::Global).ok_or("no global clock")?;
    let mut acted = BTreeSet::new();
    let mut violated = BTreeSet::new();
    for i in 0..g.expanded {
        let s = &g.states[i];
        if ex.location(s, 0) != "n.init" {
            continue;
        }
        for (step, _) in &g.successors[i] {
            let Step::Edge { automaton, edge } = *step else { continue };
            let e = &nta.automata[automaton as usize].edges[edge as usize];
            if e.action.is_some() {
                acted.insert(s.clocks[t]);
            }
            if e.effects.iter().any(|x| x.kind == EffectKind::AddViolation) {
                violated.insert(s.clocks[t]);
            }
        }
    }
    ensure(acted == (5..=10).collect(), || format!("action enabled at {acted:?}"))?;
    ensure(violated == BTreeSet::from([11]), || format!("violation at {violated:?}"))?;
    Ok("action enabled at T = 5..10, violation at T = 11".into())
}

// 6 ------------------------------------------------------------------------

fn declared_size(decl: &str, array: &str) -> usize {
    let prefix = format!("bool {array}[");
    decl.lines()
        .find_map(|l| l.trim().strip_prefix(&prefix).and_then(|r| r.strip_suffix("];")).map(|n| n.parse().unwrap()))
        .unwrap_or(0)
}

fn parse_xml(xml: &str) -> Result<roxmltree::Document<'_>, roxmltree::Error> {
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    roxmltree::Document::parse_with_options(xml, opts)
}

fn check_uppaal(xml: &str, nta: &Nta) -> Result<(), String> {
    let doc = parse_xml(xml).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    ensure(root.has_tag_name("nta"), || "root is not <nta>".into())?;
    let kids: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    let tags: Vec<&str> = kids.iter().map(|n| n.tag_name().name()).collect();
    ensure(tags.first() == Some(&"declaration") && tags.last() == Some(&"system"), || format!("layout {tags:?}"))?;
    ensure(tags[1..tags.len() - 1].iter().all(|t| *t == "template"), || format!("layout {tags:?}"))?;
    let decl = kids[0].text().unwrap_or("");

    let mut ids = BTreeSet::new();
    let mut names = Vec::new();
    for t in &kids[1..kids.len() - 1] {
        let name = t.children().find(|n| n.has_tag_name("name")).and_then(|n| n.text()).ok_or("template without name")?;
        names.push(name.to_string());
        let mut local = BTreeSet::new();
        for l in t.children().filter(|n| n.has_tag_name("location")) {
            let id = l.attribute("id").ok_or("location without id")?;
            ensure(ids.insert(id.to_string()), || format!("duplicate location id {id}"))?;
            local.insert(id);
            for label in l.children().filter(|n| n.has_tag_name("label")) {
                let kind = label.attribute("kind").unwrap_or("");
                ensure(["invariant", "comments"].contains(&kind), || format!("location label kind {kind}"))?;
            }
        }
        let inits: Vec<_> = t.children().filter(|n| n.has_tag_name("init")).collect();
        ensure(inits.len() == 1, || format!("{name}: {} init elements", inits.len()))?;
        ensure(inits[0].attribute("ref").is_some_and(|r| local.contains(r)), || format!("{name}: dangling init"))?;
        for tr in t.children().filter(|n| n.has_tag_name("transition")) {
            for end in ["source", "target"] {
                let r = tr.children().find(|n| n.has_tag_name(end)).and_then(|n| n.attribute("ref"));
                ensure(r.is_some_and(|r| local.contains(r)), || format!("{name}: dangling {end}"))?;
            }
            for label in tr.children().filter(|n| n.has_tag_name("label")) {
                let kind = label.attribute("kind").unwrap_or("");
                ensure(["guard", "synchronisation", "assignment"].contains(&kind), || format!("transition label kind {kind}"))?;
                if kind == "synchronisation" {
                    let text = label.text().unwrap_or("");
                    let chan = text.trim_end_matches(['!', '?']);
                    let declared = decl.lines().any(|l| l.trim().trim_start_matches("urgent ") == format!("chan {chan};"));
                    ensure(declared, || format!("undeclared channel {chan}"))?;
                }
            }
        }
    }
    let system = kids.last().unwrap().text().unwrap_or("");
    ensure(system == format!("system {};", names.join(", ")), || format!("system line {system:?}"))?;

    let count = |k: DeonticOp| nta.clauses.iter().filter(|c| c.kind == k).count();
    let vs = count(DeonticOp::Obligation) + count(DeonticOp::Prohibition);
    let p = count(DeonticOp::Permission);
    for (array, want) in [("V", vs), ("S", vs), ("P", p)] {
        let got = declared_size(decl, array);
        ensure(got == want, || format!("{array} has size {got}, expected {want}"))?;
    }
    Ok(())
}

fn export_validity() -> Outcome {
    let files = corpus();
    for path in &files {
        let file = path.file_name().unwrap().to_string_lossy();
        let nta = build(&std::fs::read_to_string(path).unwrap()).map_err(|e| format!("{file}: {e}"))?;
        let xml = to_uppaal(&nta, &[]).map_err(|e| e.to_string())?.xml;
        check_uppaal(&xml, &nta).map_err(|e| format!("{file}: {e}"))?;
        let json = serde_json::to_string(&nta).unwrap();
        let back: Nta = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        let again = to_uppaal(&back, &[]).map_err(|e| e.to_string())?.xml;
        ensure(again == xml, || format!("{file}: re-export differs"))?;
    }
    Ok(format!("{} corpus models pass the structural checker and re-export identically", files.len()))
}

// 7 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let files = corpus();
    for path in &files {
        let src = std::fs::read_to_string(path).unwrap();
        let mut runs = Vec::new();
        for _ in 0..2 {
            let nta = build(&src)?;
            let mut out = Vec::new();
            for format in [Format::Json, Format::Dot, Format::Uppaal] {
                out.extend(render(&nta, format, &[]).map_err(|e| e.to_string())?);
            }
            runs.push(out);
        }
        ensure(runs[0] == runs[1], || format!("{} differs between runs", path.display()))?;
    }
    Ok(format!("{} corpus files, JSON/DOT/XML byte-identical", files.len()))
}

// 8 ------------------------------------------------------------------------

struct ContractGen {
    rng: SmallRng,
    next: usize,
}

impl ContractGen {
    fn name(&mut self) -> String {
        self.next += 1;
        format!("c{}", self.next)
    }

    fn window(&mut self) -> Option<String> {
        if !self.rng.gen_bool(0.7) {
            return None;
        }
        let clock = if self.next > 1 && self.rng.gen_bool(0.3) {
            format!("after(c{})", self.rng.gen_range(1..self.next))
        } else {
            "T".to_string()
        };
        let lo = self.rng.gen_range(0..3);
        let hi = lo + self.rng.gen_range(0..3);
        Some(if lo > 0 { format!("within {clock} >= {lo} and {clock} <= {hi};") } else { format!("within {clock} <= {hi};") })
    }

    fn norm(&mut self) -> String {
        let name = self.name();
        let kind = *[DeonticOp::Obligation, DeonticOp::Permission, DeonticOp::Prohibition].choose(&mut self.rng).unwrap();
        let agent = ["A", "B"].choose(&mut self.rng).unwrap();
        let mut s = format!("clause {name} agent {agent} {{ ");
        if self.rng.gen_bool(0.25) {
            s += &format!("when x >= {}; ", self.rng.gen_range(0..3));
        }
        let window = self.window();
        if let Some(w) = &window {
            s += w;
        }
        s += &format!(" {} act {}", kind.keyword(), ["a", "b", "c"].choose(&mut self.rng).unwrap());
        if window.is_some() && kind != DeonticOp::Permission && self.rng.gen_bool(0.3) {
            let r = self.name();
            let k = self.rng.gen_range(2..8);
            s += &format!(" reparation clause {r} agent {agent} {{ within T <= {k}; obligation act d; }}");
        }
        s + "; }"
    }

    fn clause(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.norm();
        }
        let name = self.name();
        let kind = *[RefineKind::And, RefineKind::Or, RefineKind::Seq].choose(&mut self.rng).unwrap();
        let window = if self.rng.gen_bool(0.3) { format!("within T <= {};", self.rng.gen_range(1..5)) } else { String::new() };
        let children: Vec<String> = (0..2).map(|_| self.clause(depth - 1)).collect();
        format!("clause {name} {{ {window} {} {{ {} }} }}", kind.keyword(), children.join(" "))
    }

    fn contract(&mut self) -> String {
        self.next = 0;
        let x = self.rng.gen_range(0..3);
        let root = self.clause(2);
        format!("vars {{ x = {x}; }} contract g {{ {root} }}")
    }
}

#[derive(Debug, Clone)]
enum Prop {
    Loc(String, String),
    Set(char, String),
    Clock(String, &'static str, u32),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
}

impl Prop {
    fn text(&self) -> String {
        match self {
            Prop::Loc(a, n) => format!("{a}.{n}"),
            Prop::Set(k, c) => format!("{k}[{c}]"),
            Prop::Clock(c, op, k) => format!("{c} {op} {k}"),
            Prop::Not(p) => format!("not ({})", p.text()),
            Prop::And(a, b) => format!("({} and {})", a.text(), b.text()),
            Prop::Or(a, b) => format!("({} or {})", a.text(), b.text()),
        }
    }

    fn max_constant(&self) -> u32 {
        match self {
            Prop::Clock(_, _, k) => *k,
            Prop::Not(p) => p.max_constant(),
            Prop::And(a, b) | Prop::Or(a, b) => a.max_constant().max(b.max_constant()),
            _ => 0,
        }
    }

    fn eval(&self, s: &RawState, nta: &Nta) -> bool {
        match self {
            Prop::Loc(a, n) => nta.automata.iter().zip(&s.locs).any(|(auto, l)| auto.name == *a && l == n),
            Prop::Set(k, c) => match k {
                'V' => s.sets.v.contains(c),
                'S' => s.sets.s.contains(c),
                _ => s.sets.p.contains(c),
            },
            Prop::Clock(c, op, k) => {
                let v = s.clocks[&Clock::from_name(c).unwrap()];
                match *op {
                    "<=" => v <= *k,
                    "<" => v < *k,
                    "==" => v == *k,
                    ">" => v > *k,
                    _ => v >= *k,
                }
            }
            Prop::Not(p) => !p.eval(s, nta),
            Prop::And(a, b) => a.eval(s, nta) && b.eval(s, nta),
            Prop::Or(a, b) => a.eval(s, nta) || b.eval(s, nta),
        }
    }
}

fn random_prop(rng: &mut SmallRng, nta: &Nta, depth: u32) -> Prop {
    if depth > 0 && rng.gen_bool(0.4) {
        let a = Box::new(random_prop(rng, nta, depth - 1));
        return match rng.gen_range(0..3) {
            0 => Prop::Not(a),
            1 => Prop::And(a, Box::new(random_prop(rng, nta, depth - 1))),
            _ => Prop::Or(a, Box::new(random_prop(rng, nta, depth - 1))),
        };
    }
    match rng.gen_range(0..3) {
        0 => {
            let auto = nta.automata.choose(rng).unwrap();
            Prop::Loc(auto.name.clone(), auto.nodes.choose(rng).unwrap().id.clone())
        }
        1 => Prop::Set(*['V', 'S', 'P'].choose(rng).unwrap(), nta.clauses.choose(rng).unwrap().name.clone()),
        _ => {
            let clocks: Vec<&Clock> = nta.clocks.iter().collect();
            let c = clocks.choose(rng).unwrap().to_string();
            let k = rng.gen_range(0..=nta.clock_ceiling() + 1);
            Prop::Clock(c, ["<=", "<", "==", ">", ">="].choose(rng).unwrap(), k)
        }
    }
}

/// Oracle state: node ids, raw clock values and the three sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RawState {
    locs: Vec<String>,
    clocks: BTreeMap<Clock, u32>,
    sets: StateSets,
}

/// Straightforward explorer over node ids with clocks saturating at
/// `horizon`.
struct Oracle<'a> {
    nta: &'a Nta,
    horizon: u32,
}

impl Oracle<'_> {
    fn enabled(&self, e: &Edge, s: &RawState) -> bool {
        e.guard.eval_with(|v| self.nta.variables.get(v).copied()).unwrap_or(false)
            && e.clock_guards.iter().all(|g| g.holds(s.clocks[g.clock()]))
    }

    fn take(&self, s: &mut RawState, a: usize, e: &Edge) {
        s.locs[a] = e.target.clone();
        for c in &e.resets {
            s.clocks.insert(c.clone(), 0);
        }
        s.sets = apply_effects(&s.sets, &e.effects);
    }

    fn invariant(&self, s: &RawState, a: usize) -> bool {
        let node = self.nta.automata[a].node(&s.locs[a]).unwrap();
        node.invariant.iter().all(|b| s.clocks[&b.clock] <= b.bound)
    }

    fn next(&self, s: &RawState) -> Vec<RawState> {
        let autos = &self.nta.automata;
        let mut out = Vec::new();
        let mut urgent = false;
        for (a, auto) in autos.iter().enumerate() {
            for e in auto.edges.iter().filter(|e| e.source == s.locs[a] && e.sync.is_none() && self.enabled(e, s)) {
                let mut n = s.clone();
                self.take(&mut n, a, e);
                if self.invariant(&n, a) {
                    urgent |= e.urgent;
                    out.push(n);
                }
            }
        }
        for (a, auto) in autos.iter().enumerate() {
            for e in auto.edges.iter().filter(|e| e.source == s.locs[a] && self.enabled(e, s)) {
                let Some(send) = e.sync.as_ref().filter(|x| x.dir == codiag_core::nta::SyncDir::Send) else { continue };
                for (b, other) in autos.iter().enumerate().filter(|(b, _)| *b != a) {
                    for f in other.edges.iter().filter(|f| f.source == s.locs[b] && self.enabled(f, s)) {
                        let Some(recv) = &f.sync else { continue };
                        if recv.channel != send.channel || recv.dir != codiag_core::nta::SyncDir::Receive {
                            continue;
                        }
                        let mut n = s.clone();
                        self.take(&mut n, a, e);
                        self.take(&mut n, b, f);
                        if self.invariant(&n, a) && self.invariant(&n, b) {
                            let chan_urgent = self.nta.channels.iter().any(|c| c.name == send.channel && c.urgent);
                            urgent |= chan_urgent || e.urgent || f.urgent;
                            out.push(n);
                        }
                    }
                }
            }
        }
        if !urgent {
            let mut n = s.clone();
            for v in n.clocks.values_mut() {
                *v = (*v + 1).min(self.horizon);
            }
            if (0..autos.len()).all(|a| self.invariant(&n, a)) {
                out.push(n);
            }
        }
        out
    }

    fn reachable(&self, budget: usize) -> Option<Vec<RawState>> {
        let init = RawState {
            locs: self.nta.automata.iter().map(|a| a.initial.clone()).collect(),
            clocks: self.nta.clocks.iter().map(|c| (c.clone(), 0)).collect(),
            sets: StateSets::default(),
        };
        let mut seen: HashMap<RawState, ()> = HashMap::from([(init.clone(), ())]);
        let mut order = vec![init.clone()];
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            for n in self.next(&s) {
                if seen.insert(n.clone(), ()).is_none() {
                    if seen.len() > budget {
                        return None;
                    }
                    order.push(n.clone());
                    queue.push_back(n);
                }
            }
        }
        Some(order)
    }
}

fn clock_cap_oracle() -> Outcome {
    const BUDGET: usize = 200_000;
    let mut rng = SmallRng::seed_from_u64(0xc10c);
    let mut gen = ContractGen { rng: SmallRng::seed_from_u64(0x5eed), next: 0 };
    let (mut models, mut queries, mut attempts, mut relative) = (0, 0, 0, 0);
    while models < 50 {
        attempts += 1;
        ensure(attempts < 2000, || format!("only {models} usable random models"))?;
        let src = gen.contract();
        let Ok(nta) = build(&src) else { continue };
        if nta.clauses.is_empty() {
            continue;
        }
        let mut batch = Vec::new();
        for _ in 0..4 {
            let prop = random_prop(&mut rng, &nta, 2);
            let reach = rng.gen_bool(0.5);
            let text = format!("{} {}", if reach { "E<>" } else { "A[]" }, prop.text());
            let horizon = nta.clock_ceiling().max(prop.max_constant()) + 2;
            let Some(states) = (Oracle { nta: &nta, horizon }).reachable(BUDGET) else { break };
            let expected = if reach { states.iter().any(|s| prop.eval(s, &nta)) } else { states.iter().all(|s| prop.eval(s, &nta)) };
            batch.push((text, expected));
        }
        if batch.len() < 4 {
            continue;
        }
        let mut usable = true;
        for (text, expected) in &batch {
            let q = parse_query(text).map_err(|e| format!("{text}: {e}"))?;
            match check(&nta, &q, BUDGET) {
                Ok(v) => ensure(v.holds == *expected, || format!("{text} on\n{src}\ncapped says {}, oracle {expected}", v.holds))?,
                Err(codiag_core::explorer::CheckError::BudgetExceeded { .. }) => usable = false,
                Err(e) => return Err(format!("{text}: {e}")),
            }
        }
        if usable {
            models += 1;
            relative += usize::from(nta.clocks.iter().count() > 1);
            queries += batch.len();
        }
    }
    Ok(format!("{models} random models ({relative} with relative clocks), {queries}/{queries} queries agree"))
}

// --------------------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("auction end-to-end", auction_end_to_end),
        ("trace-set oracle", trace_sets),
        ("deontic exclusivity", deontic_exclusivity),
        ("ordering laws", ordering_laws),
        ("timing semantics", timing_window),
        ("export validity", export_validity),
        ("determinism", determinism),
        ("clock-cap oracle", clock_cap_oracle),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout).unwrap();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let line = match &outcome {
            Ok(detail) => format!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("FAIL {} {name}: {why}", i + 1)
            }
        };
        writeln!(stdout, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
