use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Violated, satisfied and exercised clauses of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateSets {
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub v: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub s: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub p: BTreeSet<String>,
}

impl StateSets {
    pub fn is_empty(&self) -> bool {
        self.v.is_empty() && self.s.is_empty() && self.p.is_empty()
    }

    /// Every clause mentioned in any of the three sets.
    pub fn mentioned(&self) -> BTreeSet<&str> {
        self.v.iter().chain(&self.s).chain(&self.p).map(String::as_str).collect()
    }
}

impl fmt::Display for StateSets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, set: &BTreeSet<String>) -> fmt::Result {
            let names: Vec<&str> = set.iter().map(String::as_str).collect();
            f.write_str(&names.join(","))
        }
        f.write_str("{")?;
        list(f, &self.v)?;
        f.write_str("|")?;
        list(f, &self.s)?;
        f.write_str("|")?;
        list(f, &self.p)?;
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EffectKind {
    AddViolation,
    AddSatisfaction,
    AddPermission,
    ClearViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SetEffect {
    pub kind: EffectKind,
    pub clause: String,
}

impl SetEffect {
    pub fn new(kind: EffectKind, clause: impl Into<String>) -> Self {
        SetEffect { kind, clause: clause.into() }
    }
}

impl fmt::Display for SetEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EffectKind::AddViolation => write!(f, "+V({})", self.clause),
            EffectKind::AddSatisfaction => write!(f, "+S({})", self.clause),
            EffectKind::AddPermission => write!(f, "+P({})", self.clause),
            EffectKind::ClearViolation => write!(f, "-V({})", self.clause),
        }
    }
}

/// Applies `effects` left to right.
pub fn apply_effects(sets: &StateSets, effects: &[SetEffect]) -> StateSets {
    let mut out = sets.clone();
    for e in effects {
        let name = e.clause.clone();
        match e.kind {
            EffectKind::AddViolation => {
                out.v.insert(name);
            }
            EffectKind::AddSatisfaction => {
                out.s.insert(name);
            }
            EffectKind::AddPermission => {
                out.p.insert(name);
            }
            EffectKind::ClearViolation => {
                out.v.remove(&name);
            }
        }
    }
    out
}

/// Result of comparing two nodes or edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ordering {
    Better,
    Worse,
    Equal,
    Incomparable,
}

fn proper_subset(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.len() < b.len() && a.is_subset(b)
}

/// `Better` when the first node violates strictly fewer clauses, or
/// violates the same ones and satisfies strictly more. Permissions are not
/// compared.
pub fn compare_nodes(a: &StateSets, b: &StateSets) -> Ordering {
    let better = |x: &StateSets, y: &StateSets| proper_subset(&x.v, &y.v) || (x.v == y.v && proper_subset(&y.s, &x.s));
    if a.v == b.v && a.s == b.s {
        Ordering::Equal
    } else if better(a, b) {
        Ordering::Better
    } else if better(b, a) {
        Ordering::Worse
    } else {
        Ordering::Incomparable
    }
}

/// Compares two edges through the sets of their targets; edges leaving
/// different nodes are never related.
pub fn compare_edges(source_a: &str, target_a: &StateSets, source_b: &str, target_b: &StateSets) -> Ordering {
    if source_a != source_b {
        return Ordering::Incomparable;
    }
    compare_nodes(target_a, target_b)
}
