//! Clocks, clock intervals and integer guards.
//!
//! Time restrictions are normalized into a single-clock interval
//! `t1 <= x <= t2` where `x` is either the global clock `T` (never reset) or
//! a relative clock `t_<name>` that is reset when clause `name` is
//! satisfied. Guards over integer variables are evaluated and negated here.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A clock of the network: the global clock `T` or the relative clock
/// `t_<clause>` of a referenced clause.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clock {
    Global,
    After(String),
}

impl Clock {
    /// Parses the display form (`T` or `t_<name>`).
    pub fn from_name(name: &str) -> Option<Clock> {
        if name == "T" {
            Some(Clock::Global)
        } else {
            name.strip_prefix("t_")
                .filter(|rest| !rest.is_empty())
                .map(|rest| Clock::After(rest.to_string()))
        }
    }
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clock::Global => f.write_str("T"),
            Clock::After(name) => write!(f, "t_{name}"),
        }
    }
}

impl Serialize for Clock {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Clock {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Clock::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(alloc::format!("invalid clock name `{name}`")))
    }
}

/// Comparison operator of an atomic constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Le => lhs <= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "==",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `left ~ bound` or `left - right ~ bound` over integer variables.
///
/// Bounds are signed so that integer complements such as `v < 0` (the
/// negation of `v >= 0`) stay representable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarConstraint {
    pub left: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    pub op: CmpOp,
    pub bound: i64,
}

impl VarConstraint {
    pub fn simple(var: &str, op: CmpOp, bound: i64) -> Self {
        VarConstraint { left: var.to_string(), right: None, op, bound }
    }

    pub fn difference(left: &str, right: &str, op: CmpOp, bound: i64) -> Self {
        VarConstraint { left: left.to_string(), right: Some(right.to_string()), op, bound }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.left.as_str()).chain(self.right.as_deref())
    }

    fn with(&self, op: CmpOp, bound: i64) -> Self {
        VarConstraint { left: self.left.clone(), right: self.right.clone(), op, bound }
    }
}

impl fmt::Display for VarConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.right {
            Some(right) => write!(f, "{} - {} {} {}", self.left, right, self.op, self.bound),
            None => write!(f, "{} {} {}", self.left, self.op, self.bound),
        }
    }
}

/// Conjunction of variable constraints. The empty conjunction is `ε`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Guard {
    pub conjuncts: Vec<VarConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("variable `{0}` has no value")]
    MissingVariable(String),
    #[error("cannot negate the empty guard")]
    EmptyGuard,
    #[error("time restriction is contradictory: lower bound {lower} exceeds upper bound {upper}")]
    ContradictoryRestriction { lower: i64, upper: i64 },
    #[error("time restriction constrains more than one clock ({0} and {1})")]
    MixedClocks(Clock, Clock),
    #[error("clock difference constraint `{0}` is not supported by interval normalization")]
    DifferenceConstraint(String),
}

impl Guard {
    pub fn new(conjuncts: Vec<VarConstraint>) -> Self {
        Guard { conjuncts }
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.conjuncts.iter().flat_map(VarConstraint::variables).collect()
    }

    /// Evaluates the guard with `lookup` supplying variable values.
    pub fn eval_with<F>(&self, mut lookup: F) -> Result<bool, TemporalError>
    where
        F: FnMut(&str) -> Option<i64>,
    {
        let mut value = |name: &str| lookup(name).ok_or_else(|| TemporalError::MissingVariable(name.to_string()));
        for c in &self.conjuncts {
            let mut lhs = value(&c.left)?;
            if let Some(right) = &c.right {
                lhs -= value(right)?;
            }
            if !c.op.holds(lhs, c.bound) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Conjunction of two guards.
    pub fn and(&self, other: &Guard) -> Guard {
        let mut conjuncts = self.conjuncts.clone();
        conjuncts.extend(other.conjuncts.iter().cloned());
        Guard { conjuncts }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Evaluates `g` under a valuation given as `(name, value)` pairs.
pub fn eval_guard<'a, I>(g: &Guard, valuation: I) -> Result<bool, TemporalError>
where
    I: IntoIterator<Item = (&'a str, i64)>,
{
    let valuation: Vec<(&str, i64)> = valuation.into_iter().collect();
    g.eval_with(|name| valuation.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
}

/// Integer complement of a conjunctive guard, as a disjunction of
/// single-conjunct guards.
pub fn negate_guard(g: &Guard) -> Result<Vec<Guard>, TemporalError> {
    if g.is_empty() {
        return Err(TemporalError::EmptyGuard);
    }
    let mut out = Vec::new();
    for c in &g.conjuncts {
        let n = c.bound;
        match c.op {
            CmpOp::Le => out.push(c.with(CmpOp::Ge, n.saturating_add(1))),
            CmpOp::Lt => out.push(c.with(CmpOp::Ge, n)),
            CmpOp::Gt => out.push(c.with(CmpOp::Le, n)),
            CmpOp::Ge => out.push(below(c, n)),
            CmpOp::Eq => {
                out.push(below(c, n));
                out.push(c.with(CmpOp::Ge, n.saturating_add(1)));
            }
        }
    }
    Ok(out.into_iter().map(|c| Guard::new(vec![c])).collect())
}

// `< n` written as `<= n-1` when that stays non-negative.
fn below(c: &VarConstraint, n: i64) -> VarConstraint {
    if n > 0 {
        c.with(CmpOp::Le, n - 1)
    } else {
        c.with(CmpOp::Lt, n)
    }
}

/// One side of a clock constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClockConstraint {
    pub left: Clock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Clock>,
    pub op: CmpOp,
    pub bound: u32,
}

impl fmt::Display for ClockConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn src(c: &Clock) -> String {
            match c {
                Clock::Global => "T".to_string(),
                Clock::After(n) => alloc::format!("after({n})"),
            }
        }
        match &self.right {
            Some(right) => write!(f, "{} - {} {} {}", src(&self.left), src(right), self.op, self.bound),
            None => write!(f, "{} {} {}", src(&self.left), self.op, self.bound),
        }
    }
}

/// Conjunction of clock constraints; empty means `ε`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeRestriction {
    pub conjuncts: Vec<ClockConstraint>,
}

impl TimeRestriction {
    pub fn new(conjuncts: Vec<ClockConstraint>) -> Self {
        TimeRestriction { conjuncts }
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Clauses referenced through `after(..)`.
    pub fn referenced_clauses(&self) -> impl Iterator<Item = &str> {
        self.conjuncts
            .iter()
            .flat_map(|c| core::iter::once(&c.left).chain(c.right.as_ref()))
            .filter_map(|c| match c {
                Clock::After(n) => Some(n.as_str()),
                Clock::Global => None,
            })
    }
}

impl fmt::Display for TimeRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `lower <= clock <= upper`; `upper == None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClockInterval {
    pub clock: Clock,
    pub lower: u32,
    pub upper: Option<u32>,
}

impl ClockInterval {
    pub fn unrestricted(clock: Clock) -> Self {
        ClockInterval { clock, lower: 0, upper: None }
    }

    pub fn contains(&self, value: u32) -> bool {
        value >= self.lower && self.upper.is_none_or(|u| value <= u)
    }

    pub fn is_trivial(&self) -> bool {
        self.lower == 0 && self.upper.is_none()
    }

    /// Intersection of two intervals over the same clock. `None` when the
    /// clocks differ or the intersection is empty.
    pub fn intersect(&self, other: &ClockInterval) -> Option<ClockInterval> {
        if self.clock != other.clock {
            return None;
        }
        let lower = self.lower.max(other.lower);
        let upper = match (self.upper, other.upper) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if upper.is_some_and(|u| lower > u) {
            return None;
        }
        Some(ClockInterval { clock: self.clock.clone(), lower, upper })
    }
}

impl fmt::Display for ClockInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "{} <= {} <= {}", self.lower, self.clock, u),
            None => write!(f, "{} >= {}", self.clock, self.lower),
        }
    }
}

/// Tightest single-clock interval implied by a time restriction.
pub fn normalize_restriction(tr: &TimeRestriction) -> Result<ClockInterval, TemporalError> {
    let mut clock: Option<&Clock> = None;
    let mut lower: i64 = 0;
    let mut upper: Option<i64> = None;
    for c in &tr.conjuncts {
        if c.right.is_some() {
            return Err(TemporalError::DifferenceConstraint(c.to_string()));
        }
        match clock {
            Some(prev) if *prev != c.left => return Err(TemporalError::MixedClocks(prev.clone(), c.left.clone())),
            _ => clock = Some(&c.left),
        }
        let n = i64::from(c.bound);
        let tighten_upper = |u: &mut Option<i64>, v: i64| *u = Some(u.map_or(v, |old| old.min(v)));
        match c.op {
            CmpOp::Ge => lower = lower.max(n),
            CmpOp::Gt => lower = lower.max(n + 1),
            CmpOp::Le => tighten_upper(&mut upper, n),
            CmpOp::Lt => tighten_upper(&mut upper, n - 1),
            CmpOp::Eq => {
                lower = lower.max(n);
                tighten_upper(&mut upper, n);
            }
        }
    }
    if let Some(u) = upper {
        if lower > u {
            return Err(TemporalError::ContradictoryRestriction { lower, upper: u });
        }
    }
    let to_u32 = |v: i64| u32::try_from(v).unwrap_or(u32::MAX);
    Ok(ClockInterval {
        clock: clock.cloned().unwrap_or(Clock::Global),
        lower: to_u32(lower),
        upper: upper.map(to_u32),
    })
}

/// The clocks of a network: `T` plus one relative clock per clause used as
/// a reference by some time restriction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClockTable {
    pub entries: BTreeSet<Clock>,
}

impl Default for ClockTable {
    fn default() -> Self {
        let mut entries = BTreeSet::new();
        entries.insert(Clock::Global);
        ClockTable { entries }
    }
}

impl ClockTable {
    pub fn track(&mut self, clause: &str) {
        self.entries.insert(Clock::After(clause.to_string()));
    }

    pub fn tracks(&self, clause: &str) -> bool {
        self.entries.contains(&Clock::After(clause.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Clock> {
        self.entries.iter()
    }
}
