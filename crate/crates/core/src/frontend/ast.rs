use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::temporal::{Guard, TimeRestriction};

/// A parsed contract: optional headers plus the root box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    /// Label given after the `contract` keyword.
    pub name: String,
    /// Base time unit of every numeric time bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub vars: Vec<VarDecl>,
    pub root: Clause,
}

/// Integer variable with its initial value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub init: u32,
}

/// A box of the diagram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    #[serde(default, skip_serializing_if = "Guard::is_empty")]
    pub guard: Guard,
    #[serde(default, skip_serializing_if = "TimeRestriction::is_empty")]
    pub restriction: TimeRestriction,
    pub body: Body,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reparation: Option<Box<Clause>>,
}

impl Clause {
    /// An undecorated box.
    pub fn bare(name: impl Into<String>, body: Body) -> Self {
        Clause {
            name: name.into(),
            agent: None,
            guard: Guard::default(),
            restriction: TimeRestriction::default(),
            body,
            reparation: None,
        }
    }

    pub fn deontic(&self) -> Option<DeonticOp> {
        match self.body {
            Body::Deontic(op, _) => Some(op),
            _ => None,
        }
    }

    /// Pre-order walk over this box and every box below it, reparations
    /// included.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Clause)) {
        f(self);
        self.body.for_each_child(&mut |c| c.walk(f));
        if let Some(rep) = &self.reparation {
            rep.walk(f);
        }
    }
}

/// Propositional content of a box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Body {
    Action(String),
    Deontic(DeonticOp, Box<Body>),
    Refinement(RefineKind, Vec<Clause>),
}

impl Body {
    pub fn for_each_child<'a>(&'a self, f: &mut dyn FnMut(&'a Clause)) {
        match self {
            Body::Action(_) => {}
            Body::Deontic(_, inner) => inner.for_each_child(f),
            Body::Refinement(_, children) => children.iter().for_each(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeonticOp {
    Obligation,
    Permission,
    Prohibition,
}

impl DeonticOp {
    pub fn keyword(self) -> &'static str {
        match self {
            DeonticOp::Obligation => "obligation",
            DeonticOp::Permission => "permission",
            DeonticOp::Prohibition => "prohibition",
        }
    }

    pub fn letter(self) -> char {
        match self {
            DeonticOp::Obligation => 'O',
            DeonticOp::Permission => 'P',
            DeonticOp::Prohibition => 'F',
        }
    }
}

impl fmt::Display for DeonticOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RefineKind {
    And,
    Or,
    Seq,
}

impl RefineKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RefineKind::And => "and",
            RefineKind::Or => "or",
            RefineKind::Seq => "seq",
        }
    }
}
