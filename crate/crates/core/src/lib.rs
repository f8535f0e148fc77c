//! Contract diagram compiler core.
//!
//! Parses textual contract diagrams (boxes carrying an agent, a name, a
//! guard, a time restriction, a deontic norm over actions and an optional
//! reparation), translates them into networks of timed automata that track
//! violated, satisfied and exercised clauses, explores the resulting network
//! under a discrete-time semantics, and emits UPPAAL 4 XML and DOT.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, JSON and the
//! command-line driver live in the `codiag` crate.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod compiler;
pub mod explorer;
pub mod export;
pub mod frontend;
pub mod nta;
pub mod temporal;

pub use compiler::{compile, CompileError};
pub use explorer::{check, parse_query, Explorer, Query, Verdict};
pub use frontend::{parse_contract, render_contract, validate, Contract};
pub use nta::Nta;
