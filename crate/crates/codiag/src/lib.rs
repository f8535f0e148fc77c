//! File formats, parallel exploration and the command-line driver for the
//! contract diagram compiler.

pub mod cli;
pub mod files;
pub mod parallel;
pub mod report;
