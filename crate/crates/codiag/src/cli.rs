//! Command-line driver.
//!
//! Exit codes: 0 success, 1 a property does not hold or the contract is
//! rejected (validation findings, compile errors), 2 usage, IO, syntax or
//! query errors and exhausted state budgets.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use codiag_core::explorer::{parse_query, CheckError};
use codiag_core::frontend::{parse_syntax, report_diagnostics, validate, Diagnostic};
use codiag_core::{compile, Contract, Explorer, Nta, Query};
use serde::Serialize;

use crate::files::{self, Format};
use crate::parallel;
use crate::report;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "codiag", version, about = "Compile and verify contract diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Emit {
    Json,
    Dot,
    Uppaal,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the syntax tree as JSON.
    Parse { file: PathBuf },
    /// Report well-formedness findings.
    Check { file: PathBuf },
    /// Translate to a network of timed automata.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
        /// Write `<stem>.<ext>` files here instead of printing.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        /// Query for the UPPAAL query file (repeatable, `@file` reads a
        /// file). Defaults to reachability of every clause outcome.
        #[arg(long = "query")]
        queries: Vec<String>,
    },
    /// Check queries against the discrete-time semantics.
    Verify {
        file: PathBuf,
        /// `E<> e`, `A[] e` or `p --> q` (repeatable, `@file` reads a file).
        #[arg(long = "query", required = true)]
        queries: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write verdicts and traces as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Order the terminal states of the exploration by their sets.
    Rank {
        file: PathBuf,
        /// Rank terminal states (the only mode).
        #[arg(long)]
        terminals: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Output streams and terminal settings.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Io<'_> {
    fn diagnostic(&mut self, file: &Path, d: &Diagnostic) {
        let file = file.display().to_string();
        if self.color {
            let _ = writeln!(self.err, "{file}:{}:{}: \x1b[1;31m{}\x1b[0m: {}", d.line, d.col, d.code, d.message);
        } else {
            let _ = writeln!(self.err, "{}", d.display_in(&file));
        }
    }

    fn error(&mut self, message: impl std::fmt::Display) {
        if self.color {
            let _ = writeln!(self.err, "\x1b[1;31merror\x1b[0m: {message}");
        } else {
            let _ = writeln!(self.err, "error: {message}");
        }
    }
}

/// Whether diagnostics should be colored: stderr is a terminal and
/// `NO_COLOR` is unset or empty.
pub fn color_enabled() -> bool {
    use std::io::IsTerminal;
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

pub fn run<I, T>(args: I, io: &mut Io<'_>) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = if io.color { e.render().ansi().to_string() } else { e.render().to_string() };
            return if e.use_stderr() {
                let _ = write!(io.err, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(io.out, "{text}");
                EXIT_OK
            };
        }
    };
    match cli.command {
        Command::Parse { file } => parse_cmd(&file, io),
        Command::Check { file } => check_cmd(&file, io),
        Command::Compile { file, emit, out, queries } => compile_cmd(&file, emit, out.as_deref(), &queries, io),
        Command::Verify { file, queries, budget, jobs, trace_out } => {
            verify_cmd(&file, &queries, budget, jobs, trace_out.as_deref(), io)
        }
        Command::Rank { file, budget, jobs, .. } => rank_cmd(&file, budget, jobs, io),
    }
}

fn read(file: &Path, io: &mut Io<'_>) -> Result<String, u8> {
    files::read(file).map_err(|e| {
        io.error(e);
        EXIT_ERROR
    })
}

fn parse(file: &Path, io: &mut Io<'_>) -> Result<(Contract, codiag_core::frontend::parser::Spans), u8> {
    let src = read(file, io)?;
    parse_syntax(&src).map_err(|d| {
        io.diagnostic(file, &d);
        EXIT_ERROR
    })
}

/// Parses and validates; findings are printed and end the command.
fn load(file: &Path, io: &mut Io<'_>) -> Result<Contract, u8> {
    let (contract, spans) = parse(file, io)?;
    let report = validate(&contract);
    if report.is_clean() {
        return Ok(contract);
    }
    for d in report_diagnostics(&report, &spans) {
        io.diagnostic(file, &d);
    }
    Err(EXIT_FAILED)
}

fn load_network(file: &Path, io: &mut Io<'_>) -> Result<Nta, u8> {
    let contract = load(file, io)?;
    compile(&contract).map_err(|e| {
        io.error(format_args!("{}: {e}", file.display()));
        EXIT_FAILED
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

fn parse_cmd(file: &Path, io: &mut Io<'_>) -> u8 {
    match parse(file, io) {
        Ok((contract, _)) => {
            let _ = write!(io.out, "{}", json(&contract));
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn check_cmd(file: &Path, io: &mut Io<'_>) -> u8 {
    let (contract, spans) = match parse(file, io) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let report = validate(&contract);
    if report.is_clean() {
        let mut clauses = 0;
        contract.root.walk(&mut |c| clauses += usize::from(c.deontic().is_some()));
        let _ = writeln!(io.out, "{}: ok ({clauses} deontic clause(s))", file.display());
        return EXIT_OK;
    }
    for d in report_diagnostics(&report, &spans) {
        let _ = writeln!(io.out, "{}", d.display_in(&file.display().to_string()));
    }
    let _ = writeln!(io.out, "{} finding(s)", report.findings.len());
    EXIT_FAILED
}

/// Expands `@file` arguments into the queries they contain.
fn query_texts(args: &[String], io: &mut Io<'_>) -> Result<Vec<String>, u8> {
    let mut out = Vec::new();
    for a in args {
        match a.strip_prefix('@') {
            Some(path) => out.extend(files::query_lines(&read(Path::new(path), io)?)),
            None => out.push(a.clone()),
        }
    }
    Ok(out)
}

fn parse_queries(texts: &[String], io: &mut Io<'_>) -> Result<Vec<Query>, u8> {
    texts
        .iter()
        .map(|t| {
            parse_query(t).map_err(|e| {
                io.error(format_args!("query `{t}`: {e}"));
                EXIT_ERROR
            })
        })
        .collect()
}

fn compile_cmd(file: &Path, emit: Emit, out: Option<&Path>, query_args: &[String], io: &mut Io<'_>) -> u8 {
    let result = (|| {
        let nta = load_network(file, io)?;
        let queries = parse_queries(&query_texts(query_args, io)?, io)?;
        let format = match emit {
            Emit::Json => Format::Json,
            Emit::Dot => Format::Dot,
            Emit::Uppaal => Format::Uppaal,
        };
        let artifacts = files::render(&nta, format, &queries).map_err(|e| {
            io.error(e);
            EXIT_FAILED
        })?;
        match out {
            Some(dir) => {
                let paths = files::write_all(dir, &files::stem(file), &artifacts).map_err(|e| {
                    io.error(e);
                    EXIT_ERROR
                })?;
                for p in paths {
                    let _ = writeln!(io.out, "wrote {}", p.display());
                }
            }
            None => {
                // Only the model goes to stdout; query files need `-o`.
                let _ = write!(io.out, "{}", artifacts[0].1);
            }
        }
        Ok(())
    })();
    result.err().unwrap_or(EXIT_OK)
}

fn verify_cmd(file: &Path, query_args: &[String], budget: usize, jobs: usize, trace_out: Option<&Path>, io: &mut Io<'_>) -> u8 {
    let nta = match load_network(file, io) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let texts = match query_texts(query_args, io) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let queries = match parse_queries(&texts, io) {
        Ok(q) => q,
        Err(code) => return code,
    };
    let ceiling = queries.iter().map(|q| q.clock_ceiling(&nta)).max().unwrap_or(0);
    let ex = Explorer::new(&nta).with_ceiling(ceiling);
    let graph = parallel::explore(&ex, budget, jobs);
    let mut code = EXIT_OK;
    let mut records = Vec::new();
    for (text, q) in texts.iter().zip(&queries) {
        match ex.check_graph(&graph, q) {
            Ok(v) => {
                let (word, kind) = if v.holds { ("SATISFIED", "witness") } else { ("NOT SATISFIED", "counterexample") };
                let _ = writeln!(io.out, "{word}: {text}");
                let _ = writeln!(io.out, "  states explored: {}", v.states_explored);
                if let Some(t) = &v.trace {
                    let _ = writeln!(io.out, "  {kind}:");
                    let _ = write!(io.out, "{}", report::trace_text(&ex, t));
                }
                if !v.holds {
                    code = code.max(EXIT_FAILED);
                }
                records.push(report::verdict_record(&ex, text, &v));
            }
            Err(CheckError::BudgetExceeded { states }) => {
                let _ = writeln!(io.out, "UNKNOWN: {text}");
                let _ = writeln!(io.out, "  state budget exhausted after {states} states");
                code = EXIT_ERROR;
                records.push(report::VerdictRecord { query: text.clone(), outcome: "unknown", states_explored: states, trace: None });
            }
            Err(e) => {
                io.error(format_args!("query `{text}`: {e}"));
                return EXIT_ERROR;
            }
        }
    }
    if let Some(path) = trace_out {
        #[derive(Serialize)]
        struct Doc<'a> {
            model: &'a str,
            verdicts: Vec<report::VerdictRecord>,
        }
        let doc = Doc { model: &nta.name, verdicts: records };
        if let Err(e) = files::write(path, &json(&doc)) {
            io.error(e);
            return EXIT_ERROR;
        }
    }
    code
}

fn rank_cmd(file: &Path, budget: usize, jobs: usize, io: &mut Io<'_>) -> u8 {
    let nta = match load_network(file, io) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let ex = Explorer::new(&nta);
    let graph = parallel::explore(&ex, budget, jobs);
    if graph.truncated {
        io.error(format_args!("state budget exhausted after {} states; terminal states are not known", graph.states.len()));
        return EXIT_ERROR;
    }
    let ranked = ex.rank_terminals(&graph);
    let _ = writeln!(io.out, "{} terminal class(es) over {} states", ranked.len(), graph.states.len());
    let _ = write!(io.out, "{}", report::ranking_text(&ranked));
    EXIT_OK
}
