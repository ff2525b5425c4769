//! Test-script DSL, mock executor, log grammar and check triples.

mod ast;
mod exec;
mod log;
mod parse;
mod triples;

pub use ast::{CheckOp, LogEntry, Parsed, Statement, TestLog, TestScript, Verdict};
pub use exec::{run_script, Clock, FaultPlan};
pub use log::{parse_log, parse_log_with, render_log, LogError};
pub use parse::{parse_script, parse_script_with, script_body, ParseError, VerbTable};
pub use triples::log_triples;
