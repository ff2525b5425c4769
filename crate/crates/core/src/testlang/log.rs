//! Log grammar.
//!
//! ```text
//! // log-id: <id>
//! // script-id: <id>
//! Time <n> <statement> [TRUE|FALSE]
//! Time <n> test failed
//! Test Stopped
//! ```
//!
//! Indented lines continue the previous entry. `//` comments, `[...]`
//! ellipses and parenthesised notes are skipped.

use thiserror::Error;

use super::ast::{LogEntry, Parsed, TestLog, Verdict};
use super::parse::{parse_statement, ParseError, VerbTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: time {time} does not follow {previous}")]
    Monotonicity { line: usize, time: u64, previous: u64 },
    #[error("line {line}: statement after the `test failed` marker")]
    AfterMarker { line: usize },
}

const LOG_ID: &str = "// log-id:";
const SCRIPT_ID: &str = "// script-id:";

struct RawEntry {
    line: usize,
    time: u64,
    text: String,
}

fn split_time(line: &str) -> Option<(u64, &str)> {
    let rest = line
        .strip_prefix("Time")
        .or_else(|| line.strip_prefix("time"))?
        .trim_start();
    let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let time = rest[..digits].parse().ok()?;
    Some((time, rest[digits..].trim()))
}

fn is_skipped(line: &str) -> bool {
    line.starts_with("//")
        || (line.starts_with('[') && line.ends_with(']'))
        || (line.starts_with('(') && line.ends_with(')'))
        || line.eq_ignore_ascii_case("test stopped")
}

fn outcome(word: &str) -> Option<bool> {
    if word.eq_ignore_ascii_case("true") {
        Some(true)
    } else if word.eq_ignore_ascii_case("false") {
        Some(false)
    } else {
        None
    }
}

pub fn parse_log(text: &str) -> Result<Parsed<TestLog>, LogError> {
    parse_log_with(text, &VerbTable::default())
}

pub fn parse_log_with(text: &str, verbs: &VerbTable) -> Result<Parsed<TestLog>, LogError> {
    let mut id = String::new();
    let mut script_id = String::new();
    let mut raw: Vec<RawEntry> = Vec::new();
    let mut marker: Option<(usize, u64)> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if let Some(v) = trimmed.strip_prefix(LOG_ID) {
            id = v.trim().to_string();
            continue;
        }
        if let Some(v) = trimmed.strip_prefix(SCRIPT_ID) {
            script_id = v.trim().to_string();
            continue;
        }
        if trimmed.is_empty() || is_skipped(trimmed) {
            continue;
        }
        if let Some((time, rest)) = split_time(trimmed) {
            if marker.is_some() {
                return Err(LogError::AfterMarker { line: lineno });
            }
            let previous = raw.last().map(|e| e.time);
            if let Some(prev) = previous.filter(|&p| time <= p) {
                return Err(LogError::Monotonicity {
                    line: lineno,
                    time,
                    previous: prev,
                });
            }
            if rest.eq_ignore_ascii_case("test failed") {
                marker = Some((lineno, time));
            } else {
                raw.push(RawEntry {
                    line: lineno,
                    time,
                    text: rest.to_string(),
                });
            }
            continue;
        }
        let indented = line.starts_with(char::is_whitespace);
        match raw.last_mut() {
            Some(entry) if indented && marker.is_none() => {
                entry.text.push(' ');
                entry.text.push_str(trimmed);
            }
            _ => return Err(ParseError::new(lineno, "`Time <n> <statement>`").into()),
        }
    }

    let mut warnings = Vec::new();
    let mut entries = Vec::with_capacity(raw.len());
    for r in raw {
        let mut words: Vec<&str> = r.text.split_whitespace().collect();
        let observed = words.last().and_then(|w| outcome(w));
        if observed.is_some() {
            words.pop();
        }
        let statement =
            parse_statement(&words.join(" "), verbs, &mut warnings).map_err(|e| ParseError::new(r.line, e))?;
        let observed = if statement.is_check() {
            if observed.is_none() {
                warnings.push(format!("line {}: check without an outcome", r.line));
            }
            observed
        } else {
            if observed.is_some() {
                return Err(ParseError::new(r.line, "an outcome only after a check").into());
            }
            None
        };
        entries.push(LogEntry {
            time: r.time,
            statement,
            observed,
        });
    }

    let first_false = entries.iter().position(|e| e.observed == Some(false));
    let verdict = match (first_false, marker) {
        (Some(i), _) => Verdict::Failed {
            at_time: entries[i].time,
            failing_entry: Some(i),
        },
        (None, Some((_, t))) => Verdict::Failed {
            at_time: t,
            failing_entry: None,
        },
        (None, None) => Verdict::Passed,
    };
    Ok(Parsed {
        value: TestLog {
            id,
            script_id,
            entries,
            verdict,
            marker: marker.map(|(_, t)| t),
        },
        warnings,
    })
}

pub fn render_log(log: &TestLog) -> String {
    let mut out = String::new();
    if !log.id.is_empty() {
        out.push_str(&format!("{LOG_ID} {}\n", log.id));
    }
    if !log.script_id.is_empty() {
        out.push_str(&format!("{SCRIPT_ID} {}\n", log.script_id));
    }
    for e in &log.entries {
        out.push_str(&format!("Time {} {}", e.time, e.statement));
        match e.observed {
            Some(true) => out.push_str(" TRUE"),
            Some(false) => out.push_str(" FALSE"),
            None => {}
        }
        out.push('\n');
    }
    if let Some(t) = log.marker {
        out.push_str(&format!("Time {t} test failed\nTest Stopped\n"));
    }
    out
}
