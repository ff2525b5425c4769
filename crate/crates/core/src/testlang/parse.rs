//! Script DSL.
//!
//! ```text
//! set <entity>.<var> = <value>
//! force <entity>.<var> = <value>
//! stimulate <component> with <input>
//! check <subject> <verb> <object> [to <recipient>]
//! check <path> equals to <literal>
//! check <path> <verb> <literal>
//! ```
//!
//! The alternate surface forms of hand-written scripts are accepted too:
//! `whit` for `with`, `Train[i]` subscripts, `Input[“MakeSom”]` wrappers,
//! `State[i]= initial_state[i]` templates, `For each ...` loop headers and
//! `[...]` ellipsis lines.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{CheckOp, Parsed, Statement, TestScript};
use crate::ontology::Ontology;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: expected {expected}")]
pub struct ParseError {
    pub line: usize,
    pub expected: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, expected: impl Into<String>) -> Self {
        Self {
            line,
            expected: expected.into(),
        }
    }
}

const DEFAULT_VERBS: &[&str] = &[
    "send", "receive", "recive", "contain", "capt", "use", "using", "perform",
];

/// Relation verbs recognised in checks, matched as written or with an
/// `s`, `es` or `ed` suffix stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbTable {
    verbs: BTreeSet<String>,
}

impl Default for VerbTable {
    fn default() -> Self {
        Self {
            verbs: DEFAULT_VERBS.iter().map(|v| v.to_string()).collect(),
        }
    }
}

impl VerbTable {
    /// Default verbs plus every single-word relation name and label.
    pub fn from_ontology(ontology: &Ontology) -> Self {
        let mut table = Self::default();
        for (label, _) in ontology.relation_labels() {
            if !label.as_str().contains(' ') {
                table.verbs.insert(label.as_str().to_string());
            }
        }
        table
    }

    pub fn contains(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.verbs.contains(&w)
            || ["s", "es", "ed"]
                .iter()
                .filter_map(|s| w.strip_suffix(s))
                .any(|stem| !stem.is_empty() && self.verbs.contains(stem))
    }
}

fn is_ignored(line: &str) -> bool {
    let lower = line.to_lowercase();
    line.is_empty()
        || line.starts_with("//")
        || (line.starts_with('[') && line.ends_with(']') && line[1..line.len() - 1].chars().all(|c| c == '.'))
        || lower.starts_with("for each ")
        || lower.starts_with("for all ")
}

const QUOTES: &[char] = &['"', '\'', '“', '”', '‘', '’'];

fn unquote(s: &str) -> String {
    s.trim().trim_matches(QUOTES).trim().to_string()
}

fn squash(words: &[&str]) -> String {
    words.join(" ")
}

/// `Train[i]` -> `Train`.
fn strip_subscript(name: &str) -> String {
    if name.ends_with(']') {
        if let Some(open) = name.find('[') {
            let head = name[..open].trim();
            if !head.is_empty() {
                return head.to_string();
            }
        }
    }
    name.to_string()
}

/// `Input[“MakeSom”]` -> `MakeSom`; other inputs only lose surrounding quotes.
fn unwrap_input(input: &str) -> String {
    if let (Some(open), true) = (input.find('['), input.ends_with(']')) {
        let inner = &input[open + 1..input.len() - 1];
        if inner.starts_with(QUOTES) && inner.ends_with(QUOTES) && inner.len() > 1 {
            return unquote(inner);
        }
    }
    unquote(input)
}

fn parse_assignment(rest: &str) -> Option<(String, String, String)> {
    let (lhs, rhs) = rest.split_once('=')?;
    let lhs = squash(&lhs.split_whitespace().collect::<Vec<_>>());
    let value = squash(&rhs.split_whitespace().collect::<Vec<_>>());
    if lhs.is_empty() || value.is_empty() {
        return None;
    }
    let (entity, variable) = match lhs.split_once('.') {
        Some((e, v)) => (e.trim().to_string(), v.trim().to_string()),
        None => (lhs, String::new()),
    };
    if entity.is_empty() {
        return None;
    }
    Some((entity, variable, value))
}

/// Parses one logical statement line. Returns the expected-form message on
/// failure.
pub(crate) fn parse_statement(line: &str, verbs: &VerbTable, warnings: &mut Vec<String>) -> Result<Statement, String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let Some(head) = words.first() else {
        return Err("a statement".into());
    };
    let rest = &words[1..];
    match head.to_lowercase().as_str() {
        "set" | "force" => {
            let (entity, variable, value) =
                parse_assignment(&squash(rest)).ok_or_else(|| format!("`{head} <entity>.<var> = <value>`"))?;
            Ok(if head.eq_ignore_ascii_case("set") {
                Statement::SetState {
                    entity,
                    variable,
                    value,
                }
            } else {
                Statement::ForceState {
                    entity,
                    variable,
                    value,
                }
            })
        }
        "stimulate" => {
            let with = rest.iter().position(|w| {
                let w = w.to_lowercase();
                w == "with" || w == "whit"
            });
            let (component, input) = match with {
                Some(i) => {
                    if rest[i].eq_ignore_ascii_case("whit") {
                        warnings.push("`whit` read as `with`".into());
                    }
                    (squash(&rest[..i]), squash(&rest[i + 1..]))
                }
                None => (squash(rest), String::new()),
            };
            if component.is_empty() || (with.is_some() && input.is_empty()) {
                return Err("`stimulate <component> with <input>`".into());
            }
            Ok(Statement::Stimulate {
                component: strip_subscript(&component),
                input: if input.is_empty() { input } else { unwrap_input(&input) },
            })
        }
        "check" => parse_check(rest, verbs),
        _ => match parse_assignment(line) {
            Some((entity, variable, value)) if !line.trim_start().starts_with('=') => Ok(Statement::SetState {
                entity,
                variable,
                value,
            }),
            _ => Err("a statement (set, force, stimulate or check)".into()),
        },
    }
}

fn parse_check(rest: &[&str], verbs: &VerbTable) -> Result<Statement, String> {
    const SHAPES: &str = "`check <subject> <verb> <object> [to <recipient>]` or `check <path> equals to <literal>`";
    let equals = rest
        .windows(2)
        .position(|w| w[0].eq_ignore_ascii_case("equals") && w[1].eq_ignore_ascii_case("to"));
    if let Some(i) = equals {
        let path = squash(&rest[..i]);
        let expected = unquote(&squash(&rest[i + 2..]));
        if path.is_empty() || expected.is_empty() {
            return Err(SHAPES.into());
        }
        return Ok(Statement::ValueCheck {
            path,
            op: CheckOp::Equals,
            expected,
        });
    }
    let Some(k) = rest.iter().skip(1).position(|w| verbs.contains(w)).map(|p| p + 1) else {
        return Err(SHAPES.into());
    };
    let after = &rest[k + 1..];
    if after.is_empty() {
        return Err(SHAPES.into());
    }
    if k == 1 && !rest[0].contains('.') {
        let to = after
            .iter()
            .rposition(|w| w.eq_ignore_ascii_case("to"))
            .filter(|&p| p > 0 && p + 1 < after.len());
        let (object, recipient) = match to {
            Some(p) => (squash(&after[..p]), Some(squash(&after[p + 1..]))),
            None => (squash(after), None),
        };
        return Ok(Statement::RelCheck {
            subject: rest[0].to_string(),
            verb: rest[1].to_string(),
            object,
            recipient,
        });
    }
    Ok(Statement::ValueCheck {
        path: squash(&rest[..k]),
        op: CheckOp::Verb(rest[k].to_string()),
        expected: unquote(&squash(after)),
    })
}

pub fn parse_script(id: &str, text: &str) -> Result<Parsed<TestScript>, ParseError> {
    parse_script_with(id, text, &VerbTable::default())
}

pub fn parse_script_with(id: &str, text: &str, verbs: &VerbTable) -> Result<Parsed<TestScript>, ParseError> {
    let mut statements = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if is_ignored(line) {
            continue;
        }
        let stmt =
            parse_statement(line, verbs, &mut warnings).map_err(|expected| ParseError::new(idx + 1, expected))?;
        statements.push(stmt);
    }
    if statements.is_empty() {
        warnings.push("script has no statements".into());
    } else if !statements.iter().any(Statement::is_check) {
        warnings.push("script has no checks".into());
    }
    Ok(Parsed {
        value: TestScript {
            id: id.to_string(),
            statements,
        },
        warnings,
    })
}

/// Script text with comments, loop headers and ellipsis lines removed,
/// for annotation.
pub fn script_body(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !is_ignored(l))
        .collect::<Vec<_>>()
        .join("\n")
}
