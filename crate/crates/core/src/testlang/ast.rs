use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::canonicalize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    /// `equals to`
    Equals,
    /// A relation verb as written, e.g. `contains`.
    Verb(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statement {
    SetState {
        entity: String,
        /// Empty for template lines such as `State[i]= initial_state[i]`.
        variable: String,
        value: String,
    },
    ForceState {
        entity: String,
        variable: String,
        value: String,
    },
    Stimulate {
        component: String,
        /// Empty when the stimulus has no `with` clause.
        input: String,
    },
    RelCheck {
        subject: String,
        verb: String,
        object: String,
        recipient: Option<String>,
    },
    ValueCheck {
        path: String,
        op: CheckOp,
        expected: String,
    },
}

impl Statement {
    pub fn is_check(&self) -> bool {
        matches!(self, Statement::RelCheck { .. } | Statement::ValueCheck { .. })
    }

    /// Key used by fault plans: `subject verb object` for relation checks,
    /// the attribute path for value checks.
    pub fn check_key(&self) -> Option<String> {
        match self {
            Statement::RelCheck {
                subject, verb, object, ..
            } => Some(canonicalize(&format!("{subject} {verb} {object}"))),
            Statement::ValueCheck { path, .. } => Some(canonicalize(path)),
            _ => None,
        }
    }
}

/// Canonical printer. `parse_statement` reads this form back unchanged.
impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::SetState {
                entity,
                variable,
                value,
            }
            | Statement::ForceState {
                entity,
                variable,
                value,
            } => {
                let kw = if matches!(self, Statement::SetState { .. }) {
                    "set"
                } else {
                    "force"
                };
                if variable.is_empty() {
                    write!(f, "{kw} {entity} = {value}")
                } else {
                    write!(f, "{kw} {entity}.{variable} = {value}")
                }
            }
            Statement::Stimulate { component, input } => {
                if input.is_empty() {
                    write!(f, "stimulate {component}")
                } else {
                    write!(f, "stimulate {component} with {input}")
                }
            }
            Statement::RelCheck {
                subject,
                verb,
                object,
                recipient,
            } => {
                write!(f, "check {subject} {verb} {object}")?;
                if let Some(r) = recipient {
                    write!(f, " to {r}")?;
                }
                Ok(())
            }
            Statement::ValueCheck { path, op, expected } => match op {
                CheckOp::Equals => write!(f, "check {path} equals to {expected}"),
                CheckOp::Verb(v) => write!(f, "check {path} {v} {expected}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestScript {
    pub id: String,
    pub statements: Vec<Statement>,
}

impl TestScript {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.statements {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    pub fn checks(&self) -> impl Iterator<Item = &Statement> {
        self.statements.iter().filter(|s| s.is_check())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time: u64,
    pub statement: Statement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Passed,
    Failed {
        at_time: u64,
        /// Index of the first check observed false, if any.
        failing_entry: Option<usize>,
    },
}

impl Verdict {
    pub fn is_failed(&self) -> bool {
        matches!(self, Verdict::Failed { .. })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Passed => "passed",
            Verdict::Failed { .. } => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestLog {
    pub id: String,
    pub script_id: String,
    pub entries: Vec<LogEntry>,
    pub verdict: Verdict,
    /// Tick of the terminal `test failed` line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<u64>,
}

impl TestLog {
    /// The maximal run of check entries that ends the log.
    pub fn final_check_block(&self) -> &[LogEntry] {
        let start = self
            .entries
            .iter()
            .rposition(|e| !e.statement.is_check())
            .map_or(0, |i| i + 1);
        &self.entries[start..]
    }

    pub fn failing_entry(&self) -> Option<&LogEntry> {
        match self.verdict {
            Verdict::Failed {
                failing_entry: Some(i), ..
            } => self.entries.get(i),
            _ => None,
        }
    }
}

/// A parse result with non-fatal warnings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}
