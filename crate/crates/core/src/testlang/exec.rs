//! Mock executor with fault injection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::{LogEntry, Statement, TestLog, TestScript, Verdict};
use crate::concept::canonicalize;

/// Forced check outcomes keyed by `subject verb object` (relation checks)
/// or attribute path (value checks). Unmatched checks pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaultPlan {
    outcomes: BTreeMap<String, bool>,
}

impl FaultPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, pattern: &str, outcome: bool) -> Self {
        self.outcomes.insert(canonicalize(pattern), outcome);
        self
    }

    pub fn fail(self, pattern: &str) -> Self {
        self.set(pattern, false)
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = (&str, bool)> {
        self.outcomes.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn outcome(&self, statement: &Statement) -> bool {
        statement
            .check_key()
            .and_then(|k| self.outcomes.get(&k).copied())
            .unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub start: u64,
    /// Values below 1 are treated as 1.
    pub stride: u64,
}

impl Default for Clock {
    fn default() -> Self {
        Self { start: 0, stride: 1 }
    }
}

/// Runs a script with break-point semantics: the first check observed
/// false is followed by a `test failed` marker and nothing else.
pub fn run_script(script: &TestScript, plan: &FaultPlan, clock: Clock) -> TestLog {
    let stride = clock.stride.max(1);
    let mut entries = Vec::new();
    let mut verdict = Verdict::Passed;
    let mut marker = None;
    for (i, statement) in script.statements.iter().enumerate() {
        let time = clock.start + stride * i as u64;
        let observed = statement.is_check().then(|| plan.outcome(statement));
        entries.push(LogEntry {
            time,
            statement: statement.clone(),
            observed,
        });
        if observed == Some(false) {
            verdict = Verdict::Failed {
                at_time: time,
                failing_entry: Some(entries.len() - 1),
            };
            marker = Some(time + stride);
            break;
        }
    }
    TestLog {
        id: format!("{}-log", script.id),
        script_id: script.id.clone(),
        entries,
        verdict,
        marker,
    }
}
