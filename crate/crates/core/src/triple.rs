use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::concept::ConceptName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Asserted,
    InverseDerived,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Asserted => "asserted",
            Provenance::InverseDerived => "inverse-derived",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "asserted" => Some(Provenance::Asserted),
            "inverse-derived" => Some(Provenance::InverseDerived),
            _ => None,
        }
    }
}

/// A `(subject, predicate, object)` statement.
///
/// `counterpart` is the other party of a directed exchange, e.g. the
/// recipient in `RBC send MA to OBU`. Inverse closure uses it as the subject
/// of the derived triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: ConceptName,
    pub predicate: ConceptName,
    pub object: ConceptName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<ConceptName>,
    pub provenance: Provenance,
}

pub type TripleKey = (ConceptName, ConceptName, ConceptName);

impl Triple {
    pub fn asserted(subject: ConceptName, predicate: ConceptName, object: ConceptName) -> Self {
        Self {
            subject,
            predicate,
            object,
            counterpart: None,
            provenance: Provenance::Asserted,
        }
    }

    pub fn with_counterpart(mut self, counterpart: Option<ConceptName>) -> Self {
        self.counterpart = counterpart;
        self
    }

    pub fn key(&self) -> TripleKey {
        (self.subject.clone(), self.predicate.clone(), self.object.clone())
    }

    /// `[s, p, o, provenance]`, the wire form used by annotation results.
    pub fn to_row(&self) -> [&str; 4] {
        [
            self.subject.as_str(),
            self.predicate.as_str(),
            self.object.as_str(),
            self.provenance.as_str(),
        ]
    }
}

/// Deduplicates triples by `(s, p, o)`. An asserted triple wins over an
/// inverse-derived one with the same key, and a known counterpart is kept.
pub fn dedup_triples(triples: impl IntoIterator<Item = Triple>) -> Vec<Triple> {
    let mut by_key: BTreeMap<TripleKey, Triple> = BTreeMap::new();
    for t in triples {
        match by_key.get_mut(&t.key()) {
            None => {
                by_key.insert(t.key(), t);
            }
            Some(existing) => {
                if t.provenance < existing.provenance {
                    existing.provenance = t.provenance;
                }
                if existing.counterpart.is_none() {
                    existing.counterpart = t.counterpart;
                }
            }
        }
    }
    by_key.into_values().collect()
}
