//! Query expansion, semantic document search, similar-failure ranking and
//! traceability.

mod similar;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::annotator::{inverse_closure, ClosureCheck};
use crate::concept::ConceptName;
use crate::graphstore::{GraphError, GraphStore, MatchOptions, TriplePattern};
use crate::ontology::{ExpansionPolicy, Ontology};
use crate::textindex::DocKind;
use crate::triple::{dedup_triples, Triple, TripleKey};

pub use similar::{jaccard, similar_failures, SimilarOptions, SimilarityResult};
pub use trace::{traceability, Cell, LinkSource, ReviewMarks, TraceMatrix};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("document `{0}` is not a failed log")]
    NotAFailedLog(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpandedQuery {
    pub original: TriplePattern,
    pub patterns: Vec<TriplePattern>,
    pub policy: ExpansionPolicy,
    pub warnings: Vec<String>,
}

fn expand_position(
    term: &Option<ConceptName>,
    ontology: &Ontology,
    policy: ExpansionPolicy,
    warnings: &mut Vec<String>,
) -> Vec<Option<ConceptName>> {
    let Some(term) = term else {
        return vec![None];
    };
    let mut set = BTreeSet::from([term.clone()]);
    match ontology.expand_concept(term.as_str(), policy) {
        Ok(expanded) => set.extend(expanded),
        Err(_) => warnings.push(format!("`{term}` is not in the ontology; used as written")),
    }
    set.into_iter().map(Some).collect()
}

/// Replaces subject and object by every member of their expansion set. The
/// predicate is only mapped from an alias label to its relation name.
pub fn expand_triple_query(pattern: &TriplePattern, ontology: &Ontology, policy: ExpansionPolicy) -> ExpandedQuery {
    let mut warnings = Vec::new();
    let subjects = expand_position(&pattern.subject, ontology, policy, &mut warnings);
    let objects = expand_position(&pattern.object, ontology, policy, &mut warnings);
    let predicates: Vec<Option<ConceptName>> = match &pattern.predicate {
        None => vec![None],
        Some(p) => match ontology.resolve_relation(p.as_str()) {
            Some(rel) => BTreeSet::from([p.clone(), rel.clone()]).into_iter().map(Some).collect(),
            None => {
                warnings.push(format!("`{p}` is not a relation of the ontology; used as written"));
                vec![Some(p.clone())]
            }
        },
    };
    let mut patterns = BTreeSet::new();
    for s in &subjects {
        for p in &predicates {
            for o in &objects {
                patterns.insert(TriplePattern {
                    subject: s.clone(),
                    predicate: p.clone(),
                    object: o.clone(),
                });
            }
        }
    }
    ExpandedQuery {
        original: pattern.clone(),
        patterns: patterns.into_iter().collect(),
        policy,
        warnings,
    }
}

/// Set of document kinds a search is restricted to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KindFilter(pub BTreeSet<DocKind>);

impl FromStr for KindFilter {
    type Err = String;

    /// `requirement`, `test` (descriptions and scripts), `log`, or any
    /// single document kind.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("test") || s.eq_ignore_ascii_case("tests") {
            return Ok(KindFilter(BTreeSet::from([
                DocKind::TestDescription,
                DocKind::TestScript,
            ])));
        }
        Ok(KindFilter(BTreeSet::from([s.parse::<DocKind>()?])))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentHit {
    pub doc_id: String,
    pub kind: String,
    pub matched_patterns: Vec<TriplePattern>,
    pub matched_triples: Vec<Triple>,
}

/// Documents whose stored triples match any expanded pattern (subclass
/// aware), ranked by distinct matched patterns, then matched triples, then
/// id.
pub fn semantic_search(
    graph: &GraphStore,
    ontology: &Ontology,
    query: &ExpandedQuery,
    kinds: Option<&KindFilter>,
) -> Result<Vec<DocumentHit>, RetrievalError> {
    let mut per_doc: BTreeMap<String, (BTreeSet<TriplePattern>, BTreeSet<Triple>)> = BTreeMap::new();
    for pattern in &query.patterns {
        for m in graph.match_pattern(pattern, MatchOptions::subclass_aware(), ontology)? {
            let entry = per_doc.entry(m.source_doc).or_default();
            entry.0.insert(pattern.clone());
            entry.1.insert(m.triple);
        }
    }
    let mut hits: Vec<DocumentHit> = per_doc
        .into_iter()
        .filter_map(|(doc_id, (patterns, triples))| {
            let kind = graph
                .document_node(&doc_id)
                .and_then(|n| n.props.get("kind"))
                .cloned()
                .unwrap_or_default();
            if let Some(KindFilter(allowed)) = kinds {
                let k = kind.parse::<DocKind>().ok()?;
                if !allowed.contains(&k) {
                    return None;
                }
            }
            Some(DocumentHit {
                doc_id,
                kind,
                matched_patterns: patterns.into_iter().collect(),
                matched_triples: triples.into_iter().collect(),
            })
        })
        .collect();
    hits.sort_by(|a, b| {
        b.matched_patterns
            .len()
            .cmp(&a.matched_patterns.len())
            .then(b.matched_triples.len().cmp(&a.matched_triples.len()))
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Ok(hits)
}

/// Maps an entity to its class (individuals) and then to the first declared
/// member of its equivalence group. Unknown names are kept.
pub fn normalize_entity(name: &ConceptName, ontology: &Ontology) -> ConceptName {
    let Some(entity) = ontology.resolve_name(name) else {
        return name.clone();
    };
    let class = ontology.class_of_entity(entity.name).unwrap_or(entity.name);
    ontology.group_representative(class).unwrap_or(class).clone()
}

/// Class-normalized, inverse-closed triple keys.
pub fn normalized_keys(triples: &[Triple], ontology: &Ontology) -> BTreeSet<TripleKey> {
    let normalized = triples.iter().map(|t| Triple {
        subject: normalize_entity(&t.subject, ontology),
        predicate: t.predicate.clone(),
        object: normalize_entity(&t.object, ontology),
        counterpart: t.counterpart.as_ref().map(|c| normalize_entity(c, ontology)),
        provenance: t.provenance,
    });
    inverse_closure(dedup_triples(normalized), ontology, ClosureCheck::None)
        .iter()
        .map(Triple::key)
        .collect()
}

fn key_triple(key: &TripleKey) -> Triple {
    Triple::asserted(key.0.clone(), key.1.clone(), key.2.clone())
}
