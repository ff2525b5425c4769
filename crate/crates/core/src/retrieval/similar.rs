use std::collections::BTreeSet;

use serde::Serialize;

use super::{key_triple, normalized_keys, RetrievalError};
use crate::graphstore::GraphStore;
use crate::ontology::Ontology;
use crate::triple::{Triple, TripleKey};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityResult {
    pub doc_id: String,
    pub score: f64,
    pub shared: Vec<Triple>,
    /// Triples of the query log missing from this one.
    pub only_query: Vec<Triple>,
    /// Triples of this log missing from the query log.
    pub only_candidate: Vec<Triple>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarOptions {
    pub k: usize,
    pub normalize: bool,
    pub min_score: f64,
}

impl Default for SimilarOptions {
    fn default() -> Self {
        Self {
            k: 10,
            normalize: true,
            min_score: 0.0,
        }
    }
}

pub fn jaccard(a: &BTreeSet<TripleKey>, b: &BTreeSet<TripleKey>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn is_failed_log(graph: &GraphStore, doc_id: &str) -> Option<bool> {
    let node = graph.document_node(doc_id)?;
    if node.props.contains_key("placeholder") {
        return None;
    }
    Some(
        node.props.get("kind").map(String::as_str) == Some("log")
            && node.props.get("result").map(String::as_str) == Some("failed"),
    )
}

fn keys_of(graph: &GraphStore, ontology: &Ontology, doc_id: &str, normalize: bool) -> BTreeSet<TripleKey> {
    let triples = graph.document_triples(doc_id);
    if normalize {
        normalized_keys(&triples, ontology)
    } else {
        triples.iter().map(Triple::key).collect()
    }
}

/// Other failed logs ranked by Jaccard similarity of their triple sets.
pub fn similar_failures(
    graph: &GraphStore,
    ontology: &Ontology,
    log_id: &str,
    opts: SimilarOptions,
) -> Result<Vec<SimilarityResult>, RetrievalError> {
    match is_failed_log(graph, log_id) {
        None => return Err(RetrievalError::UnknownDocument(log_id.to_string())),
        Some(false) => return Err(RetrievalError::NotAFailedLog(log_id.to_string())),
        Some(true) => {}
    }
    let query = keys_of(graph, ontology, log_id, opts.normalize);
    let mut results: Vec<SimilarityResult> = graph
        .document_ids()
        .filter(|id| *id != log_id && is_failed_log(graph, id) == Some(true))
        .map(|id| {
            let cand = keys_of(graph, ontology, id, opts.normalize);
            SimilarityResult {
                doc_id: id.to_string(),
                score: jaccard(&query, &cand),
                shared: query.intersection(&cand).map(key_triple).collect(),
                only_query: query.difference(&cand).map(key_triple).collect(),
                only_candidate: cand.difference(&query).map(key_triple).collect(),
            }
        })
        .filter(|r| r.score >= opts.min_score)
        .collect();
    results.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    results.truncate(opts.k);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::retrieval::RetrievalError;
    use crate::testlang::{log_triples, parse_log};
    use crate::textindex::{DocKind, Document};

    fn graph_with(logs: &[(&str, &str)]) -> (GraphStore, Ontology) {
        let ont = fixtures::railway_ontology();
        let mut g = GraphStore::new();
        for (id, text) in logs {
            let log = parse_log(text).unwrap().value;
            let doc = Document::new(*id, DocKind::Log, *text).with_field("result", log.verdict.as_str());
            g.ingest(&doc, &log_triples(&log, &ont), &ont);
        }
        (g, ont)
    }

    #[test]
    fn case_study_logs_score_four_fifths() {
        let (g, ont) = graph_with(&[
            ("som", fixtures::SOM_FAILED_LOG),
            ("similar", fixtures::SIMILAR_FAILURE_LOG),
        ]);
        let res = similar_failures(&g, &ont, "som", SimilarOptions::default()).unwrap();
        assert_eq!(res.len(), 1);
        assert!((res[0].score - 0.8).abs() < 1e-12);
        assert_eq!(res[0].shared.len(), 4);
        assert_eq!(res[0].only_candidate.len(), 1);
        assert_eq!(res[0].only_candidate[0].object.as_str(), "etcs5233");
        let back = similar_failures(&g, &ont, "similar", SimilarOptions::default()).unwrap();
        assert_eq!(back[0].score, res[0].score);
    }

    #[test]
    fn identical_logs_score_one() {
        let (g, ont) = graph_with(&[("a", fixtures::SOM_FAILED_LOG), ("b", fixtures::SOM_FAILED_LOG)]);
        let res = similar_failures(&g, &ont, "a", SimilarOptions::default()).unwrap();
        assert_eq!(res[0].score, 1.0);
    }

    #[test]
    fn disjoint_logs_and_threshold() {
        let other = "Time 1 check Train capts Balise TRUE\nTime 2 check Balise contains Telegram FALSE\n";
        let (g, ont) = graph_with(&[("a", fixtures::SOM_FAILED_LOG), ("b", other)]);
        let res = similar_failures(&g, &ont, "a", SimilarOptions::default()).unwrap();
        assert_eq!(res[0].score, 0.0);
        let opts = SimilarOptions {
            min_score: 0.1,
            ..SimilarOptions::default()
        };
        assert!(similar_failures(&g, &ont, "a", opts).unwrap().is_empty());
    }

    #[test]
    fn errors() {
        let passed = "Time 1 check RBC send MA to OBU TRUE\n";
        let (g, ont) = graph_with(&[("a", fixtures::SOM_FAILED_LOG), ("p", passed)]);
        assert!(matches!(
            similar_failures(&g, &ont, "zz", SimilarOptions::default()),
            Err(RetrievalError::UnknownDocument(_))
        ));
        assert!(matches!(
            similar_failures(&g, &ont, "p", SimilarOptions::default()),
            Err(RetrievalError::NotAFailedLog(_))
        ));
        let res = similar_failures(&g, &ont, "a", SimilarOptions::default()).unwrap();
        assert!(res.is_empty());
    }
}
