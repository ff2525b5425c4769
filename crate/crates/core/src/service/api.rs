//! Request and response shapes shared by the CLI and the HTTP API.

use serde::{Deserialize, Serialize};

use super::{ServiceError, Store};
use crate::annotator::{Annotation, Annotator};
use crate::concept::ConceptName;
use crate::graphstore::TriplePattern;
use crate::ontology::{EntityKind, ExpansionPolicy, Ontology};
use crate::retrieval::{
    self, expand_triple_query, DocumentHit, ExpandedQuery, KindFilter, LinkSource, SimilarOptions, SimilarityResult,
    TraceMatrix,
};
use crate::testlang::{parse_script_with, render_log, run_script, Clock, FaultPlan, TestLog};
use crate::textindex::{DocKind, SearchRequest, SearchResponse};

use super::store::{IngestReport, IngestRequest};

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub documents: usize,
    pub triples: usize,
    pub classes: usize,
    pub relations: usize,
    pub individuals: usize,
}

pub fn health(store: &Store) -> Health {
    let ont = store.ontology();
    Health {
        status: "ok",
        documents: store.index().len(),
        triples: store.graph().all_triples().len(),
        classes: ont.classes().count(),
        relations: ont.relations().count(),
        individuals: ont.individuals().count(),
    }
}

#[derive(Debug, Serialize)]
pub struct TreeNode {
    pub name: ConceptName,
    pub label: String,
    pub kind: EntityKind,
    /// Other members of the equivalence group.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub equivalents: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
}

fn class_node(ont: &Ontology, name: &ConceptName) -> TreeNode {
    let class = ont.class(name).expect("tree visits declared classes");
    let equivalents = ont
        .equivalents(name)
        .iter()
        .filter(|n| *n != name)
        .map(|n| ont.display_name(n).to_string())
        .collect();
    let mut children: Vec<TreeNode> = ont
        .direct_subclass_representatives(name)
        .into_iter()
        .map(|c| class_node(ont, c))
        .collect();
    children.extend(ont.direct_individuals(name).into_iter().map(|i| TreeNode {
        name: i.name.clone(),
        label: i.display.clone(),
        kind: EntityKind::Individual,
        equivalents: Vec::new(),
        labels: i.extra_labels.clone(),
        children: Vec::new(),
    }));
    TreeNode {
        name: name.clone(),
        label: class.display.clone(),
        kind: EntityKind::Class,
        equivalents,
        labels: class.extra_labels.clone(),
        children,
    }
}

/// Classes nested under their superclasses, one node per equivalence group,
/// individuals as leaves.
pub fn ontology_tree(ont: &Ontology) -> Vec<TreeNode> {
    ont.root_classes().into_iter().map(|r| class_node(ont, r)).collect()
}

#[derive(Debug, Serialize)]
pub struct ConceptExpansion {
    pub term: String,
    pub policy: ExpansionPolicy,
    pub concepts: Vec<ConceptName>,
    pub labels: Vec<String>,
}

pub fn expand_concept(ont: &Ontology, term: &str, policy: ExpansionPolicy) -> Result<ConceptExpansion, ServiceError> {
    let concepts: Vec<ConceptName> = ont.expand_concept(term, policy)?.into_iter().collect();
    let labels = concepts.iter().map(|c| ont.display_name(c).to_string()).collect();
    Ok(ConceptExpansion {
        term: term.to_string(),
        policy,
        concepts,
        labels,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnnotateRequest {
    pub text: String,
}

pub fn annotate(ont: &Ontology, text: &str) -> Annotation {
    Annotator::new(ont).annotate(text)
}

pub fn ingest(store: &mut Store, req: IngestRequest) -> Result<IngestReport, ServiceError> {
    store.ingest(req)
}

pub fn search(store: &Store, req: &SearchRequest) -> Result<SearchResponse, ServiceError> {
    Ok(store.index().search(req)?)
}

/// A triple query; absent, empty, `?` and `*` terms are wildcards.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct SemanticQuery {
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub predicate: Option<String>,
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub policy: Option<ExpansionPolicy>,
    /// `requirement`, `test`, `log` or a single document kind.
    #[serde(default)]
    pub kind: Option<String>,
}

impl SemanticQuery {
    pub fn pattern(&self) -> TriplePattern {
        TriplePattern::parse(
            self.subject.as_deref().unwrap_or(""),
            self.predicate.as_deref().unwrap_or(""),
            self.object.as_deref().unwrap_or(""),
        )
    }
}

#[derive(Debug, Serialize)]
pub struct SemanticSearchResult {
    pub query: ExpandedQuery,
    pub hits: Vec<DocumentHit>,
}

pub fn expand_triple(store: &Store, q: &SemanticQuery) -> ExpandedQuery {
    expand_triple_query(&q.pattern(), store.ontology(), q.policy.unwrap_or(store.policy))
}

pub fn semantic_search(store: &Store, q: &SemanticQuery) -> Result<SemanticSearchResult, ServiceError> {
    let kinds: Option<KindFilter> = match &q.kind {
        Some(k) if !k.trim().is_empty() => Some(k.parse().map_err(ServiceError::BadRequest)?),
        _ => None,
    };
    let query = expand_triple(store, q);
    let hits = retrieval::semantic_search(store.graph(), store.ontology(), &query, kinds.as_ref())?;
    Ok(SemanticSearchResult { query, hits })
}

#[derive(Debug, Serialize)]
pub struct SimilarView {
    pub log_id: String,
    pub results: Vec<SimilarityResult>,
}

pub fn similar(store: &Store, log_id: &str, k: usize) -> Result<SimilarView, ServiceError> {
    if k == 0 {
        return Err(ServiceError::BadRequest("k must be at least 1".into()));
    }
    let opts = SimilarOptions {
        k,
        ..SimilarOptions::default()
    };
    let results = retrieval::similar_failures(store.graph(), store.ontology(), log_id, opts)?;
    Ok(SimilarView {
        log_id: log_id.to_string(),
        results,
    })
}

/// Stored requirements against stored test descriptions and scripts,
/// unless explicit id lists are given.
pub fn traceability(
    store: &Store,
    mode: LinkSource,
    requirements: Option<Vec<String>>,
    tests: Option<Vec<String>>,
) -> Result<TraceMatrix, ServiceError> {
    let reqs = requirements.unwrap_or_else(|| store.ids_of(&[DocKind::Requirement]));
    let tests = tests.unwrap_or_else(|| store.ids_of(&[DocKind::TestDescription, DocKind::TestScript]));
    Ok(retrieval::traceability(
        store.graph(),
        store.ontology(),
        &reqs,
        &tests,
        mode,
        store.reviews(),
    )?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewRequest {
    pub requirement: String,
    pub test: String,
    #[serde(default = "default_true")]
    pub review: bool,
}

fn default_true() -> bool {
    true
}

pub fn review(store: &mut Store, req: &ReviewRequest) -> Result<ReviewRequest, ServiceError> {
    store.set_review(&req.requirement, &req.test, req.review)?;
    Ok(req.clone())
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct RunRequest {
    /// Script text, or the id of a stored script.
    #[serde(default)]
    pub script: Option<String>,
    #[serde(default)]
    pub script_id: Option<String>,
    /// Log id, `<script id>-log` by default.
    #[serde(default)]
    pub log_id: Option<String>,
    /// Checks forced to fail, as `subject verb object` or attribute path.
    #[serde(default)]
    pub fail: Vec<String>,
    #[serde(default)]
    pub faults: FaultPlan,
    #[serde(default)]
    pub start: Option<u64>,
    #[serde(default)]
    pub stride: Option<u64>,
    /// Ingest the resulting log.
    #[serde(default)]
    pub ingest: bool,
}

#[derive(Debug, Serialize)]
pub struct RunOutcome {
    pub log: TestLog,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<IngestReport>,
    pub warnings: Vec<String>,
}

/// Executes a script against the mock system. Only an `ingest` request
/// writes to the store.
pub fn run(store: &mut Store, req: &RunRequest) -> Result<RunOutcome, ServiceError> {
    let (script_id, text) = match (&req.script, &req.script_id) {
        (Some(text), id) => (id.clone().unwrap_or_else(|| "script".into()), text.clone()),
        (None, Some(id)) => match store.document(id) {
            Some(d) if d.kind == DocKind::TestScript => (id.clone(), d.body.clone()),
            Some(_) => return Err(ServiceError::BadRequest(format!("`{id}` is not a test script"))),
            None => return Err(ServiceError::UnknownDocument(id.clone())),
        },
        (None, None) => {
            return Err(ServiceError::BadRequest(
                "either script or script_id is required".into(),
            ))
        }
    };
    let parsed = parse_script_with(&script_id, &text, store.verbs())?;
    let mut plan = req.faults.clone();
    for f in &req.fail {
        plan = plan.fail(f);
    }
    let clock = Clock {
        start: req.start.unwrap_or(store.clock.start),
        stride: req.stride.unwrap_or(store.clock.stride),
    };
    let mut log = run_script(&parsed.value, &plan, clock);
    if let Some(id) = &req.log_id {
        log.id = id.clone();
    }
    let rendered = render_log(&log);
    let report = if req.ingest {
        let mut ingest = IngestRequest::new(DocKind::Log, rendered.clone()).with_id(log.id.clone());
        ingest.replace = true;
        Some(store.ingest(ingest)?)
    } else {
        None
    };
    Ok(RunOutcome {
        log,
        text: rendered,
        report,
        warnings: parsed.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::testlang::Verdict;

    fn store() -> Store {
        Store::in_memory(fixtures::railway_ontology(), &["kind".into(), "result".into()])
    }

    #[test]
    fn tree_groups_equivalents() {
        let ont = fixtures::railway_ontology();
        let tree = ontology_tree(&ont);
        let obu = tree.iter().find(|n| n.label == "OBU").unwrap();
        assert!(!tree.iter().any(|n| n.label == "SSB"));
        let radio = tree.iter().find(|n| n.label == "Radio Message").unwrap();
        assert!(radio.children.iter().any(|c| c.label == "Position Report"));
        assert_eq!(obu.equivalents.len(), 3);
        assert!(obu
            .children
            .iter()
            .any(|c| c.label == "OBU1" && c.kind == EntityKind::Individual));
        let json = serde_json::to_value(&tree).unwrap();
        assert!(json.as_array().unwrap().iter().all(|n| n["kind"] == "class"));
    }

    #[test]
    fn expansion_view() {
        let ont = fixtures::railway_ontology();
        let e = expand_concept(&ont, "OBU", ExpansionPolicy::EquivalentsOnly).unwrap();
        assert_eq!(e.labels.len(), 4);
        assert!(e.labels.contains(&"ERTMS-ETCS on-board equipment".to_string()));
        assert!(matches!(
            expand_concept(&ont, "gizmo", ExpansionPolicy::EquivalentsOnly),
            Err(ref err) if err.status() == 404
        ));
    }

    #[test]
    fn run_then_find_similar() {
        let mut s = store();
        let req = RunRequest {
            script: Some(fixtures::SOM_SCRIPT.into()),
            script_id: Some("som".into()),
            fail: vec!["RBC send MA".into()],
            start: Some(1000),
            ingest: true,
            ..RunRequest::default()
        };
        let out = run(&mut s, &req).unwrap();
        assert!(matches!(out.log.verdict, Verdict::Failed { .. }));
        assert_eq!(out.report.unwrap().doc_id, "som-log");
        assert!(similar(&s, "som-log", 5).unwrap().results.is_empty());
        assert_eq!(similar(&s, "missing", 5).unwrap_err().status(), 404);
        assert_eq!(similar(&s, "som-log", 0).unwrap_err().status(), 400);
    }

    #[test]
    fn semantic_query_wildcards() {
        let s = store();
        let q = SemanticQuery {
            subject: Some("OBU".into()),
            predicate: Some("use".into()),
            object: Some("linking information".into()),
            ..SemanticQuery::default()
        };
        assert_eq!(semantic_search(&s, &q).unwrap().query.patterns.len(), 4);
        let all = SemanticQuery::default();
        assert_eq!(semantic_search(&s, &all).unwrap_err().status(), 400);
        let bad_kind = SemanticQuery {
            kind: Some("poem".into()),
            ..q
        };
        assert_eq!(semantic_search(&s, &bad_kind).unwrap_err().status(), 400);
    }
}
