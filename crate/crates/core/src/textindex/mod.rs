//! Inverted index with TF-IDF ranking, keyword extraction and facet counts.
//!
//! Scores use `tf(t, d) * ln(1 + N / df(t))`. There is no stemming, so
//! `send` and `sends` are distinct terms.

pub mod analyzer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

pub use analyzer::{analyze, is_stop_word, tokenize, Token};

/// Facet value counted for documents that do not declare the field.
pub const MISSING_FACET: &str = "(none)";
pub const MATCH_ALL: &str = "*:*";
pub const DEFAULT_FL: &[&str] = &["id", "title", "kind"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Requirement,
    TestDescription,
    TestScript,
    Log,
}

impl DocKind {
    pub const ALL: [DocKind; 4] = [
        DocKind::Requirement,
        DocKind::TestDescription,
        DocKind::TestScript,
        DocKind::Log,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Requirement => "requirement",
            DocKind::TestDescription => "test_description",
            DocKind::TestScript => "test_script",
            DocKind::Log => "log",
        }
    }

    /// Test descriptions and scripts both count as tests.
    pub fn is_test(self) -> bool {
        matches!(self, DocKind::TestDescription | DocKind::TestScript)
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "requirement" | "req" => Ok(DocKind::Requirement),
            "test_description" | "description" | "scenario" => Ok(DocKind::TestDescription),
            "test_script" | "script" | "test" => Ok(DocKind::TestScript),
            "log" => Ok(DocKind::Log),
            other => Err(format!(
                "unknown document kind `{other}` (expected requirement, test_description, test_script or log)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub kind: DocKind,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub links: BTreeSet<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, kind: DocKind, body: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            title: String::new(),
            body: body.into(),
            fields: BTreeMap::new(),
            links: BTreeSet::new(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_field(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.fields.insert(name.into(), value.into());
        self
    }

    pub fn with_link(mut self, id: impl Into<String>) -> Self {
        self.links.insert(id.into());
        self
    }

    /// Value of a field for filtering and faceting. `id` and `kind` are
    /// built in.
    pub fn field(&self, name: &str) -> Option<&str> {
        match name {
            "id" => Some(&self.id),
            "kind" => Some(self.kind.as_str()),
            "title" => Some(&self.title),
            _ => self.fields.get(name).map(String::as_str),
        }
    }

    fn terms(&self) -> BTreeMap<String, u32> {
        let mut tf = BTreeMap::new();
        for term in analyze(&self.title).into_iter().chain(analyze(&self.body)) {
            *tf.entry(term).or_insert(0) += 1;
        }
        tf
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("document `{0}` already exists")]
    DuplicateId(String),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("unknown facet field `{0}`")]
    UnknownFacetField(String),
    #[error("invalid filter `{0}` (expected field:value)")]
    InvalidFilter(String),
    #[error("document id must not be empty")]
    EmptyId,
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordScore {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct SearchRequest {
    pub q: String,
    #[serde(default)]
    pub fl: Option<Vec<String>>,
    #[serde(default)]
    pub facet_fields: Vec<String>,
    /// `(field, value)` filters, all of which must hold.
    #[serde(default)]
    pub filters: Vec<(String, String)>,
}

impl SearchRequest {
    pub fn new(q: impl Into<String>) -> Self {
        Self {
            q: q.into(),
            ..Self::default()
        }
    }

    pub fn fl(mut self, fields: &[&str]) -> Self {
        self.fl = Some(fields.iter().map(|f| f.to_string()).collect());
        self
    }

    pub fn facet(mut self, field: &str) -> Self {
        self.facet_fields.push(field.to_string());
        self
    }

    pub fn filter(mut self, field: &str, value: &str) -> Self {
        self.filters.push((field.to_string(), value.to_string()));
        self
    }

    /// Parses an `fq` value of the form `field:value`.
    pub fn parse_filter(fq: &str) -> Result<(String, String), IndexError> {
        match fq.split_once(':') {
            Some((f, v)) if !f.trim().is_empty() => Ok((f.trim().to_string(), v.trim().trim_matches('"').to_string())),
            _ => Err(IndexError::InvalidFilter(fq.to_string())),
        }
    }
}

/// A ranked search hit. Serializes to just the selected `fl` fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub fields: BTreeMap<String, Value>,
}

impl Serialize for Hit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.fields.len()))?;
        for (k, v) in &self.fields {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse {
    pub hits: Vec<Hit>,
    pub facets: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct TextIndex {
    docs: BTreeMap<String, Document>,
    doc_terms: BTreeMap<String, BTreeMap<String, u32>>,
    /// term -> doc id -> tf, kept sorted by doc id.
    postings: BTreeMap<String, BTreeMap<String, u32>>,
    declared_facets: BTreeSet<String>,
}

impl TextIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers facet fields that are valid even before any document
    /// declares them.
    pub fn declare_facets<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.declared_facets.extend(fields.into_iter().map(Into::into));
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs.get(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, BTreeMap::len)
    }

    pub fn tf(&self, doc_id: &str, term: &str) -> u32 {
        self.doc_terms
            .get(doc_id)
            .and_then(|t| t.get(term))
            .copied()
            .unwrap_or(0)
    }

    pub fn postings(&self, term: &str) -> impl Iterator<Item = (&str, u32)> {
        self.postings
            .get(term)
            .into_iter()
            .flat_map(|p| p.iter().map(|(id, tf)| (id.as_str(), *tf)))
    }

    pub fn index_document(&mut self, doc: Document, replace: bool) -> Result<String, IndexError> {
        if doc.id.trim().is_empty() {
            return Err(IndexError::EmptyId);
        }
        if self.docs.contains_key(&doc.id) {
            if !replace {
                return Err(IndexError::DuplicateId(doc.id));
            }
            self.remove(&doc.id);
        }
        let terms = doc.terms();
        for (term, tf) in &terms {
            self.postings
                .entry(term.clone())
                .or_default()
                .insert(doc.id.clone(), *tf);
        }
        let id = doc.id.clone();
        self.doc_terms.insert(id.clone(), terms);
        self.docs.insert(id.clone(), doc);
        Ok(id)
    }

    pub fn remove(&mut self, id: &str) -> Option<Document> {
        let doc = self.docs.remove(id)?;
        for term in self.doc_terms.remove(id).unwrap_or_default().keys() {
            if let Some(p) = self.postings.get_mut(term) {
                p.remove(id);
                if p.is_empty() {
                    self.postings.remove(term);
                }
            }
        }
        Some(doc)
    }

    fn idf(&self, term: &str) -> f64 {
        let df = self.df(term);
        if df == 0 {
            return 0.0;
        }
        (1.0 + self.docs.len() as f64 / df as f64).ln()
    }

    fn facet_known(&self, field: &str) -> bool {
        matches!(field, "kind" | "id")
            || self.declared_facets.contains(field)
            || self.docs.values().any(|d| d.fields.contains_key(field))
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse, IndexError> {
        for field in &req.facet_fields {
            if !self.facet_known(field) {
                return Err(IndexError::UnknownFacetField(field.clone()));
            }
        }
        let passes = |doc: &Document| req.filters.iter().all(|(f, v)| doc.field(f) == Some(v.as_str()));

        let mut scored: Vec<(&Document, f64)> = if req.q.trim() == MATCH_ALL {
            self.docs.values().filter(|d| passes(d)).map(|d| (d, 0.0)).collect()
        } else {
            let query: BTreeSet<String> = analyze(&req.q).into_iter().collect();
            let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
            for term in &query {
                let idf = self.idf(term);
                for (id, tf) in self.postings(term) {
                    *scores.entry(id).or_insert(0.0) += tf as f64 * idf;
                }
            }
            scores
                .into_iter()
                .map(|(id, s)| (&self.docs[id], s))
                .filter(|(d, _)| passes(d))
                .collect()
        };
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));

        let mut facets = BTreeMap::new();
        for field in &req.facet_fields {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for (doc, _) in &scored {
                let value = doc.field(field).unwrap_or(MISSING_FACET);
                *counts.entry(value.to_string()).or_insert(0) += 1;
            }
            facets.insert(field.clone(), counts);
        }

        let default_fl: Vec<String> = DEFAULT_FL.iter().map(|s| s.to_string()).collect();
        let fl = req.fl.as_ref().unwrap_or(&default_fl);
        let hits = scored
            .into_iter()
            .map(|(doc, score)| Hit {
                id: doc.id.clone(),
                score,
                fields: project(doc, score, fl),
            })
            .collect();
        Ok(SearchResponse { hits, facets })
    }

    /// Top `k` non-stop-word terms of a document by TF-IDF, ties broken
    /// lexicographically.
    pub fn top_keywords(&self, doc_id: &str, k: usize) -> Result<Vec<KeywordScore>, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let terms = self
            .doc_terms
            .get(doc_id)
            .ok_or_else(|| IndexError::UnknownDocument(doc_id.to_string()))?;
        let mut scored: Vec<KeywordScore> = terms
            .iter()
            .filter(|(t, _)| !is_stop_word(t))
            .map(|(t, tf)| KeywordScore {
                term: t.clone(),
                score: *tf as f64 * self.idf(t),
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
        scored.truncate(k);
        Ok(scored)
    }
}

fn project(doc: &Document, score: f64, fl: &[String]) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    for f in fl {
        let value = match f.as_str() {
            "score" => Value::from(score),
            "body" => Value::from(doc.body.clone()),
            "links" => Value::from(doc.links.iter().cloned().collect::<Vec<_>>()),
            other => match doc.field(other) {
                Some(v) => Value::from(v),
                None => continue,
            },
        };
        out.insert(f.clone(), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, body: &str) -> Document {
        Document::new(id, DocKind::Requirement, body)
    }

    #[test]
    fn df_counts_documents() {
        let mut idx = TextIndex::new();
        idx.index_document(doc("a", "balise balise group"), false).unwrap();
        idx.index_document(doc("b", "the balise"), false).unwrap();
        assert_eq!(idx.df("balise"), 2);
        assert_eq!(idx.tf("a", "balise"), 2);
        assert_eq!(
            idx.index_document(doc("a", "x"), false),
            Err(IndexError::DuplicateId("a".into()))
        );
        idx.index_document(doc("a", "x"), true).unwrap();
        assert_eq!(idx.df("balise"), 1);
    }

    #[test]
    fn deleted_documents_are_not_found() {
        let mut idx = TextIndex::new();
        idx.index_document(doc("a", "telegram"), false).unwrap();
        idx.remove("a");
        let resp = idx.search(&SearchRequest::new("telegram")).unwrap();
        assert!(resp.hits.is_empty());
        assert_eq!(idx.df("telegram"), 0);
    }

    #[test]
    fn facet_counts_over_logs() {
        let mut idx = TextIndex::new();
        for (id, r) in [("l1", "failed"), ("l2", "failed"), ("l3", "passed")] {
            let d = Document::new(id, DocKind::Log, "check").with_field("result", r);
            idx.index_document(d, false).unwrap();
        }
        let resp = idx.search(&SearchRequest::new("*:*").facet("result")).unwrap();
        assert_eq!(resp.hits.len(), 3);
        assert_eq!(resp.facets["result"]["failed"], 2);
        assert_eq!(resp.facets["result"]["passed"], 1);
        let resp = idx
            .search(&SearchRequest::new("*:*").facet("result").filter("result", "passed"))
            .unwrap();
        assert_eq!(resp.hits.len(), 1);
        assert_eq!(
            idx.search(&SearchRequest::new("*:*").facet("project")),
            Err(IndexError::UnknownFacetField("project".into()))
        );
    }

    #[test]
    fn field_list_limits_hit_contents() {
        let mut idx = TextIndex::new();
        let d = Document::new("v1", DocKind::TestDescription, "video stream check")
            .with_title("Video")
            .with_field("name", "camera test");
        idx.index_document(d, false).unwrap();
        let resp = idx.search(&SearchRequest::new("video").fl(&["name", "id"])).unwrap();
        let json = serde_json::to_value(&resp.hits[0]).unwrap();
        assert_eq!(json, serde_json::json!({"id": "v1", "name": "camera test"}));
        let resp = idx.search(&SearchRequest::new("zzzz").facet("kind")).unwrap();
        assert!(resp.hits.is_empty());
        assert!(resp.facets["kind"].is_empty());
    }

    #[test]
    fn ranking_and_ties() {
        let mut idx = TextIndex::new();
        idx.index_document(doc("b", "rbc rbc"), false).unwrap();
        idx.index_document(doc("a", "rbc"), false).unwrap();
        idx.index_document(doc("c", "rbc"), false).unwrap();
        let ids: Vec<_> = idx
            .search(&SearchRequest::new("RBC"))
            .unwrap()
            .hits
            .into_iter()
            .map(|h| h.id)
            .collect();
        assert_eq!(ids, ["b", "a", "c"]);
    }

    #[test]
    fn keywords_in_single_doc_corpus_follow_frequency() {
        let mut idx = TextIndex::new();
        idx.index_document(doc("a", "obu obu obu rbc rbc ma the the the the"), false)
            .unwrap();
        let kws = idx.top_keywords("a", 10).unwrap();
        let terms: Vec<_> = kws.iter().map(|k| k.term.as_str()).collect();
        assert_eq!(terms, ["obu", "rbc", "ma"]);
        assert!((kws[2].score - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(idx.top_keywords("zz", 1), Err(IndexError::UnknownDocument(_))));
    }
}
