use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Config, ServiceError};
use crate::annotator::infer_document_triples;
use crate::fixtures;
use crate::graphstore::GraphStore;
use crate::ontology::{ExpansionPolicy, Ontology};
use crate::retrieval::ReviewMarks;
use crate::testlang::{log_triples, parse_log_with, parse_script_with, script_body, Clock, VerbTable};
use crate::textindex::{DocKind, Document, IndexError, KeywordScore, TextIndex};
use crate::triple::{Provenance, Triple};

const DOCUMENTS_FILE: &str = "documents.json";
const GRAPH_FILE: &str = "graph.sgf";
const REVIEWS_FILE: &str = "reviews.json";
const ONTOLOGY_FILE: &str = "ontology.ont";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestRequest {
    /// Taken from a `// log-id:` header for logs when absent.
    #[serde(default)]
    pub id: Option<String>,
    pub kind: DocKind,
    pub body: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub links: Vec<String>,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    /// Replace a stored document with the same id instead of failing.
    #[serde(default)]
    pub replace: bool,
}

impl IngestRequest {
    pub fn new(kind: DocKind, body: impl Into<String>) -> Self {
        Self {
            id: None,
            kind,
            body: body.into(),
            title: None,
            links: Vec::new(),
            fields: BTreeMap::new(),
            replace: false,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_link(mut self, id: impl Into<String>) -> Self {
        self.links.push(id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub doc_id: String,
    pub kind: DocKind,
    pub title: String,
    /// Distinct indexed terms.
    pub keywords: usize,
    pub top_keywords: Vec<KeywordScore>,
    pub triples_asserted: usize,
    pub triples_derived: usize,
    pub triples: Vec<Triple>,
    pub replaced: bool,
    pub warnings: Vec<String>,
}

/// Ontology, text index, graph and review marks, optionally backed by a
/// data directory.
#[derive(Debug, Clone)]
pub struct Store {
    ontology: Arc<Ontology>,
    verbs: VerbTable,
    index: TextIndex,
    graph: GraphStore,
    reviews: ReviewMarks,
    dir: Option<PathBuf>,
    pub policy: ExpansionPolicy,
    pub clock: Clock,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn default_title(body: &str) -> String {
    let line = body
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("//"))
        .unwrap_or("");
    line.chars().take(80).collect()
}

impl Store {
    pub fn in_memory(ontology: Ontology, facets: &[String]) -> Self {
        let mut index = TextIndex::new();
        index.declare_facets(facets.iter().map(String::as_str));
        Self {
            verbs: VerbTable::from_ontology(&ontology),
            ontology: Arc::new(ontology),
            index,
            graph: GraphStore::new(),
            reviews: ReviewMarks::new(),
            dir: None,
            policy: ExpansionPolicy::default(),
            clock: Clock::default(),
        }
    }

    /// Opens (creating if needed) the store in `config.data_dir`. The
    /// ontology comes from the config, else `ontology.ont` in the data
    /// directory, else the bundled railway ontology.
    pub fn open(config: &Config) -> Result<Self, ServiceError> {
        config.ensure_data_dir()?;
        let dir = config.data_dir.clone();
        let ontology_path = config.ontology.clone().or_else(|| {
            let p = dir.join(ONTOLOGY_FILE);
            p.is_file().then_some(p)
        });
        let ontology = match ontology_path {
            Some(p) => Ontology::load(&std::fs::read_to_string(&p)?)?,
            None => fixtures::railway_ontology(),
        };
        let mut store = Self::in_memory(ontology, &config.facets);
        store.policy = config.expansion_policy;
        store.clock = config.clock;
        store.dir = Some(dir.clone());

        let docs_path = dir.join(DOCUMENTS_FILE);
        let documents: Vec<Document> = if docs_path.is_file() {
            serde_json::from_str(&std::fs::read_to_string(&docs_path)?)
                .map_err(|e| ServiceError::CorruptStore(format!("{DOCUMENTS_FILE}: {e}")))?
        } else {
            Vec::new()
        };
        for doc in documents {
            store.index.index_document(doc, false)?;
        }
        let graph_path = dir.join(GRAPH_FILE);
        if graph_path.is_file() {
            store.graph = GraphStore::load(&graph_path)?;
            let stored: Vec<&str> = store
                .graph
                .document_ids()
                .filter(|id| {
                    store
                        .graph
                        .document_node(id)
                        .is_some_and(|n| !n.props.contains_key("placeholder"))
                })
                .collect();
            let indexed: Vec<&str> = store.index.documents().map(|d| d.id.as_str()).collect();
            if stored.len() != indexed.len() || indexed.iter().any(|id| !stored.contains(id)) {
                return Err(ServiceError::CorruptStore(format!(
                    "{GRAPH_FILE} and {DOCUMENTS_FILE} list different documents"
                )));
            }
        } else if !store.index.is_empty() {
            return Err(ServiceError::CorruptStore(format!("{GRAPH_FILE} is missing")));
        }
        let reviews_path = dir.join(REVIEWS_FILE);
        if reviews_path.is_file() {
            store.reviews = serde_json::from_str(&std::fs::read_to_string(&reviews_path)?)
                .map_err(|e| ServiceError::CorruptStore(format!("{REVIEWS_FILE}: {e}")))?;
        }
        Ok(store)
    }

    /// An in-memory copy; changes to it are never written to disk.
    pub fn detached(&self) -> Store {
        Store {
            dir: None,
            ..self.clone()
        }
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn shared_ontology(&self) -> Arc<Ontology> {
        Arc::clone(&self.ontology)
    }

    pub fn verbs(&self) -> &VerbTable {
        &self.verbs
    }

    pub fn index(&self) -> &TextIndex {
        &self.index
    }

    pub fn graph(&self) -> &GraphStore {
        &self.graph
    }

    pub fn reviews(&self) -> &ReviewMarks {
        &self.reviews
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.index.get(id)
    }

    /// Ids of stored documents of any of the given kinds, sorted.
    pub fn ids_of(&self, kinds: &[DocKind]) -> Vec<String> {
        let mut ids: Vec<String> = self
            .index
            .documents()
            .filter(|d| kinds.contains(&d.kind))
            .map(|d| d.id.clone())
            .collect();
        ids.sort();
        ids
    }

    pub fn save(&self) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let mut docs: Vec<&Document> = self.index.documents().collect();
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        let json = serde_json::to_vec_pretty(&docs).expect("documents serialize");
        write_atomic(&dir.join(DOCUMENTS_FILE), &json)?;
        self.graph.save(&dir.join(GRAPH_FILE))?;
        self.save_reviews()
    }

    fn save_reviews(&self) -> Result<(), ServiceError> {
        if let Some(dir) = &self.dir {
            let json = serde_json::to_vec_pretty(&self.reviews).expect("reviews serialize");
            write_atomic(&dir.join(REVIEWS_FILE), &json)?;
        }
        Ok(())
    }

    /// Parses and annotates first, then indexes and updates the graph. A
    /// failure at any step leaves the store as it was.
    pub fn ingest(&mut self, req: IngestRequest) -> Result<IngestReport, ServiceError> {
        let mut warnings = Vec::new();
        let mut fields = req.fields.clone();
        let mut links = req.links.clone();
        let (id, triples) = match req.kind {
            DocKind::Log => {
                let parsed = parse_log_with(&req.body, &self.verbs)?;
                warnings.extend(parsed.warnings);
                let log = parsed.value;
                let id = req
                    .id
                    .clone()
                    .filter(|s| !s.trim().is_empty())
                    .unwrap_or(log.id.clone());
                fields.insert("result".into(), log.verdict.as_str().into());
                if !log.script_id.is_empty() {
                    fields.insert("script_id".into(), log.script_id.clone());
                    links.push(log.script_id.clone());
                }
                (id, log_triples(&log, &self.ontology))
            }
            DocKind::TestScript => {
                let id = req.id.clone().unwrap_or_default();
                let parsed = parse_script_with(&id, &req.body, &self.verbs)?;
                warnings.extend(parsed.warnings);
                (id, infer_document_triples(&script_body(&req.body), &self.ontology))
            }
            DocKind::Requirement | DocKind::TestDescription => (
                req.id.clone().unwrap_or_default(),
                infer_document_triples(&req.body, &self.ontology),
            ),
        };
        let id = id.trim().to_string();
        if id.is_empty() {
            return Err(IndexError::EmptyId.into());
        }
        let previous = self.index.get(&id).cloned();
        if previous.is_some() && !req.replace {
            return Err(IndexError::DuplicateId(id).into());
        }
        let previous_triples = self.graph.document_triples(&id);

        let mut doc = Document::new(id.clone(), req.kind, req.body.clone())
            .with_title(req.title.clone().unwrap_or_else(|| default_title(&req.body)));
        doc.fields = fields;
        links.retain(|l| *l != id);
        doc.links = links.into_iter().collect();

        self.index.index_document(doc.clone(), true)?;
        self.graph.ingest(&doc, &triples, &self.ontology);
        if let Err(e) = self.save() {
            match &previous {
                Some(prev) => {
                    self.index.index_document(prev.clone(), true)?;
                    self.graph.ingest(prev, &previous_triples, &self.ontology);
                }
                None => {
                    self.index.remove(&id);
                    self.graph.remove_document(&id);
                }
            }
            return Err(e);
        }

        let derived = triples
            .iter()
            .filter(|t| t.provenance == Provenance::InverseDerived)
            .count();
        let all_keywords = self.index.top_keywords(&id, usize::MAX)?;
        Ok(IngestReport {
            doc_id: id,
            kind: req.kind,
            title: doc.title,
            keywords: all_keywords.len(),
            top_keywords: all_keywords.into_iter().take(10).collect(),
            triples_asserted: triples.len() - derived,
            triples_derived: derived,
            triples,
            replaced: previous.is_some(),
            warnings,
        })
    }

    /// Marks or clears a (requirement, test) cell for review.
    pub fn set_review(&mut self, requirement: &str, test: &str, marked: bool) -> Result<(), ServiceError> {
        match self.document(requirement) {
            Some(d) if d.kind == DocKind::Requirement => {}
            Some(_) => {
                return Err(ServiceError::BadRequest(format!(
                    "`{requirement}` is not a requirement"
                )))
            }
            None => return Err(ServiceError::UnknownDocument(requirement.into())),
        }
        match self.document(test) {
            Some(d) if d.kind.is_test() => {}
            Some(_) => return Err(ServiceError::BadRequest(format!("`{test}` is not a test"))),
            None => return Err(ServiceError::UnknownDocument(test.into())),
        }
        let key = (requirement.to_string(), test.to_string());
        let changed = if marked {
            self.reviews.insert(key.clone())
        } else {
            self.reviews.remove(&key)
        };
        if changed {
            if let Err(e) = self.save_reviews() {
                if marked {
                    self.reviews.remove(&key);
                } else {
                    self.reviews.insert(key);
                }
                return Err(e);
            }
        }
        Ok(())
    }
}
