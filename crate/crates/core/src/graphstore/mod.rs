//! Property graph of document nodes, entity nodes and triple edges.

mod file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::ConceptName;
use crate::ontology::{EntityKind, Ontology};
use crate::textindex::Document;
use crate::triple::{Provenance, Triple};

pub use file::FORMAT_HEADER;

pub const MENTIONS: &str = "MENTIONS";
pub const LINKED_TO: &str = "LINKED_TO";

pub type NodeId = u64;
pub type Props = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("pattern has no bound position; pass allow_all to list every triple")]
    AllWildcardWithoutFlag,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported graph file format: {0}")]
    FormatVersion(String),
    #[error("corrupt graph file at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeLabel {
    DocumentNode,
    EntityNode,
}

impl NodeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::DocumentNode => "DocumentNode",
            NodeLabel::EntityNode => "EntityNode",
        }
    }
}

impl FromStr for NodeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DocumentNode" => Ok(NodeLabel::DocumentNode),
            "EntityNode" => Ok(NodeLabel::EntityNode),
            other => Err(format!("unknown node label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub label: NodeLabel,
    pub props: Props,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: String,
    pub props: Props,
}

impl Edge {
    pub fn is_triple(&self) -> bool {
        self.label != MENTIONS && self.label != LINKED_TO
    }
}

/// A triple pattern; `None` is the `?` wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: Option<ConceptName>,
    pub predicate: Option<ConceptName>,
    pub object: Option<ConceptName>,
}

impl TriplePattern {
    /// Builds a pattern from raw terms; `?`, `*` and empty strings are wildcards.
    pub fn parse(subject: &str, predicate: &str, object: &str) -> Self {
        let term = |t: &str| match t.trim() {
            "?" | "*" | "" => None,
            other => ConceptName::new(other),
        };
        Self {
            subject: term(subject),
            predicate: term(predicate),
            object: term(object),
        }
    }

    pub fn is_all_wildcard(&self) -> bool {
        self.subject.is_none() && self.predicate.is_none() && self.object.is_none()
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |t: &Option<ConceptName>| t.as_ref().map_or("?".to_string(), |c| c.to_string());
        write!(
            f,
            "({}, {}, {})",
            show(&self.subject),
            show(&self.predicate),
            show(&self.object)
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    pub subclass_aware: bool,
    pub allow_all: bool,
}

impl MatchOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn subclass_aware() -> Self {
        Self {
            subclass_aware: true,
            allow_all: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TripleMatch {
    pub triple: Triple,
    pub source_doc: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphStore {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeSet<Edge>,
    docs: BTreeMap<String, NodeId>,
    entities: BTreeMap<ConceptName, NodeId>,
    next_id: NodeId,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn document_node(&self, doc_id: &str) -> Option<&Node> {
        self.docs.get(doc_id).and_then(|id| self.nodes.get(id))
    }

    pub fn entity_node(&self, name: &ConceptName) -> Option<&Node> {
        self.entities.get(name).and_then(|id| self.nodes.get(id))
    }

    pub fn document_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    fn add_node(&mut self, label: NodeLabel, props: Props) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(id, Node { id, label, props });
        id
    }

    fn upsert_doc(&mut self, doc_id: &str, props: Option<Props>) -> NodeId {
        match self.docs.get(doc_id) {
            Some(&id) => {
                if let Some(props) = props {
                    self.nodes.get_mut(&id).expect("indexed node").props = props;
                }
                id
            }
            None => {
                let props = props.unwrap_or_else(|| {
                    Props::from([
                        ("doc_id".to_string(), doc_id.to_string()),
                        ("placeholder".to_string(), "true".to_string()),
                    ])
                });
                let id = self.add_node(NodeLabel::DocumentNode, props);
                self.docs.insert(doc_id.to_string(), id);
                id
            }
        }
    }

    fn upsert_entity(&mut self, name: &ConceptName, ontology: &Ontology) -> NodeId {
        if let Some(&id) = self.entities.get(name) {
            return id;
        }
        let kind = match ontology.resolve_name(name) {
            Some(e) if e.name == name => e.kind.as_str(),
            _ => "literal",
        };
        let props = Props::from([
            ("name".to_string(), name.to_string()),
            ("entity_kind".to_string(), kind.to_string()),
        ]);
        let id = self.add_node(NodeLabel::EntityNode, props);
        self.entities.insert(name.clone(), id);
        id
    }

    /// Drops every edge that `doc_id` contributed.
    fn clear_document_edges(&mut self, doc_id: &str) {
        let Some(&node) = self.docs.get(doc_id) else {
            return;
        };
        self.edges.retain(|e| {
            let own_triple = e.is_triple() && e.props.get("source_doc").map(String::as_str) == Some(doc_id);
            let own_link = !e.is_triple() && e.src == node;
            !(own_triple || own_link)
        });
    }

    fn drop_orphan_entities(&mut self) {
        let used: BTreeSet<NodeId> = self.edges.iter().flat_map(|e| [e.src, e.dst]).collect();
        let orphans: Vec<ConceptName> = self
            .entities
            .iter()
            .filter(|(_, id)| !used.contains(id))
            .map(|(n, _)| n.clone())
            .collect();
        for name in orphans {
            if let Some(id) = self.entities.remove(&name) {
                self.nodes.remove(&id);
            }
        }
    }

    /// Creates or replaces a document node with its triple, MENTIONS and
    /// LINKED_TO edges. Ingesting the same input twice changes nothing.
    pub fn ingest(&mut self, doc: &Document, triples: &[Triple], ontology: &Ontology) -> NodeId {
        self.clear_document_edges(&doc.id);
        let mut props = Props::from([
            ("doc_id".to_string(), doc.id.clone()),
            ("kind".to_string(), doc.kind.as_str().to_string()),
            ("title".to_string(), doc.title.clone()),
        ]);
        for (k, v) in &doc.fields {
            props.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let node = self.upsert_doc(&doc.id, Some(props));
        for t in triples {
            let s = self.upsert_entity(&t.subject, ontology);
            let o = self.upsert_entity(&t.object, ontology);
            let mut props = Props::from([
                ("provenance".to_string(), t.provenance.as_str().to_string()),
                ("source_doc".to_string(), doc.id.clone()),
            ]);
            if let Some(cp) = &t.counterpart {
                props.insert("counterpart".to_string(), cp.to_string());
            }
            self.edges.insert(Edge {
                src: s,
                dst: o,
                label: t.predicate.to_string(),
                props,
            });
            for entity in [s, o] {
                self.edges.insert(Edge {
                    src: node,
                    dst: entity,
                    label: MENTIONS.to_string(),
                    props: Props::new(),
                });
            }
        }
        for link in &doc.links {
            let target = self.upsert_doc(link, None);
            self.edges.insert(Edge {
                src: node,
                dst: target,
                label: LINKED_TO.to_string(),
                props: Props::new(),
            });
        }
        self.drop_orphan_entities();
        node
    }

    /// Removes a document node and everything it contributed. Returns
    /// whether the document existed.
    pub fn remove_document(&mut self, doc_id: &str) -> bool {
        let Some(&node) = self.docs.get(doc_id) else {
            return false;
        };
        self.clear_document_edges(doc_id);
        let linked_from_elsewhere = self.edges.iter().any(|e| e.dst == node);
        if linked_from_elsewhere {
            let props = Props::from([
                ("doc_id".to_string(), doc_id.to_string()),
                ("placeholder".to_string(), "true".to_string()),
            ]);
            self.nodes.get_mut(&node).expect("indexed node").props = props;
        } else {
            self.nodes.remove(&node);
            self.docs.remove(doc_id);
        }
        self.drop_orphan_entities();
        true
    }

    fn edge_triple(&self, e: &Edge) -> Option<(Triple, String)> {
        if !e.is_triple() {
            return None;
        }
        let name = |id: NodeId| {
            self.nodes
                .get(&id)
                .and_then(|n| n.props.get("name"))
                .and_then(|n| ConceptName::new(n))
        };
        let triple = Triple {
            subject: name(e.src)?,
            predicate: ConceptName::new(&e.label)?,
            object: name(e.dst)?,
            counterpart: e.props.get("counterpart").and_then(|c| ConceptName::new(c)),
            provenance: e
                .props
                .get("provenance")
                .and_then(|p| Provenance::parse(p))
                .unwrap_or(Provenance::Asserted),
        };
        Some((triple, e.props.get("source_doc").cloned().unwrap_or_default()))
    }

    /// Every stored triple with its source document.
    pub fn all_triples(&self) -> Vec<TripleMatch> {
        self.edges
            .iter()
            .filter_map(|e| self.edge_triple(e))
            .map(|(triple, source_doc)| TripleMatch { triple, source_doc })
            .collect()
    }

    pub fn document_triples(&self, doc_id: &str) -> Vec<Triple> {
        self.edges
            .iter()
            .filter(|e| e.props.get("source_doc").map(String::as_str) == Some(doc_id))
            .filter_map(|e| self.edge_triple(e))
            .map(|(t, _)| t)
            .collect()
    }

    /// Documents joined to `doc_id` by a LINKED_TO edge in either direction.
    pub fn linked(&self, doc_id: &str) -> BTreeSet<String> {
        let Some(&node) = self.docs.get(doc_id) else {
            return BTreeSet::new();
        };
        let doc_of = |id: NodeId| self.nodes.get(&id).and_then(|n| n.props.get("doc_id")).cloned();
        self.edges
            .iter()
            .filter(|e| e.label == LINKED_TO)
            .filter_map(|e| {
                if e.src == node {
                    doc_of(e.dst)
                } else if e.dst == node {
                    doc_of(e.src)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Whether a stored entity unifies with a bound pattern term.
    fn unifies(&self, bound: &ConceptName, stored: &ConceptName, subclass_aware: bool, ontology: &Ontology) -> bool {
        if bound == stored {
            return true;
        }
        if !subclass_aware {
            return false;
        }
        let Some(b) = ontology.resolve_name(bound) else {
            return false;
        };
        if b.name == stored {
            return true;
        }
        if b.kind != EntityKind::Class {
            return false;
        }
        let stored_class = ontology
            .resolve_name(stored)
            .and_then(|e| ontology.class_of_entity(e.name));
        stored_class.is_some_and(|c| ontology.is_a(c, b.name))
    }

    pub fn match_pattern(
        &self,
        pattern: &TriplePattern,
        opts: MatchOptions,
        ontology: &Ontology,
    ) -> Result<Vec<TripleMatch>, GraphError> {
        if pattern.is_all_wildcard() && !opts.allow_all {
            return Err(GraphError::AllWildcardWithoutFlag);
        }
        let predicate = pattern.predicate.as_ref().map(|p| {
            if opts.subclass_aware {
                ontology
                    .resolve_relation(p.as_str())
                    .cloned()
                    .unwrap_or_else(|| p.clone())
            } else {
                p.clone()
            }
        });
        let mut out: Vec<TripleMatch> = self
            .all_triples()
            .into_iter()
            .filter(|m| predicate.as_ref().is_none_or(|p| *p == m.triple.predicate))
            .filter(|m| {
                pattern
                    .subject
                    .as_ref()
                    .is_none_or(|s| self.unifies(s, &m.triple.subject, opts.subclass_aware, ontology))
            })
            .filter(|m| {
                pattern
                    .object
                    .as_ref()
                    .is_none_or(|o| self.unifies(o, &m.triple.object, opts.subclass_aware, ontology))
            })
            .collect();
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::testlang::{log_triples, parse_log};
    use crate::textindex::DocKind;

    fn c(s: &str) -> ConceptName {
        ConceptName::new(s).unwrap()
    }

    fn failed_log_graph() -> (GraphStore, Ontology) {
        let ont = fixtures::railway_ontology();
        let log = parse_log(fixtures::SOM_FAILED_LOG).unwrap().value;
        let triples = log_triples(&log, &ont);
        let mut g = GraphStore::new();
        let doc = Document::new("som-failed", DocKind::Log, fixtures::SOM_FAILED_LOG);
        g.ingest(&doc, &triples, &ont);
        (g, ont)
    }

    #[test]
    fn ingest_counts() {
        let (g, _) = failed_log_graph();
        let docs = g.nodes().filter(|n| n.label == NodeLabel::DocumentNode).count();
        let entities = g.nodes().filter(|n| n.label == NodeLabel::EntityNode).count();
        let triple_edges = g.edges().filter(|e| e.is_triple()).count();
        let mentions = g.edges().filter(|e| e.label == MENTIONS).count();
        assert_eq!(docs, 1);
        assert!(entities <= 5);
        assert_eq!(entities, 4);
        assert_eq!(triple_edges, 4);
        assert_eq!(mentions, entities);
    }

    #[test]
    fn reingest_is_idempotent() {
        let (mut g, ont) = failed_log_graph();
        let before = g.clone();
        let log = parse_log(fixtures::SOM_FAILED_LOG).unwrap().value;
        let doc = Document::new("som-failed", DocKind::Log, fixtures::SOM_FAILED_LOG);
        g.ingest(&doc, &log_triples(&log, &ont), &ont);
        assert_eq!(g.node_count(), before.node_count());
        assert_eq!(g.edge_count(), before.edge_count());
    }

    #[test]
    fn zero_triples_gives_document_node_only() {
        let ont = fixtures::railway_ontology();
        let mut g = GraphStore::new();
        g.ingest(&Document::new("d", DocKind::Requirement, ""), &[], &ont);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn matching() {
        let (g, ont) = failed_log_graph();
        let hits = g
            .match_pattern(&TriplePattern::parse("?", "send", "MA"), MatchOptions::exact(), &ont)
            .unwrap();
        assert!(hits
            .iter()
            .any(|m| m.triple.subject == c("RBC1") && m.source_doc == "som-failed"));
        let hits = g
            .match_pattern(
                &TriplePattern::parse("OBU", "receive", "MA"),
                MatchOptions::subclass_aware(),
                &ont,
            )
            .unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].triple.subject, c("OBU1"));
        assert!(g
            .match_pattern(
                &TriplePattern::parse("OBU", "receive", "MA"),
                MatchOptions::exact(),
                &ont
            )
            .unwrap()
            .is_empty());
        let hits = g
            .match_pattern(
                &TriplePattern::parse("?", "receive", "Position Report"),
                MatchOptions::subclass_aware(),
                &ont,
            )
            .unwrap();
        assert_eq!(hits[0].triple.object, c("SoM Position Report"));
        assert!(matches!(
            g.match_pattern(&TriplePattern::default(), MatchOptions::exact(), &ont),
            Err(GraphError::AllWildcardWithoutFlag)
        ));
        let empty = GraphStore::new();
        assert!(empty
            .match_pattern(&TriplePattern::parse("?", "send", "?"), MatchOptions::exact(), &ont)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn links_and_removal() {
        let ont = fixtures::railway_ontology();
        let mut g = GraphStore::new();
        let log = Document::new("log1", DocKind::Log, "").with_link("req1");
        g.ingest(&log, &[], &ont);
        assert_eq!(g.linked("req1"), BTreeSet::from(["log1".to_string()]));
        assert_eq!(g.document_node("req1").unwrap().props["placeholder"], "true");
        g.ingest(&Document::new("req1", DocKind::Requirement, ""), &[], &ont);
        assert!(!g.document_node("req1").unwrap().props.contains_key("placeholder"));
        assert!(g.remove_document("log1"));
        assert!(g.linked("req1").is_empty());
        assert!(g.document_node("log1").is_none());
    }
}
