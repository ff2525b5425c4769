//! Ontology-grounded analysis of requirements, test scripts and test logs.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ontology`] loads the domain ontology and answers class, type and
//!   property-value queries, plus subclass/equivalence expansion.
//! * [`textindex`] is a small inverted index with TF-IDF ranking, keyword
//!   extraction and faceted search.
//! * [`annotator`] recognises ontology entities in free text and infers
//!   `(subject, relation, object)` triples.
//! * [`testlang`] parses the test-script DSL, runs scripts against a mock
//!   executor with fault injection, parses logs and extracts check triples.
//! * [`graphstore`] is a property graph of documents, entities and triple
//!   edges with wildcard pattern matching and a line-oriented file format.
//! * [`retrieval`] expands triple queries, ranks documents, finds similar
//!   failures and computes traceability matrices.
//! * [`service`] wires everything into a persistent knowledge base with an
//!   ingest pipeline and JSON views shared by the CLI and HTTP front ends.

pub mod annotator;
pub mod concept;
pub mod fixtures;
pub mod graphstore;
pub mod ontology;
pub mod retrieval;
pub mod service;
pub mod testlang;
pub mod textindex;
pub mod triple;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use concept::ConceptName;
pub use ontology::{ExpansionPolicy, Ontology};
pub use triple::{Provenance, Triple};
