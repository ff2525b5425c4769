//! Configuration, the persistent document store with its ingest pipeline,
//! and the JSON views shared by the CLI and the HTTP API.

pub mod api;
mod config;
#[cfg(feature = "server")]
pub mod http;
mod store;

use serde::Serialize;
use thiserror::Error;

use crate::graphstore::GraphError;
use crate::ontology::OntologyError;
use crate::retrieval::RetrievalError;
use crate::testlang::{LogError, ParseError};
use crate::textindex::IndexError;

pub use config::{Config, ConfigError, DATA_DIR_ENV};
pub use store::{IngestReport, IngestRequest, Store};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("index: {0}")]
    Index(#[from] IndexError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("script: {0}")]
    Script(#[from] ParseError),
    #[error("log: {0}")]
    Log(#[from] LogError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::Config(_) => "config",
            ServiceError::Ontology(OntologyError::UnknownEntity(_)) => "unknown_entity",
            ServiceError::Ontology(_) => "ontology",
            ServiceError::Index(IndexError::DuplicateId(_)) => "duplicate_document",
            ServiceError::Index(IndexError::UnknownDocument(_)) | ServiceError::UnknownDocument(_) => {
                "unknown_document"
            }
            ServiceError::Index(_) => "bad_query",
            ServiceError::Graph(GraphError::AllWildcardWithoutFlag) => "bad_query",
            ServiceError::Graph(_) => "graph",
            ServiceError::Script(_) => "script_parse",
            ServiceError::Log(_) => "log_parse",
            ServiceError::Retrieval(RetrievalError::UnknownDocument(_)) => "unknown_document",
            ServiceError::Retrieval(RetrievalError::NotAFailedLog(_)) => "not_a_failed_log",
            ServiceError::Retrieval(RetrievalError::Graph(_)) => "bad_query",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::CorruptStore(_) => "corrupt_store",
            ServiceError::Io(_) => "io",
        }
    }

    /// HTTP status code for the error.
    pub fn status(&self) -> u16 {
        match self.kind() {
            "unknown_entity" | "unknown_document" => 404,
            "duplicate_document" => 409,
            "script_parse" | "log_parse" | "not_a_failed_log" => 422,
            "bad_query" | "bad_request" => 400,
            _ => 500,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: ErrorDetail {
                kind: self.kind(),
                message: self.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Serialize)]
pub struct ErrorDetail {
    pub kind: &'static str,
    pub message: String,
}

/// Pretty JSON with a trailing newline, the single rendering used by every
/// CLI `--json` output and HTTP response body.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("views serialize");
    s.push('\n');
    s
}
