//! Python bindings. Results come back as plain dicts and lists, shaped like
//! the JSON the HTTP API returns.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use semtrace_core::fixtures;
use semtrace_core::retrieval::LinkSource;
use semtrace_core::service::api::{self, ReviewRequest, RunRequest, SemanticQuery};
use semtrace_core::service::{to_json, Config, IngestRequest, ServiceError, Store};
use semtrace_core::textindex::{DocKind, SearchRequest};
use semtrace_core::{ExpansionPolicy, Ontology};

create_exception!(semtrace, SemtraceError, PyException);

/// `SemtraceError(kind, message)`.
fn err(e: ServiceError) -> PyErr {
    SemtraceError::new_err((e.kind(), e.to_string()))
}

fn bad(msg: String) -> PyErr {
    err(ServiceError::BadRequest(msg))
}

fn to_py<T: Serialize + ?Sized>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (to_json(value),))?.unbind())
}

fn policy(p: Option<&str>) -> PyResult<Option<ExpansionPolicy>> {
    p.map(|p| p.parse().map_err(bad)).transpose()
}

/// A document store with its ontology, index and graph.
///
/// `Pipeline()` keeps everything in memory with the bundled railway
/// ontology; `Pipeline(data_dir=...)` opens or creates a persistent store.
#[pyclass(module = "semtrace")]
struct Pipeline {
    store: Store,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (data_dir=None, ontology=None))]
    fn new(data_dir: Option<PathBuf>, ontology: Option<String>) -> PyResult<Self> {
        let store = match data_dir {
            Some(dir) => {
                if ontology.is_some() {
                    return Err(bad("pass the ontology file through the data directory config".into()));
                }
                let config = Config {
                    data_dir: dir,
                    ..Config::default()
                };
                Store::open(&config).map_err(err)?
            }
            None => {
                let ont = match ontology {
                    Some(text) => Ontology::load(&text).map_err(|e| err(e.into()))?,
                    None => fixtures::railway_ontology(),
                };
                Store::in_memory(ont, &Config::default().facets)
            }
        };
        Ok(Self { store })
    }

    fn health(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &api::health(&self.store))
    }

    fn ontology_tree(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &api::ontology_tree(self.store.ontology()))
    }

    #[pyo3(signature = (term, policy=None))]
    fn expand(&self, term: &str, policy: Option<&str>) -> PyResult<Vec<String>> {
        let p = self::policy(policy)?.unwrap_or(self.store.policy);
        let view = api::expand_concept(self.store.ontology(), term, p).map_err(err)?;
        Ok(view.labels)
    }

    fn annotate(&self, py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &api::annotate(self.store.ontology(), text))
    }

    #[pyo3(signature = (kind, body, id=None, title=None, links=Vec::new(), fields=None, replace=false))]
    #[allow(clippy::too_many_arguments)]
    fn ingest(
        &mut self,
        py: Python<'_>,
        kind: &str,
        body: String,
        id: Option<String>,
        title: Option<String>,
        links: Vec<String>,
        fields: Option<std::collections::BTreeMap<String, String>>,
        replace: bool,
    ) -> PyResult<Py<PyAny>> {
        let kind: DocKind = kind.parse().map_err(bad)?;
        let req = IngestRequest {
            id,
            kind,
            body,
            title,
            links,
            fields: fields.unwrap_or_default(),
            replace,
        };
        let report = api::ingest(&mut self.store, req).map_err(err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (q="*:*", facets=Vec::new(), filters=Vec::new(), fl=None))]
    fn search(
        &self,
        py: Python<'_>,
        q: &str,
        facets: Vec<String>,
        filters: Vec<String>,
        fl: Option<Vec<String>>,
    ) -> PyResult<Py<PyAny>> {
        let mut req = SearchRequest::new(q);
        req.facet_fields = facets;
        req.fl = fl;
        for fq in &filters {
            req.filters
                .push(SearchRequest::parse_filter(fq).map_err(|e| err(e.into()))?);
        }
        to_py(py, &api::search(&self.store, &req).map_err(err)?)
    }

    #[pyo3(signature = (subject=None, predicate=None, object=None, policy=None, kind=None))]
    fn semantic_search(
        &self,
        py: Python<'_>,
        subject: Option<String>,
        predicate: Option<String>,
        object: Option<String>,
        policy: Option<&str>,
        kind: Option<String>,
    ) -> PyResult<Py<PyAny>> {
        let q = SemanticQuery {
            subject,
            predicate,
            object,
            policy: self::policy(policy)?,
            kind,
        };
        to_py(py, &api::semantic_search(&self.store, &q).map_err(err)?)
    }

    #[pyo3(signature = (log_id, k=10))]
    fn similar(&self, py: Python<'_>, log_id: &str, k: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &api::similar(&self.store, log_id, k).map_err(err)?)
    }

    /// Runs a script (text, or the id of a stored script) on the mock
    /// executor.
    #[pyo3(signature = (script=None, script_id=None, fail=Vec::new(), start=None, stride=None, log_id=None, ingest=false))]
    #[allow(clippy::too_many_arguments)]
    fn run_script(
        &mut self,
        py: Python<'_>,
        script: Option<String>,
        script_id: Option<String>,
        fail: Vec<String>,
        start: Option<u64>,
        stride: Option<u64>,
        log_id: Option<String>,
        ingest: bool,
    ) -> PyResult<Py<PyAny>> {
        let req = RunRequest {
            script,
            script_id,
            log_id,
            fail,
            start,
            stride,
            ingest,
            ..RunRequest::default()
        };
        to_py(py, &api::run(&mut self.store, &req).map_err(err)?)
    }

    #[pyo3(signature = (mode="semantic", requirements=None, tests=None, csv=false))]
    fn traceability(
        &self,
        py: Python<'_>,
        mode: &str,
        requirements: Option<Vec<String>>,
        tests: Option<Vec<String>>,
        csv: bool,
    ) -> PyResult<Py<PyAny>> {
        let mode: LinkSource = mode.parse().map_err(bad)?;
        let matrix = api::traceability(&self.store, mode, requirements, tests).map_err(err)?;
        if csv {
            Ok(matrix.to_csv().into_pyobject(py)?.into_any().unbind())
        } else {
            to_py(py, &matrix)
        }
    }

    #[pyo3(signature = (requirement, test, review=true))]
    fn review(&mut self, requirement: String, test: String, review: bool) -> PyResult<()> {
        let req = ReviewRequest {
            requirement,
            test,
            review,
        };
        api::review(&mut self.store, &req).map_err(err)?;
        Ok(())
    }

    /// Writes the store to its data directory; a no-op in memory.
    fn save(&self) -> PyResult<()> {
        self.store.save().map_err(err)
    }
}

/// Parses and validates ontology text, returning entity counts.
#[pyfunction]
fn validate_ontology(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let ont = Ontology::load(text).map_err(|e| err(e.into()))?;
    let counts = serde_json::json!({
        "classes": ont.classes().count(),
        "relations": ont.relations().count(),
        "individuals": ont.individuals().count(),
        "axioms": ont.axioms().len(),
    });
    to_py(py, &counts)
}

/// Parses a test log into its entries and verdict.
#[pyfunction]
fn parse_log(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let parsed = semtrace_core::testlang::parse_log(text).map_err(|e| err(e.into()))?;
    to_py(py, &parsed.value)
}

#[pymodule]
fn semtrace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(validate_ontology, m)?)?;
    m.add_function(wrap_pyfunction!(parse_log, m)?)?;
    m.add("SemtraceError", m.py().get_type::<SemtraceError>())?;
    m.add("RAILWAY_ONTOLOGY", fixtures::RAILWAY_ONTOLOGY)?;
    Ok(())
}
