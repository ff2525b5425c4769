use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{normalized_keys, RetrievalError};
use crate::graphstore::GraphStore;
use crate::ontology::Ontology;
use crate::triple::TripleKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cell {
    Covered,
    CoveredNeedsReview,
    Uncovered,
}

impl Cell {
    pub fn code(self) -> char {
        match self {
            Cell::Covered => 'C',
            Cell::CoveredNeedsReview => 'R',
            Cell::Uncovered => 'U',
        }
    }

    pub fn is_covered(self) -> bool {
        self != Cell::Uncovered
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkSource {
    ExplicitLinks,
    Semantic,
}

impl std::str::FromStr for LinkSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" | "explicit-links" | "links" => Ok(LinkSource::ExplicitLinks),
            "semantic" => Ok(LinkSource::Semantic),
            other => Err(format!("unknown link source `{other}` (explicit or semantic)")),
        }
    }
}

/// (requirement, test) pairs a user marked for review.
pub type ReviewMarks = BTreeSet<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceMatrix {
    pub mode: LinkSource,
    pub requirements: Vec<String>,
    pub tests: Vec<String>,
    /// One row per requirement, one column per test.
    pub cells: Vec<Vec<Cell>>,
    pub justifications: BTreeMap<String, String>,
    pub uncovered: Vec<String>,
}

impl TraceMatrix {
    pub fn cell(&self, requirement: &str, test: &str) -> Option<Cell> {
        let r = self.requirements.iter().position(|x| x == requirement)?;
        let t = self.tests.iter().position(|x| x == test)?;
        Some(self.cells[r][t])
    }

    pub fn is_row_covered(&self, row: usize) -> bool {
        self.cells[row].iter().any(|c| c.is_covered())
    }

    /// Header `requirement,<test ids...>` then one row of C/R/U codes per
    /// requirement.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["requirement".to_string()];
        header.extend(self.tests.iter().cloned());
        w.write_record(&header).expect("write to memory");
        for (req, row) in self.requirements.iter().zip(&self.cells) {
            let mut record = vec![req.clone()];
            record.extend(row.iter().map(|c| c.code().to_string()));
            w.write_record(&record).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
    }
}

fn existing(graph: &GraphStore, id: &str) -> Result<(), RetrievalError> {
    match graph.document_node(id) {
        Some(n) if !n.props.contains_key("placeholder") => Ok(()),
        _ => Err(RetrievalError::UnknownDocument(id.to_string())),
    }
}

/// Requirement-by-test coverage. A review mark turns a cell into
/// covered-needs-review whatever the link source says.
pub fn traceability(
    graph: &GraphStore,
    ontology: &Ontology,
    requirements: &[String],
    tests: &[String],
    source: LinkSource,
    reviews: &ReviewMarks,
) -> Result<TraceMatrix, RetrievalError> {
    for id in requirements.iter().chain(tests) {
        existing(graph, id)?;
    }
    let keys = |id: &String| -> BTreeSet<TripleKey> { normalized_keys(&graph.document_triples(id), ontology) };
    let test_keys: Vec<BTreeSet<TripleKey>> = match source {
        LinkSource::Semantic => tests.iter().map(keys).collect(),
        LinkSource::ExplicitLinks => Vec::new(),
    };
    let mut cells = Vec::with_capacity(requirements.len());
    let mut justifications = BTreeMap::new();
    for req in requirements {
        let covered: Vec<bool> = match source {
            LinkSource::ExplicitLinks => {
                let linked = graph.linked(req);
                tests.iter().map(|t| linked.contains(t)).collect()
            }
            LinkSource::Semantic => {
                let rk = keys(req);
                test_keys.iter().map(|tk| !rk.is_disjoint(tk)).collect()
            }
        };
        let row: Vec<Cell> = tests
            .iter()
            .zip(covered)
            .map(|(t, c)| {
                if reviews.contains(&(req.clone(), t.clone())) {
                    Cell::CoveredNeedsReview
                } else if c {
                    Cell::Covered
                } else {
                    Cell::Uncovered
                }
            })
            .collect();
        cells.push(row);
        if let Some(j) = graph.document_node(req).and_then(|n| n.props.get("justification")) {
            justifications.insert(req.clone(), j.clone());
        }
    }
    let uncovered = requirements
        .iter()
        .zip(&cells)
        .filter(|(_, row)| !row.iter().any(|c: &Cell| c.is_covered()))
        .map(|(r, _)| r.clone())
        .collect();
    Ok(TraceMatrix {
        mode: source,
        requirements: requirements.to_vec(),
        tests: tests.to_vec(),
        cells,
        justifications,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::Annotator;
    use crate::concept::ConceptName;
    use crate::fixtures;
    use crate::textindex::{DocKind, Document};
    use crate::triple::Triple;

    fn c(s: &str) -> ConceptName {
        ConceptName::new(s).unwrap()
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn store() -> (GraphStore, Ontology) {
        let ont = fixtures::railway_ontology();
        let mut g = GraphStore::new();
        let ann = Annotator::new(&ont);
        let req = Document::new("req-som", DocKind::Requirement, fixtures::SOM_REQUIREMENT);
        g.ingest(&req, &ann.annotate(&req.body).triples, &ont);
        g.ingest(
            &Document::new("req-brake", DocKind::Requirement, "")
                .with_field("justification", "covered by field trials"),
            &[Triple::asserted(c("OBU"), c("command"), c("emergency brake"))],
            &ont,
        );
        g.ingest(
            &Document::new("t-ma", DocKind::TestScript, "").with_link("req-brake"),
            &[Triple::asserted(c("RBC1"), c("send"), c("MA"))],
            &ont,
        );
        g.ingest(
            &Document::new("t-balise", DocKind::TestScript, ""),
            &[Triple::asserted(c("train"), c("capts"), c("balise"))],
            &ont,
        );
        (g, ont)
    }

    #[test]
    fn semantic_mode_uses_shared_normalized_triples() {
        let (g, ont) = store();
        let m = traceability(
            &g,
            &ont,
            &ids(&["req-som", "req-brake"]),
            &ids(&["t-ma", "t-balise"]),
            LinkSource::Semantic,
            &ReviewMarks::new(),
        )
        .unwrap();
        assert_eq!(m.cell("req-som", "t-ma"), Some(Cell::Covered));
        assert_eq!(m.cell("req-som", "t-balise"), Some(Cell::Uncovered));
        assert_eq!(m.uncovered, ["req-brake"]);
        assert_eq!(m.justifications["req-brake"], "covered by field trials");
        assert_eq!(m.to_csv(), "requirement,t-ma,t-balise\nreq-som,C,U\nreq-brake,U,U\n");
    }

    #[test]
    fn explicit_mode_and_review_marks() {
        let (g, ont) = store();
        let reviews = ReviewMarks::from([("req-som".to_string(), "t-balise".to_string())]);
        let m = traceability(
            &g,
            &ont,
            &ids(&["req-som", "req-brake"]),
            &ids(&["t-ma", "t-balise"]),
            LinkSource::ExplicitLinks,
            &reviews,
        )
        .unwrap();
        assert_eq!(
            m.cells,
            vec![
                vec![Cell::Uncovered, Cell::CoveredNeedsReview],
                vec![Cell::Covered, Cell::Uncovered]
            ]
        );
        assert!(m.uncovered.is_empty());
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["cells"][0][1], "covered-needs-review");
        assert_eq!(json["mode"], "explicit-links");
    }

    #[test]
    fn empty_tests_and_unknown_ids() {
        let (g, ont) = store();
        let m = traceability(
            &g,
            &ont,
            &ids(&["req-som"]),
            &[],
            LinkSource::Semantic,
            &ReviewMarks::new(),
        )
        .unwrap();
        assert_eq!(m.uncovered, ["req-som"]);
        assert_eq!(m.to_csv(), "requirement\nreq-som\n");
        let err = traceability(
            &g,
            &ont,
            &ids(&["nope"]),
            &[],
            LinkSource::Semantic,
            &ReviewMarks::new(),
        );
        assert!(matches!(err, Err(RetrievalError::UnknownDocument(_))));
    }
}
