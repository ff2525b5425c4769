#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use semtrace_core::annotator::{inverse_closure, ClosureCheck};
use semtrace_core::fixtures;
use semtrace_core::graphstore::{GraphStore, MatchOptions, TriplePattern};
use semtrace_core::testkit::{self, oracle_ancestors, oracle_match, oracle_search, oracle_top_keywords};
use semtrace_core::testlang::{parse_log, parse_script, render_log, run_script, Clock, FaultPlan, TestScript, Verdict};
use semtrace_core::textindex::{Document, TextIndex};
use semtrace_core::{ExpansionPolicy, Ontology, Triple};

pub const TRUNCATION_CASES: u32 = 300;
pub const LOG_ROUND_TRIP_CASES: u32 = 300;
pub const ONTOLOGY_ROUND_TRIP_CASES: u32 = 150;
pub const CLOSURE_CASES: u32 = 200;
pub const GRAPH_CASES: u32 = 50;
pub const PATTERNS_PER_GRAPH: usize = 100;
pub const EXPANSION_CASES: u32 = 150;

pub const SEARCH_TRIALS: u32 = 50;
pub const QUERIES_PER_TRIAL: usize = 6;

/// Runs `check` on `cases` generated inputs; the error carries the
/// minimal failing input.
pub fn run<S, F>(cases: u32, strategy: S, check: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

pub fn truncation((script, plan): (TestScript, FaultPlan), clock: Clock) -> Result<(), TestCaseError> {
    let log = run_script(&script, &plan, clock);
    let stride = clock.stride.max(1);
    let forced: std::collections::BTreeMap<&str, bool> = plan.patterns().collect();
    let first_false = script
        .statements
        .iter()
        .position(|s| s.check_key().is_some_and(|k| forced.get(k.as_str()) == Some(&false)));
    for (i, e) in log.entries.iter().enumerate() {
        prop_assert_eq!(&e.statement, &script.statements[i]);
        prop_assert_eq!(e.time, clock.start + stride * i as u64);
        prop_assert_eq!(e.observed.is_some(), e.statement.is_check());
    }
    match first_false {
        Some(i) => {
            let at = clock.start + stride * i as u64;
            prop_assert_eq!(log.entries.len(), i + 1);
            prop_assert_eq!(
                log.verdict,
                Verdict::Failed {
                    at_time: at,
                    failing_entry: Some(i)
                }
            );
            prop_assert_eq!(log.marker, Some(at + stride));
            prop_assert_eq!(log.entries[i].observed, Some(false));
            prop_assert!(log.entries[..i].iter().all(|e| e.observed != Some(false)));
        }
        None => {
            prop_assert_eq!(log.entries.len(), script.statements.len());
            prop_assert_eq!(log.verdict, Verdict::Passed);
            prop_assert_eq!(log.marker, None);
        }
    }
    Ok(())
}

pub fn round_trip((script, plan): (TestScript, FaultPlan), clock: Clock) -> Result<(), TestCaseError> {
    let reparsed = parse_script(&script.id, &script.render()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&reparsed.value, &script);
    let log = run_script(&script, &plan, clock);
    let text = render_log(&log);
    let parsed = parse_log(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&parsed.value, &log);
    prop_assert_eq!(render_log(&parsed.value), text);
    Ok(())
}

pub fn ontology_round_trip(text: String) -> Result<(), TestCaseError> {
    let a = Ontology::load(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    let written = a.to_text();
    let b = Ontology::load(&written).map_err(|e| TestCaseError::fail(format!("{e}\n{written}")))?;
    prop_assert_eq!(b.to_text(), written);
    prop_assert!(a.classes().eq(b.classes()));
    prop_assert!(a.relations().eq(b.relations()));
    prop_assert!(a.individuals().eq(b.individuals()));
    prop_assert_eq!(a.axioms(), b.axioms());
    for c in a.classes() {
        for p in [ExpansionPolicy::WithSubtypes, ExpansionPolicy::WithSupertypes] {
            prop_assert_eq!(
                a.expand_concept(c.name.as_str(), p).ok(),
                b.expand_concept(c.name.as_str(), p).ok()
            );
        }
    }
    Ok(())
}

pub fn closure_idempotent(triples: Vec<Triple>, ontology: &Ontology) -> Result<(), TestCaseError> {
    for check in [ClosureCheck::None, ClosureCheck::DomainRange] {
        let once = inverse_closure(triples.clone(), ontology, check);
        let twice = inverse_closure(once.clone(), ontology, check);
        prop_assert_eq!(&once, &twice);
        let input: BTreeSet<_> = triples.iter().map(Triple::key).collect();
        let output: BTreeSet<_> = once.iter().map(Triple::key).collect();
        prop_assert!(input.is_subset(&output));
    }
    Ok(())
}

pub fn build_graph(docs: &[(Document, Vec<Triple>)], ontology: &Ontology) -> GraphStore {
    let mut g = GraphStore::new();
    for (d, ts) in docs {
        g.ingest(d, ts, ontology);
    }
    g
}

pub fn graph_save_load(
    docs: Vec<(Document, Vec<Triple>)>,
    patterns: Vec<TriplePattern>,
    ontology: &Ontology,
) -> Result<(), TestCaseError> {
    let g = build_graph(&docs, ontology);
    let dir = tempfile::tempdir().map_err(|e| TestCaseError::fail(e.to_string()))?;
    let path = dir.path().join("graph.sgf");
    g.save(&path).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let loaded = GraphStore::load(&path).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&loaded, &g);
    let all = g.all_triples();
    for p in &patterns {
        for opts in [
            MatchOptions {
                subclass_aware: false,
                allow_all: true,
            },
            MatchOptions {
                subclass_aware: true,
                allow_all: true,
            },
        ] {
            let before = g
                .match_pattern(p, opts, ontology)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let after = loaded
                .match_pattern(p, opts, ontology)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&before, &after);
            let got: BTreeSet<_> = before
                .iter()
                .map(|m| {
                    (
                        m.triple.subject.to_string(),
                        m.triple.predicate.to_string(),
                        m.triple.object.to_string(),
                        m.source_doc.clone(),
                    )
                })
                .collect();
            prop_assert_eq!(
                got,
                oracle_match(ontology, &all, p, opts.subclass_aware),
                "pattern {}",
                p
            );
        }
    }
    Ok(())
}

pub fn expansion_monotone(ontology: Ontology) -> Result<(), TestCaseError> {
    let names: Vec<String> = ontology
        .classes()
        .map(|c| c.name.to_string())
        .chain(ontology.individuals().map(|i| i.name.to_string()))
        .chain(ontology.entity_labels().map(|(l, _, _)| l.to_string()))
        .collect();
    for n in &names {
        let eq = ontology.expand_concept(n, ExpansionPolicy::EquivalentsOnly).unwrap();
        let sub = ontology.expand_concept(n, ExpansionPolicy::WithSubtypes).unwrap();
        let sup = ontology.expand_concept(n, ExpansionPolicy::WithSupertypes).unwrap();
        prop_assert!(eq.is_subset(&sub), "{} {:?} {:?}", n, eq, sub);
        prop_assert!(eq.is_subset(&sup), "{} {:?} {:?}", n, eq, sup);
        let entity = ontology.resolve(n).unwrap();
        prop_assert!(eq.contains(entity.name));
        if ontology.class(entity.name).is_some() {
            prop_assert_eq!(&sup, &oracle_ancestors(&ontology, entity.name));
        }
    }
    Ok(())
}

pub fn railway() -> Ontology {
    fixtures::railway_ontology()
}

pub fn truncation_suite() -> Result<(), String> {
    run(
        TRUNCATION_CASES,
        (testkit::arb_script_and_plan(), testkit::arb_clock()),
        |(sp, clock)| truncation(sp, clock),
    )
}

pub fn round_trip_suite() -> Result<(), String> {
    run(
        LOG_ROUND_TRIP_CASES,
        (testkit::arb_script_and_plan(), testkit::arb_clock()),
        |(sp, clock)| round_trip(sp, clock),
    )
}

pub fn ontology_suite() -> Result<(), String> {
    run(
        ONTOLOGY_ROUND_TRIP_CASES,
        testkit::arb_ontology_text(),
        ontology_round_trip,
    )
}

pub fn closure_suite() -> Result<(), String> {
    let ont = railway();
    run(
        CLOSURE_CASES,
        prop::collection::vec(testkit::arb_triple(), 0..12),
        |ts| closure_idempotent(ts, &ont),
    )
}

pub fn graph_suite() -> Result<(), String> {
    let ont = railway();
    run(
        GRAPH_CASES,
        (
            testkit::arb_graph_docs(),
            prop::collection::vec(testkit::arb_pattern(), PATTERNS_PER_GRAPH),
        ),
        |(docs, patterns)| graph_save_load(docs, patterns, &ont),
    )
}

pub fn expansion_suite() -> Result<(), String> {
    run(EXPANSION_CASES, testkit::arb_ontology(), expansion_monotone)
}

pub fn property_case_total() -> u32 {
    TRUNCATION_CASES + LOG_ROUND_TRIP_CASES + ONTOLOGY_ROUND_TRIP_CASES + CLOSURE_CASES + GRAPH_CASES + EXPANSION_CASES
}

pub fn search_trial(
    (docs, requests, picks): (
        Vec<Document>,
        Vec<semtrace_core::textindex::SearchRequest>,
        Vec<prop::sample::Index>,
    ),
) -> Result<(), TestCaseError> {
    let mut index = TextIndex::new();
    index.declare_facets(["kind", "result", "priority"]);
    for d in &docs {
        index
            .index_document(d.clone(), false)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    for req in &requests {
        let got = index.search(req).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (want, facets) = oracle_search(&docs, req);
        prop_assert_eq!(got.hits.len(), want.len(), "q={}", req.q);
        for (h, (id, score)) in got.hits.iter().zip(&want) {
            prop_assert_eq!(&h.id, id);
            prop_assert!((h.score - score).abs() <= 1e-9, "{} {} vs {}", id, h.score, score);
        }
        prop_assert_eq!(&got.facets, &facets);
    }
    for pick in &picks {
        let id = &docs[pick.index(docs.len())].id;
        let got = index
            .top_keywords(id, 10)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let want = oracle_top_keywords(&docs, id, 10);
        prop_assert_eq!(got.len(), want.len());
        for (g, (t, s)) in got.iter().zip(&want) {
            prop_assert_eq!(&g.term, t);
            prop_assert!((g.score - s).abs() <= 1e-9);
        }
    }
    Ok(())
}

pub fn search_suite() -> Result<(), String> {
    run(
        SEARCH_TRIALS,
        (
            testkit::arb_corpus(200, 240),
            prop::collection::vec(testkit::arb_search_request(), QUERIES_PER_TRIAL),
            prop::collection::vec(any::<prop::sample::Index>(), 5),
        ),
        search_trial,
    )
}
