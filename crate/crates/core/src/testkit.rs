//! Generators and brute-force oracles for the test suites. The oracles
//! recompute results from first principles without touching the indexes
//! or closures they check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config as RunnerConfig, RngAlgorithm, TestRng, TestRunner};

use crate::concept::ConceptName;
use crate::graphstore::{TripleMatch, TriplePattern};
use crate::ontology::{Axiom, Ontology};
use crate::testlang::{render_log, run_script, CheckOp, Clock, FaultPlan, Statement, TestScript};
use crate::textindex::{is_stop_word, DocKind, Document, SearchRequest, MATCH_ALL, MISSING_FACET};
use crate::triple::Triple;

// ---------------------------------------------------------------- search

/// Lowercased alphanumeric runs.
pub fn oracle_terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn oracle_tf(doc: &Document, term: &str) -> usize {
    oracle_terms(&doc.title)
        .into_iter()
        .chain(oracle_terms(&doc.body))
        .filter(|t| t == term)
        .count()
}

fn oracle_idf(docs: &[Document], term: &str) -> f64 {
    let df = docs.iter().filter(|d| oracle_tf(d, term) > 0).count();
    if df == 0 {
        0.0
    } else {
        (1.0 + docs.len() as f64 / df as f64).ln()
    }
}

fn oracle_field(doc: &Document, field: &str) -> Option<String> {
    match field {
        "id" => Some(doc.id.clone()),
        "kind" => Some(doc.kind.as_str().to_string()),
        "title" => Some(doc.title.clone()),
        other => doc.fields.get(other).cloned(),
    }
}

pub type FacetCounts = BTreeMap<String, BTreeMap<String, usize>>;

/// Ranked `(id, score)` and facet counts for a request, by scanning every
/// document.
pub fn oracle_search(docs: &[Document], req: &SearchRequest) -> (Vec<(String, f64)>, FacetCounts) {
    let passes = |d: &Document| {
        req.filters
            .iter()
            .all(|(f, v)| oracle_field(d, f).as_deref() == Some(v))
    };
    let mut ranked: Vec<(String, f64)> = if req.q.trim() == MATCH_ALL {
        docs.iter().filter(|d| passes(d)).map(|d| (d.id.clone(), 0.0)).collect()
    } else {
        let terms: BTreeMap<String, f64> = oracle_terms(&req.q)
            .into_iter()
            .map(|t| {
                let idf = oracle_idf(docs, &t);
                (t, idf)
            })
            .collect();
        docs.iter()
            .filter(|d| passes(d))
            .filter(|d| terms.keys().any(|t| oracle_tf(d, t) > 0))
            .map(|d| {
                let score = terms.iter().map(|(t, idf)| oracle_tf(d, t) as f64 * idf).sum::<f64>();
                (d.id.clone(), score)
            })
            .collect()
    };
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut facets = FacetCounts::new();
    for field in &req.facet_fields {
        let counts = facets.entry(field.clone()).or_default();
        for (id, _) in &ranked {
            let d = docs.iter().find(|d| &d.id == id).expect("ranked ids come from docs");
            let v = oracle_field(d, field).unwrap_or_else(|| MISSING_FACET.to_string());
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    (ranked, facets)
}

pub fn oracle_top_keywords(docs: &[Document], id: &str, k: usize) -> Vec<(String, f64)> {
    let doc = docs.iter().find(|d| d.id == id).expect("known id");
    let terms: BTreeSet<String> = oracle_terms(&doc.title)
        .into_iter()
        .chain(oracle_terms(&doc.body))
        .filter(|t| !is_stop_word(t))
        .collect();
    let mut scored: Vec<(String, f64)> = terms
        .into_iter()
        .map(|t| {
            let s = oracle_tf(doc, &t) as f64 * oracle_idf(docs, &t);
            (t, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

// ---------------------------------------------------------------- ontology

/// The class, its equivalents and all superclasses, by breadth-first search
/// over the declared axioms.
pub fn oracle_ancestors(ont: &Ontology, class: &ConceptName) -> BTreeSet<ConceptName> {
    let mut seen = BTreeSet::from([class.clone()]);
    let mut queue = VecDeque::from([class.clone()]);
    while let Some(c) = queue.pop_front() {
        for ax in ont.axioms() {
            let next: Vec<&ConceptName> = match ax {
                Axiom::SubClassOf(a, b) if *a == c => vec![b],
                Axiom::EquivalentClass(a, b) if *a == c => vec![b],
                Axiom::EquivalentClass(a, b) if *b == c => vec![a],
                _ => vec![],
            };
            for n in next {
                if seen.insert(n.clone()) {
                    queue.push_back(n.clone());
                }
            }
        }
    }
    seen
}

fn oracle_unifies(ont: &Ontology, bound: &ConceptName, stored: &ConceptName, subclass_aware: bool) -> bool {
    if bound == stored {
        return true;
    }
    if !subclass_aware {
        return false;
    }
    let Some(b) = ont.resolve_name(bound) else {
        return false;
    };
    if b.name == stored {
        return true;
    }
    if ont.class(b.name).is_none() {
        return false;
    }
    let stored_class = match ont.resolve_name(stored) {
        Some(e) => match ont.individual(e.name) {
            Some(i) => i.class_of.clone(),
            None => e.name.clone(),
        },
        None => return false,
    };
    oracle_ancestors(ont, &stored_class).contains(b.name)
}

/// Linear scan of every stored triple.
pub fn oracle_match(
    ont: &Ontology,
    triples: &[TripleMatch],
    pattern: &TriplePattern,
    subclass_aware: bool,
) -> BTreeSet<(String, String, String, String)> {
    let predicate = pattern.predicate.as_ref().map(|p| {
        if subclass_aware {
            ont.resolve_relation(p.as_str()).cloned().unwrap_or_else(|| p.clone())
        } else {
            p.clone()
        }
    });
    triples
        .iter()
        .filter(|m| predicate.as_ref().is_none_or(|p| *p == m.triple.predicate))
        .filter(|m| {
            pattern
                .subject
                .as_ref()
                .is_none_or(|s| oracle_unifies(ont, s, &m.triple.subject, subclass_aware))
        })
        .filter(|m| {
            pattern
                .object
                .as_ref()
                .is_none_or(|o| oracle_unifies(ont, o, &m.triple.object, subclass_aware))
        })
        .map(|m| {
            (
                m.triple.subject.to_string(),
                m.triple.predicate.to_string(),
                m.triple.object.to_string(),
                m.source_doc.clone(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------- similarity

/// Class-normalized, inverse-closed triples of the failed start-of-mission
/// log, enumerated by hand.
pub const SOM_LOG_KEYS: &[(&str, &str, &str)] = &[
    ("obu", "send", "som position report"),
    ("rbc", "receive", "som position report"),
    ("rbc", "send", "ma"),
    ("obu", "receive", "ma"),
];

/// The same for the similar-failure log: the four above plus the extra
/// balise group check.
pub const SIMILAR_LOG_KEYS: &[(&str, &str, &str)] = &[
    ("linked balise group list", "contain", "etcs5233"),
    ("obu", "send", "som position report"),
    ("rbc", "receive", "som position report"),
    ("rbc", "send", "ma"),
    ("obu", "receive", "ma"),
];

/// |A ∩ B| / |A ∪ B| by counting list members.
pub fn oracle_jaccard<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let mut union: Vec<&T> = Vec::new();
    for x in a.iter().chain(b) {
        if !union.contains(&x) {
            union.push(x);
        }
    }
    if union.is_empty() {
        return 0.0;
    }
    let shared = union.iter().filter(|x| a.contains(x) && b.contains(x)).count();
    shared as f64 / union.len() as f64
}

// ---------------------------------------------------------------- traceability

/// Members of a class's equivalence set, by search over the declared
/// equivalence axioms.
fn oracle_equivalents(ont: &Ontology, class: &ConceptName) -> BTreeSet<ConceptName> {
    let mut seen = BTreeSet::from([class.clone()]);
    let mut queue = VecDeque::from([class.clone()]);
    while let Some(c) = queue.pop_front() {
        for ax in ont.axioms() {
            let other = match ax {
                Axiom::EquivalentClass(a, b) if *a == c => b,
                Axiom::EquivalentClass(a, b) if *b == c => a,
                _ => continue,
            };
            if seen.insert(other.clone()) {
                queue.push_back(other.clone());
            }
        }
    }
    seen
}

/// Individuals stand for their class; a class for its smallest
/// equivalent; anything else for itself.
pub fn oracle_normal_form(ont: &Ontology, name: &ConceptName) -> ConceptName {
    let Some(e) = ont.resolve_name(name) else {
        return name.clone();
    };
    let class = match ont.individual(e.name) {
        Some(i) => i.class_of.clone(),
        None if ont.class(e.name).is_some() => e.name.clone(),
        None => return e.name.clone(),
    };
    oracle_equivalents(ont, &class)
        .into_iter()
        .next()
        .expect("contains the class")
}

/// Whether two triple lists share a triple once both sides are normalized.
pub fn oracle_covers(ont: &Ontology, requirement: &[Triple], test: &[Triple]) -> bool {
    let norm = |t: &Triple| {
        (
            oracle_normal_form(ont, &t.subject),
            t.predicate.clone(),
            oracle_normal_form(ont, &t.object),
        )
    };
    requirement.iter().any(|r| test.iter().any(|t| norm(r) == norm(t)))
}

// ---------------------------------------------------------------- generators

pub const WORDS: &[&str] = &[
    "obu",
    "rbc",
    "balise",
    "group",
    "telegram",
    "ma",
    "movement",
    "authority",
    "position",
    "report",
    "som",
    "mission",
    "train",
    "linking",
    "information",
    "emergency",
    "brake",
    "level",
    "mode",
    "radio",
    "message",
    "track",
    "signal",
    "session",
    "driver",
    "shall",
    "the",
    "to",
    "of",
    "and",
    "a",
    "is",
    "etcs",
    "ertms",
    "lrbg",
    "interlocking",
    "route",
    "speed",
    "gsm",
    "odometry",
];

fn arb_text(max_words: usize) -> impl Strategy<Value = String> {
    let sep = prop_oneof![Just(" "), Just(" "), Just(", "), Just(". "), Just("\n")];
    prop::collection::vec((prop::sample::select(WORDS), sep), 0..=max_words).prop_map(|ws| {
        ws.into_iter()
            .map(|(w, s)| {
                let mut t = w.to_string();
                t.push_str(s);
                t
            })
            .collect()
    })
}

fn arb_kind() -> impl Strategy<Value = DocKind> {
    prop::sample::select(DocKind::ALL.to_vec())
}

/// A corpus of `min..=max` documents with ids `d0`, `d1`, ...
pub fn arb_corpus(min: usize, max: usize) -> impl Strategy<Value = Vec<Document>> {
    let doc = (
        arb_kind(),
        arb_text(4),
        arb_text(30),
        prop::option::of(prop::sample::select(vec!["passed", "failed"])),
        prop::option::of(prop::sample::select(vec!["high", "low"])),
    );
    prop::collection::vec(doc, min..=max).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, (kind, title, body, result, priority))| {
                let mut d = Document::new(format!("d{i}"), kind, body).with_title(title);
                if let Some(r) = result {
                    d = d.with_field("result", r);
                }
                if let Some(p) = priority {
                    d = d.with_field("priority", p);
                }
                d
            })
            .collect()
    })
}

pub fn arb_search_request() -> impl Strategy<Value = SearchRequest> {
    let q = prop_oneof![
        1 => Just(MATCH_ALL.to_string()),
        6 => prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" ")),
    ];
    let facets = prop::sample::subsequence(vec!["kind", "result", "priority"], 0..=3);
    let filter = prop::option::of(prop::sample::select(vec![
        ("kind", "requirement"),
        ("kind", "log"),
        ("result", "failed"),
        ("priority", "high"),
    ]));
    (q, facets, filter).prop_map(|(q, facets, filter)| {
        let mut req = SearchRequest::new(q);
        for f in facets {
            req = req.facet(f);
        }
        if let Some((f, v)) = filter {
            req = req.filter(f, v);
        }
        req
    })
}

const SUBJECTS: &[&str] = &["OBU", "RBC", "Train", "OBU1", "RBC1", "Balise", "SSB"];
const OBJECTS: &[&str] = &[
    "MA",
    "SoM Position Report",
    "Linking Information",
    "Telegram",
    "Emergency Brake",
    "Position Report",
    "Balise Group",
];
const VERBS: &[&str] = &["send", "receive", "use", "contain", "capt", "perform", "sends"];
const PATHS: &[&str] = &[
    "Linked balise group list",
    "OBU.mode",
    "Train.speed",
    "position switch point 32",
];
const VALUES: &[&str] = &["ETCS5233", "FS", "C_B", "0", "SR"];

/// Statements whose printed form parses back to themselves.
pub fn arb_statement() -> impl Strategy<Value = Statement> {
    let s = || prop::sample::select(SUBJECTS).prop_map(String::from);
    let o = || prop::sample::select(OBJECTS).prop_map(String::from);
    let v = || prop::sample::select(VALUES).prop_map(String::from);
    prop_oneof![
        1 => (s(), prop::sample::select(vec!["", "mode", "level"]), v()).prop_map(|(entity, var, value)| {
            Statement::SetState {
                entity,
                variable: var.into(),
                value,
            }
        }),
        1 => (s(), prop::sample::select(vec!["", "mode"]), v()).prop_map(|(entity, var, value)| Statement::ForceState {
            entity,
            variable: var.into(),
            value,
        }),
        1 => (s(), prop::option::of(prop::sample::select(vec!["MakeSom", "Balise", "Input"]))).prop_map(|(c, i)| {
            Statement::Stimulate {
                component: c,
                input: i.unwrap_or("").into(),
            }
        }),
        3 => (s(), prop::sample::select(VERBS), o(), prop::option::of(s())).prop_map(|(subject, verb, object, r)| {
            Statement::RelCheck {
                subject,
                verb: verb.into(),
                object,
                recipient: r,
            }
        }),
        1 => (prop::sample::select(PATHS), v(), any::<bool>()).prop_map(|(path, expected, equals)| {
            Statement::ValueCheck {
                path: path.into(),
                op: if equals || !path.contains(' ') && !path.contains('.') {
                    CheckOp::Equals
                } else {
                    CheckOp::Verb("contains".into())
                },
                expected,
            }
        }),
    ]
}

pub fn arb_script() -> impl Strategy<Value = TestScript> {
    prop::collection::vec(arb_statement(), 0..16).prop_map(|statements| TestScript {
        id: "gen".into(),
        statements,
    })
}

/// A script with a plan forcing outcomes of some of its own checks, and
/// occasionally of checks it does not contain.
pub fn arb_script_and_plan() -> impl Strategy<Value = (TestScript, FaultPlan)> {
    arb_script().prop_flat_map(|script| {
        let keys: Vec<String> = script.statements.iter().filter_map(Statement::check_key).collect();
        let n = keys.len();
        let chosen = prop::collection::vec((0..n.max(1), any::<bool>()), 0..=n.min(4));
        let stray = prop::option::of(Just("nobody sends nothing".to_string()));
        (Just(script), Just(keys), chosen, stray).prop_map(|(script, keys, chosen, stray)| {
            let mut plan = FaultPlan::new();
            for (i, outcome) in chosen {
                if let Some(k) = keys.get(i) {
                    plan = plan.set(k, outcome);
                }
            }
            if let Some(s) = stray {
                plan = plan.fail(&s);
            }
            (script, plan)
        })
    })
}

pub fn arb_clock() -> impl Strategy<Value = Clock> {
    (0u64..5000, 0u64..20).prop_map(|(start, stride)| Clock { start, stride })
}

fn quote(s: &str) -> String {
    if s.contains(' ') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// Text of a valid ontology: an acyclic subclass hierarchy, alias classes
/// declared equivalent to hierarchy classes, relations in inverse pairs and
/// individuals.
pub fn arb_ontology_text() -> impl Strategy<Value = String> {
    (2usize..10).prop_flat_map(|n| {
        let parents = prop::collection::vec(prop::option::of(any::<prop::sample::Index>()), n);
        let aliases = prop::collection::vec(any::<prop::sample::Index>(), 0..3);
        let relations = prop::collection::vec(
            (
                any::<prop::sample::Index>(),
                any::<prop::sample::Index>(),
                any::<bool>(),
                any::<bool>(),
            ),
            1..4,
        );
        let individuals = prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 0..4);
        let spaced = prop::collection::vec(any::<bool>(), n);
        (Just(n), parents, aliases, relations, individuals, spaced).prop_map(
            |(n, parents, aliases, relations, individuals, spaced)| {
                let class = |i: usize| {
                    if spaced[i] {
                        format!("Class {i}")
                    } else {
                        format!("C{i}")
                    }
                };
                let mut out = String::from("# generated\n");
                for i in 0..n {
                    out.push_str(&format!("class {}", quote(&class(i))));
                    if i % 3 == 1 {
                        out.push_str(&format!(" labels: label {i}; L{i}"));
                    }
                    out.push('\n');
                }
                for (k, idx) in aliases.iter().enumerate() {
                    let target = idx.index(n);
                    out.push_str(&format!(
                        "class Alias{k}\nequivalent {} Alias{k}\n",
                        quote(&class(target))
                    ));
                }
                for (i, p) in parents.iter().enumerate().skip(1) {
                    if let Some(p) = p {
                        out.push_str(&format!(
                            "subclass {} {}\n",
                            quote(&class(i)),
                            quote(&class(p.index(i)))
                        ));
                    }
                }
                for (k, (d, r, inverse, second)) in relations.iter().enumerate() {
                    let (d, r) = (class(d.index(n)), class(r.index(n)));
                    let extra = if *second {
                        format!(" labels: rel{k} label")
                    } else {
                        String::new()
                    };
                    if *inverse {
                        out.push_str(&format!(
                            "relation r{k} domain {} range {} inverse q{k}{extra}\n",
                            quote(&d),
                            quote(&r)
                        ));
                        out.push_str(&format!(
                            "relation q{k} domain {} range {} inverse r{k}\n",
                            quote(&r),
                            quote(&d)
                        ));
                    } else {
                        out.push_str(&format!(
                            "relation r{k} domain {} range {}{extra}\n",
                            quote(&d),
                            quote(&r)
                        ));
                        if *second {
                            out.push_str(&format!("relation r{k} domain {} range {}\n", quote(&r), quote(&d)));
                        }
                    }
                }
                for (k, (c, labelled)) in individuals.iter().enumerate() {
                    out.push_str(&format!("individual I{k} : {}", quote(&class(c.index(n)))));
                    if *labelled {
                        out.push_str(&format!(" labels: Nick{k}"));
                    }
                    out.push('\n');
                }
                out
            },
        )
    })
}

pub fn arb_ontology() -> impl Strategy<Value = Ontology> {
    arb_ontology_text().prop_map(|t| Ontology::load(&t).expect("generated ontologies are valid"))
}

/// Entity names and labels of the railway ontology, plus literals.
pub const GRAPH_TERMS: &[&str] = &[
    "OBU",
    "SSB",
    "on-board equipment",
    "OBU1",
    "Treno1",
    "RBC",
    "RBC1",
    "Train",
    "Train1",
    "MA",
    "Movement Authority",
    "Position Report",
    "SoM Position Report",
    "Radio Message",
    "Emergency Brake",
    "Balise",
    "Balise Group",
    "LRBG",
    "Telegram",
    "Linking Information",
    "etcs5233",
    "switch point 32",
];
pub const GRAPH_PREDICATES: &[&str] = &[
    "send", "receive", "use", "using", "contain", "capt", "perform", "monitor",
];

pub fn arb_graph_term() -> impl Strategy<Value = ConceptName> {
    prop::sample::select(GRAPH_TERMS).prop_map(concept)
}

pub fn arb_pattern() -> impl Strategy<Value = TriplePattern> {
    let term = || prop::option::weighted(0.7, prop::sample::select(GRAPH_TERMS));
    let pred = prop::option::weighted(0.6, prop::sample::select(GRAPH_PREDICATES));
    (term(), pred, term())
        .prop_map(|(s, p, o)| TriplePattern::parse(s.unwrap_or("?"), p.unwrap_or("?"), o.unwrap_or("?")))
}

fn concept(s: &str) -> ConceptName {
    ConceptName::new(s).expect("non-empty")
}

pub fn arb_triple() -> impl Strategy<Value = Triple> {
    (
        arb_graph_term(),
        prop::sample::select(GRAPH_PREDICATES),
        arb_graph_term(),
        prop::option::of(arb_graph_term()),
    )
        .prop_map(|(s, p, o, cp)| Triple::asserted(s, concept(p), o).with_counterpart(cp))
}

/// Documents `g0`, `g1`, ... with random triples and links among them.
pub fn arb_graph_docs() -> impl Strategy<Value = Vec<(Document, Vec<Triple>)>> {
    let doc = (
        arb_kind(),
        prop::collection::vec(arb_triple(), 0..8),
        prop::collection::vec(0usize..8, 0..3),
    );
    prop::collection::vec(doc, 1..8).prop_map(|docs| {
        let n = docs.len();
        docs.into_iter()
            .enumerate()
            .map(|(i, (kind, triples, links))| {
                let mut d = Document::new(format!("g{i}"), kind, "generated");
                for l in links {
                    if l % n != i {
                        d = d.with_link(format!("g{}", l % n));
                    }
                }
                (d, triples)
            })
            .collect()
    })
}

/// Draws a value from a strategy with a fixed seed, outside any property
/// test.
pub fn sample<S: Strategy>(strategy: S, seed: u8) -> S::Value {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(RunnerConfig::default(), rng);
    strategy
        .new_tree(&mut runner)
        .expect("strategy yields a value")
        .current()
}

/// Rendered logs of `n` random scripts run by the mock executor, each with
/// its last relation check forced to fail.
pub fn decoy_failed_logs(n: usize, seed: u8) -> Vec<String> {
    let scripts = sample(prop::collection::vec(arb_script(), n * 4), seed);
    scripts
        .into_iter()
        .filter_map(|mut script| {
            let key = script
                .statements
                .iter()
                .rfind(|s| matches!(s, Statement::RelCheck { .. }))
                .and_then(Statement::check_key)?;
            script.id = "decoy".into();
            let log = run_script(&script, &FaultPlan::new().fail(&key), Clock { start: 100, stride: 1 });
            Some(render_log(&log))
        })
        .take(n)
        .collect()
}
