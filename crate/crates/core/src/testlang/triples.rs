use crate::annotator::{inverse_closure, ClosureCheck};
use crate::concept::ConceptName;
use crate::ontology::Ontology;
use crate::triple::Triple;

use super::ast::{CheckOp, Statement, TestLog};

/// Entity name for a check operand: the ontology entity behind any of its
/// labels, or the canonical text as an opaque constant.
fn entity(ontology: &Ontology, raw: &str) -> Option<ConceptName> {
    match ontology.resolve(raw) {
        Some(e) => Some(e.name.clone()),
        None => ConceptName::new(raw),
    }
}

fn relation(ontology: &Ontology, verb: &str) -> Option<ConceptName> {
    ontology
        .relation_for_verb(verb)
        .cloned()
        .or_else(|| ConceptName::new(verb))
}

/// Triples of the checks in the final check block, with their inverse
/// closure. Outcomes are ignored.
pub fn log_triples(log: &TestLog, ontology: &Ontology) -> Vec<Triple> {
    let mut asserted = Vec::new();
    for entry in log.final_check_block() {
        match &entry.statement {
            Statement::RelCheck {
                subject,
                verb,
                object,
                recipient,
            } => {
                let (Some(s), Some(p), Some(o)) = (
                    entity(ontology, subject),
                    relation(ontology, verb),
                    entity(ontology, object),
                ) else {
                    continue;
                };
                let cp = recipient.as_deref().and_then(|r| entity(ontology, r));
                asserted.push(Triple::asserted(s, p, o).with_counterpart(cp));
            }
            Statement::ValueCheck {
                path,
                op: CheckOp::Verb(verb),
                expected,
            } => {
                let Some(p) = ontology.relation_for_verb(verb).cloned() else {
                    continue;
                };
                let root = path.split('.').next().unwrap_or(path);
                if let (Some(s), Some(o)) = (entity(ontology, root), entity(ontology, expected)) {
                    asserted.push(Triple::asserted(s, p, o));
                }
            }
            _ => {}
        }
    }
    inverse_closure(asserted, ontology, ClosureCheck::None)
}
