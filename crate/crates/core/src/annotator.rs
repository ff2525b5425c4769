//! Gazetteer entity recognition and triple inference over free text.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::concept::ConceptName;
use crate::ontology::{EntityKind, Ontology};
use crate::textindex::{tokenize, Token};
use crate::triple::{dedup_triples, Provenance, Triple};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    /// Character offsets into the source text.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity: ConceptName,
    pub kind: EntityKind,
}

impl Serialize for EntitySpan {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("EntitySpan", 4)?;
        s.serialize_field("start", &self.start)?;
        s.serialize_field("end", &self.end)?;
        s.serialize_field("entity", &self.entity)?;
        s.serialize_field("kind", &self.kind)?;
        s.end()
    }
}

/// Spans and triples for one text, serialized as
/// `{spans: [{start, end, entity, kind}], triples: [[s, p, o, provenance]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Annotation {
    pub spans: Vec<EntitySpan>,
    pub triples: Vec<Triple>,
}

impl Serialize for Annotation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[&str; 4]> = self.triples.iter().map(Triple::to_row).collect();
        let mut s = serializer.serialize_struct("Annotation", 2)?;
        s.serialize_field("spans", &self.spans)?;
        s.serialize_field("triples", &rows)?;
        s.end()
    }
}

/// Whether inverse closure keeps only derived triples that fit the
/// relation's domain and range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureCheck {
    DomainRange,
    None,
}

#[derive(Debug, Clone)]
struct Mention {
    span: EntitySpan,
    sentence: usize,
    first_token: usize,
    last_token: usize,
}

const ARTICLES: &[&str] = &["the", "a", "an"];

/// Entity recognizer and triple extractor bound to one ontology.
pub struct Annotator<'o> {
    ontology: &'o Ontology,
    gazetteer: BTreeMap<Vec<String>, (ConceptName, EntityKind)>,
    max_len: usize,
}

impl<'o> Annotator<'o> {
    pub fn new(ontology: &'o Ontology) -> Self {
        let mut gazetteer = BTreeMap::new();
        let mut max_len = 0;
        for (label, name, kind) in ontology.entity_labels() {
            let words: Vec<String> = tokenize(label.as_str()).into_iter().map(|t| t.text).collect();
            if words.is_empty() {
                continue;
            }
            max_len = max_len.max(words.len());
            gazetteer.insert(words, (name.clone(), kind));
        }
        Self {
            ontology,
            gazetteer,
            max_len,
        }
    }

    pub fn recognize(&self, text: &str) -> Vec<EntitySpan> {
        self.mentions(text, &tokenize(text))
            .into_iter()
            .map(|m| m.span)
            .collect()
    }

    fn mentions(&self, text: &str, tokens: &[Token]) -> Vec<Mention> {
        let sentences = sentence_ids(text, tokens);
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let max = self.max_len.min(tokens.len() - i);
            let found = (1..=max).rev().find_map(|len| {
                let window = &tokens[i..i + len];
                if sentences[i..i + len].iter().any(|&s| s != sentences[i]) {
                    return None;
                }
                let key: Vec<String> = window.iter().map(|t| t.text.clone()).collect();
                self.gazetteer.get(&key).map(|hit| (len, hit))
            });
            match found {
                Some((len, (entity, kind))) => {
                    let first = &tokens[i];
                    let last = &tokens[i + len - 1];
                    out.push(Mention {
                        span: EntitySpan {
                            start: first.start,
                            end: last.end,
                            surface: text[first.byte_start..last.byte_end].to_string(),
                            entity: entity.clone(),
                            kind: *kind,
                        },
                        sentence: sentences[i],
                        first_token: i,
                        last_token: i + len - 1,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Asserted triples from relation verbs between entity pairs, plus
    /// their domain/range-checked inverse closure.
    pub fn infer_triples(&self, text: &str) -> Vec<Triple> {
        let tokens = tokenize(text);
        let mentions = self.mentions(text, &tokens);
        let mut in_span = vec![false; tokens.len()];
        let mut span_at: BTreeMap<usize, usize> = BTreeMap::new();
        for (idx, m) in mentions.iter().enumerate() {
            for flag in &mut in_span[m.first_token..=m.last_token] {
                *flag = true;
            }
            span_at.insert(m.first_token, idx);
        }
        let verbs: Vec<Option<&ConceptName>> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if in_span[i] {
                    None
                } else {
                    self.ontology.relation_for_verb(&t.text)
                }
            })
            .collect();

        let mut asserted = Vec::new();
        for (ai, a) in mentions.iter().enumerate() {
            for b in mentions[ai + 1..].iter().take_while(|b| b.sentence == a.sentence) {
                let between = a.last_token + 1..b.first_token;
                let rel = between.clone().find_map(|ti| {
                    verbs[ti].filter(|rel| self.ontology.is_compatible(&a.span.entity, rel, &b.span.entity))
                });
                let Some(rel) = rel else { continue };
                let recipient = recipient_after(&tokens, b.last_token, &span_at)
                    .map(|idx| &mentions[idx])
                    .filter(|c| c.sentence == b.sentence)
                    .map(|c| c.span.entity.clone());
                asserted.push(
                    Triple::asserted(a.span.entity.clone(), rel.clone(), b.span.entity.clone())
                        .with_counterpart(recipient),
                );
            }
        }
        inverse_closure(asserted, self.ontology, ClosureCheck::DomainRange)
    }

    pub fn annotate(&self, text: &str) -> Annotation {
        Annotation {
            spans: self.recognize(text),
            triples: self.infer_triples(text),
        }
    }
}

/// Index of the mention introduced by `to [the|a|an]` right after a token.
fn recipient_after(tokens: &[Token], last: usize, span_at: &BTreeMap<usize, usize>) -> Option<usize> {
    let mut i = last + 1;
    if tokens.get(i)?.text != "to" {
        return None;
    }
    i += 1;
    if tokens.get(i).is_some_and(|t| ARTICLES.contains(&t.text.as_str())) {
        i += 1;
    }
    span_at.get(&i).copied()
}

/// Sentence number of each token.
fn sentence_ids(text: &str, tokens: &[Token]) -> Vec<usize> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut sentence = 0;
    let mut pos = 0;
    for t in tokens {
        sentence += text[pos..t.byte_start]
            .chars()
            .filter(|c| matches!(c, '.' | '!' | '?' | '\n'))
            .count();
        pos = t.byte_start;
        out.push(sentence);
    }
    out
}

pub fn recognize_entities(text: &str, ontology: &Ontology) -> Vec<EntitySpan> {
    Annotator::new(ontology).recognize(text)
}

pub fn infer_document_triples(text: &str, ontology: &Ontology) -> Vec<Triple> {
    Annotator::new(ontology).infer_triples(text)
}

/// Adds `(counterpart, inverse(p), o)` for every triple with a known
/// counterpart whose relation has an inverse. The derived triple records the
/// original subject as its counterpart, so a second pass adds nothing.
pub fn inverse_closure(
    triples: impl IntoIterator<Item = Triple>,
    ontology: &Ontology,
    check: ClosureCheck,
) -> Vec<Triple> {
    let triples: Vec<Triple> = triples.into_iter().collect();
    let mut derived = Vec::new();
    for t in &triples {
        let (Some(cp), Some(inv)) = (
            &t.counterpart,
            ontology.relation(&t.predicate).and_then(|r| r.inverse.as_ref()),
        ) else {
            continue;
        };
        if check == ClosureCheck::DomainRange && !ontology.is_compatible(cp, inv, &t.object) {
            continue;
        }
        derived.push(Triple {
            subject: cp.clone(),
            predicate: inv.clone(),
            object: t.object.clone(),
            counterpart: Some(t.subject.clone()),
            provenance: Provenance::InverseDerived,
        });
    }
    dedup_triples(triples.into_iter().chain(derived))
}
