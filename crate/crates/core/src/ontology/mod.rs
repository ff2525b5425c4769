//! Domain ontology: classes, relations, individuals and axioms, with the
//! derived label index, equivalence partition and subclass closure.
//!
//! An [`Ontology`] is immutable once loaded. Share it behind an `Arc` and
//! replace the whole value to reload.

mod parse;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::ConceptName;
use parse::{parse_statements, quote, Statement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OntologyError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid ontology: {0}")]
    Validation(#[from] ValidationError),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("at least one of the individual or the class must be bound")]
    BothUnbound,
}

impl OntologyError {
    fn parse(line: usize, reason: impl Into<String>) -> Self {
        OntologyError::Parse {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("line {line}: `{name}` is not a declared {expected}")]
    UndeclaredOperand {
        line: usize,
        name: String,
        expected: &'static str,
    },
    #[error("line {line}: `{name}` is declared twice")]
    Duplicate { line: usize, name: String },
    #[error("subclass cycle through {0:?}")]
    SubclassCycle(Vec<String>),
    #[error("relation `{relation}` names `{inverse}` as inverse, but `{inverse}` does not name it back")]
    AsymmetricInverse { relation: String, inverse: String },
    #[error("relation `{0}` declares conflicting inverses")]
    ConflictingInverse(String),
    #[error("line {line}: equivalence between `{a}` and `{b}` must join two classes")]
    NonClassEquivalence { line: usize, a: String, b: String },
    #[error("label `{label}` is used by both `{first}` and `{second}`")]
    AmbiguousLabel {
        label: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Class,
    Individual,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Class => "class",
            EntityKind::Individual => "individual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionPolicy {
    #[default]
    EquivalentsOnly,
    WithSubtypes,
    WithSupertypes,
}

impl FromStr for ExpansionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "equivalents" | "equivalents-only" | "eq" => Ok(Self::EquivalentsOnly),
            "subtypes" | "with-subtypes" | "sub" => Ok(Self::WithSubtypes),
            "supertypes" | "with-supertypes" | "super" => Ok(Self::WithSupertypes),
            other => Err(format!(
                "unknown expansion policy `{other}` (expected equivalents, subtypes or supertypes)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyClass {
    pub name: ConceptName,
    /// Surface form as declared, used for display and serialization.
    pub display: String,
    /// Extra surface labels, name excluded.
    pub extra_labels: Vec<String>,
    pub category: Option<ConceptName>,
}

impl OntologyClass {
    /// All canonical labels, the name included.
    pub fn labels(&self) -> BTreeSet<ConceptName> {
        std::iter::once(self.name.clone())
            .chain(self.extra_labels.iter().filter_map(|l| ConceptName::new(l)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub domain: ConceptName,
    pub range: ConceptName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: ConceptName,
    pub display: String,
    pub signatures: Vec<Signature>,
    pub inverse: Option<ConceptName>,
    pub extra_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub name: ConceptName,
    pub display: String,
    pub class_of: ConceptName,
    pub extra_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    SubClassOf(ConceptName, ConceptName),
    EquivalentClass(ConceptName, ConceptName),
    InverseOf(ConceptName, ConceptName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityRef<'a> {
    pub name: &'a ConceptName,
    pub kind: EntityKind,
}

/// A loaded, validated and indexed ontology.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    classes: BTreeMap<ConceptName, OntologyClass>,
    relations: BTreeMap<ConceptName, Relation>,
    individuals: BTreeMap<ConceptName, Individual>,
    axioms: Vec<Axiom>,
    class_order: Vec<ConceptName>,
    relation_order: Vec<ConceptName>,
    individual_order: Vec<ConceptName>,

    entity_labels: BTreeMap<ConceptName, (ConceptName, EntityKind)>,
    relation_labels: BTreeMap<ConceptName, ConceptName>,
    group_of: BTreeMap<ConceptName, usize>,
    groups: Vec<BTreeSet<ConceptName>>,
    group_parents: Vec<BTreeSet<usize>>,
    group_children: Vec<BTreeSet<usize>>,
    group_ancestors: Vec<BTreeSet<usize>>,
    group_descendants: Vec<BTreeSet<usize>>,
}

impl Ontology {
    /// Parses, validates and indexes an ontology file.
    pub fn load(text: &str) -> Result<Self, OntologyError> {
        let statements = parse_statements(text)?;
        let mut ont = Ontology::default();
        let mut pending_sub = Vec::new();
        let mut pending_eq = Vec::new();
        let mut categories = Vec::new();
        let mut class_refs = Vec::new();
        let mut inverse_refs = Vec::new();

        let canon =
            |raw: &str, line: usize| ConceptName::new(raw).ok_or_else(|| OntologyError::parse(line, "empty name"));

        for (line, stmt) in statements {
            match stmt {
                Statement::Class { name, labels, category } => {
                    let key = canon(&name, line)?;
                    if ont.classes.contains_key(&key) {
                        return Err(ValidationError::Duplicate { line, name }.into());
                    }
                    let category = match category {
                        Some(c) => {
                            let c = canon(&c, line)?;
                            categories.push((line, c.clone()));
                            Some(c)
                        }
                        None => None,
                    };
                    ont.class_order.push(key.clone());
                    ont.classes.insert(
                        key.clone(),
                        OntologyClass {
                            name: key,
                            display: name,
                            extra_labels: labels,
                            category,
                        },
                    );
                }
                Statement::Relation {
                    name,
                    domain,
                    range,
                    inverse,
                    labels,
                } => {
                    let key = canon(&name, line)?;
                    let sig = Signature {
                        domain: canon(&domain, line)?,
                        range: canon(&range, line)?,
                    };
                    class_refs.push((line, sig.domain.clone()));
                    class_refs.push((line, sig.range.clone()));
                    let inverse = match inverse {
                        Some(i) => Some(canon(&i, line)?),
                        None => None,
                    };
                    if let Some(inv) = &inverse {
                        inverse_refs.push((line, inv.clone()));
                    }
                    match ont.relations.get_mut(&key) {
                        Some(rel) => {
                            match (&rel.inverse, &inverse) {
                                (Some(a), Some(b)) if a != b => {
                                    return Err(ValidationError::ConflictingInverse(name).into())
                                }
                                (None, Some(_)) => rel.inverse = inverse,
                                _ => {}
                            }
                            if !rel.signatures.contains(&sig) {
                                rel.signatures.push(sig);
                            }
                            for l in labels {
                                if !rel.extra_labels.contains(&l) {
                                    rel.extra_labels.push(l);
                                }
                            }
                        }
                        None => {
                            ont.relation_order.push(key.clone());
                            ont.relations.insert(
                                key.clone(),
                                Relation {
                                    name: key,
                                    display: name,
                                    signatures: vec![sig],
                                    inverse,
                                    extra_labels: labels,
                                },
                            );
                        }
                    }
                }
                Statement::Individual { name, class_of, labels } => {
                    let key = canon(&name, line)?;
                    if ont.individuals.contains_key(&key) {
                        return Err(ValidationError::Duplicate { line, name }.into());
                    }
                    let class_of = canon(&class_of, line)?;
                    class_refs.push((line, class_of.clone()));
                    ont.individual_order.push(key.clone());
                    ont.individuals.insert(
                        key.clone(),
                        Individual {
                            name: key,
                            display: name,
                            class_of,
                            extra_labels: labels,
                        },
                    );
                }
                Statement::SubClass(a, b) => {
                    pending_sub.push((line, canon(&a, line)?, canon(&b, line)?, a, b));
                }
                Statement::Equivalent(a, b) => {
                    pending_eq.push((line, canon(&a, line)?, canon(&b, line)?, a, b));
                }
            }
        }

        let undeclared = |line, name: &ConceptName, expected| ValidationError::UndeclaredOperand {
            line,
            name: name.to_string(),
            expected,
        };
        for (line, name) in class_refs.iter().chain(categories.iter()) {
            if !ont.classes.contains_key(name) {
                return Err(undeclared(*line, name, "class").into());
            }
        }
        for (line, name) in &inverse_refs {
            if !ont.relations.contains_key(name) {
                return Err(undeclared(*line, name, "relation").into());
            }
        }
        for key in ont.individuals.keys() {
            if ont.classes.contains_key(key) {
                return Err(ValidationError::AmbiguousLabel {
                    label: key.to_string(),
                    first: format!("class {key}"),
                    second: format!("individual {key}"),
                }
                .into());
            }
        }
        for rel in ont.relations.values() {
            if let Some(inv) = &rel.inverse {
                let back = ont.relations[inv].inverse.as_ref();
                if back != Some(&rel.name) {
                    return Err(ValidationError::AsymmetricInverse {
                        relation: rel.name.to_string(),
                        inverse: inv.to_string(),
                    }
                    .into());
                }
            }
        }
        for (line, a, b, ra, rb) in &pending_eq {
            for (name, raw) in [(a, ra), (b, rb)] {
                if !ont.classes.contains_key(name) {
                    if ont.individuals.contains_key(name) {
                        return Err(ValidationError::NonClassEquivalence {
                            line: *line,
                            a: ra.clone(),
                            b: rb.clone(),
                        }
                        .into());
                    }
                    return Err(ValidationError::UndeclaredOperand {
                        line: *line,
                        name: raw.clone(),
                        expected: "class",
                    }
                    .into());
                }
            }
            ont.axioms.push(Axiom::EquivalentClass(a.clone(), b.clone()));
        }
        for (line, a, b, ra, rb) in &pending_sub {
            for (name, raw) in [(a, ra), (b, rb)] {
                if !ont.classes.contains_key(name) {
                    return Err(ValidationError::UndeclaredOperand {
                        line: *line,
                        name: raw.clone(),
                        expected: "class",
                    }
                    .into());
                }
            }
            ont.axioms.push(Axiom::SubClassOf(a.clone(), b.clone()));
        }
        let mut seen_inverse = BTreeSet::new();
        for rel in ont.relations.values() {
            if let Some(inv) = &rel.inverse {
                let pair = if rel.name <= *inv {
                    (rel.name.clone(), inv.clone())
                } else {
                    (inv.clone(), rel.name.clone())
                };
                if seen_inverse.insert(pair.clone()) {
                    ont.axioms.push(Axiom::InverseOf(pair.0, pair.1));
                }
            }
        }

        ont.build_indices()?;
        Ok(ont)
    }

    fn build_indices(&mut self) -> Result<(), OntologyError> {
        // Label index over classes and individuals.
        let mut labels: BTreeMap<ConceptName, (ConceptName, EntityKind)> = BTreeMap::new();
        let class_entries = self
            .classes
            .values()
            .map(|c| (c.name.clone(), EntityKind::Class, c.labels()));
        let individual_entries = self.individuals.values().map(|i| {
            let ls: BTreeSet<ConceptName> = std::iter::once(i.name.clone())
                .chain(i.extra_labels.iter().filter_map(|l| ConceptName::new(l)))
                .collect();
            (i.name.clone(), EntityKind::Individual, ls)
        });
        for (name, kind, ls) in class_entries.chain(individual_entries) {
            for label in ls {
                if let Some((other, _)) = labels.get(&label) {
                    if *other != name {
                        return Err(ValidationError::AmbiguousLabel {
                            label: label.to_string(),
                            first: other.to_string(),
                            second: name.to_string(),
                        }
                        .into());
                    }
                }
                labels.insert(label, (name.clone(), kind));
            }
        }
        self.entity_labels = labels;

        let mut rel_labels = BTreeMap::new();
        for rel in self.relations.values() {
            let ls =
                std::iter::once(rel.name.clone()).chain(rel.extra_labels.iter().filter_map(|l| ConceptName::new(l)));
            for label in ls {
                if let Some(other) = rel_labels.get(&label) {
                    if *other != rel.name {
                        return Err(ValidationError::AmbiguousLabel {
                            label: label.to_string(),
                            first: format!("{other}"),
                            second: rel.name.to_string(),
                        }
                        .into());
                    }
                }
                rel_labels.insert(label, rel.name.clone());
            }
        }
        self.relation_labels = rel_labels;

        // Equivalence partition by union-find over class declaration order.
        let names: Vec<ConceptName> = self.class_order.clone();
        let index: BTreeMap<&ConceptName, usize> = names.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut parent: Vec<usize> = (0..names.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for ax in &self.axioms {
            if let Axiom::EquivalentClass(a, b) = ax {
                let (ra, rb) = (find(&mut parent, index[a]), find(&mut parent, index[b]));
                if ra != rb {
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent[hi] = lo;
                }
            }
        }
        let mut root_to_group: BTreeMap<usize, usize> = BTreeMap::new();
        let mut groups: Vec<BTreeSet<ConceptName>> = Vec::new();
        let mut group_of = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            let root = find(&mut parent, i);
            let g = *root_to_group.entry(root).or_insert_with(|| {
                groups.push(BTreeSet::new());
                groups.len() - 1
            });
            groups[g].insert(name.clone());
            group_of.insert(name.clone(), g);
        }

        let n = groups.len();
        let mut parents = vec![BTreeSet::new(); n];
        let mut children = vec![BTreeSet::new(); n];
        for ax in &self.axioms {
            if let Axiom::SubClassOf(a, b) = ax {
                let (ga, gb) = (group_of[a], group_of[b]);
                if ga != gb {
                    parents[ga].insert(gb);
                    children[gb].insert(ga);
                }
            }
        }

        // Cycle detection on the contracted graph (iterative DFS, colours).
        let mut colour = vec![0u8; n];
        for start in 0..n {
            if colour[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = vec![(start, parents[start].iter().copied().collect())];
            colour[start] = 1;
            while let Some((node, pending)) = stack.last_mut() {
                let node = *node;
                match pending.pop() {
                    Some(next) => match colour[next] {
                        0 => {
                            colour[next] = 1;
                            stack.push((next, parents[next].iter().copied().collect()));
                        }
                        1 => {
                            let pos = stack.iter().position(|(g, _)| *g == next).unwrap_or(0);
                            let cycle = stack[pos..]
                                .iter()
                                .map(|(g, _)| {
                                    let rep = groups[*g].iter().next().unwrap();
                                    self.classes[rep].display.clone()
                                })
                                .collect();
                            return Err(ValidationError::SubclassCycle(cycle).into());
                        }
                        _ => {}
                    },
                    None => {
                        colour[node] = 2;
                        stack.pop();
                    }
                }
            }
        }

        let reach = |edges: &Vec<BTreeSet<usize>>, from: usize| {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = edges[from].iter().copied().collect();
            while let Some(g) = queue.pop_front() {
                if seen.insert(g) {
                    queue.extend(edges[g].iter().copied());
                }
            }
            seen
        };
        self.group_ancestors = (0..n).map(|g| reach(&parents, g)).collect();
        self.group_descendants = (0..n).map(|g| reach(&children, g)).collect();
        self.group_parents = parents;
        self.group_children = children;
        self.groups = groups;
        self.group_of = group_of;
        Ok(())
    }

    /// Writes the ontology back in the file format accepted by [`Ontology::load`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let labels_clause = |labels: &[String]| {
            if labels.is_empty() {
                String::new()
            } else {
                let ls: Vec<String> = labels.iter().map(|l| quote(l)).collect();
                format!(" labels: {}", ls.join("; "))
            }
        };
        for name in &self.class_order {
            let c = &self.classes[name];
            let _ = write!(out, "class {}{}", quote(&c.display), labels_clause(&c.extra_labels));
            if let Some(cat) = &c.category {
                let _ = write!(out, " category: {}", quote(&self.classes[cat].display));
            }
            out.push('\n');
        }
        for name in &self.relation_order {
            let r = &self.relations[name];
            for (i, sig) in r.signatures.iter().enumerate() {
                let _ = write!(
                    out,
                    "relation {} domain {} range {}",
                    quote(&r.display),
                    quote(&self.classes[&sig.domain].display),
                    quote(&self.classes[&sig.range].display),
                );
                if let Some(inv) = &r.inverse {
                    let _ = write!(out, " inverse {}", quote(&self.relations[inv].display));
                }
                if i == 0 {
                    out.push_str(&labels_clause(&r.extra_labels));
                }
                out.push('\n');
            }
        }
        for name in &self.individual_order {
            let ind = &self.individuals[name];
            let _ = writeln!(
                out,
                "individual {} : {}{}",
                quote(&ind.display),
                quote(&self.classes[&ind.class_of].display),
                labels_clause(&ind.extra_labels)
            );
        }
        for ax in &self.axioms {
            let disp = |n: &ConceptName| quote(&self.classes[n].display);
            match ax {
                Axiom::SubClassOf(a, b) => {
                    let _ = writeln!(out, "subclass {} {}", disp(a), disp(b));
                }
                Axiom::EquivalentClass(a, b) => {
                    let _ = writeln!(out, "equivalent {} {}", disp(a), disp(b));
                }
                Axiom::InverseOf(..) => {}
            }
        }
        out
    }

    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.class_order.iter().map(|n| &self.classes[n])
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relation_order.iter().map(|n| &self.relations[n])
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Individual> {
        self.individual_order.iter().map(|n| &self.individuals[n])
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn class(&self, name: &ConceptName) -> Option<&OntologyClass> {
        self.classes.get(name)
    }

    pub fn relation(&self, name: &ConceptName) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn individual(&self, name: &ConceptName) -> Option<&Individual> {
        self.individuals.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.relations.is_empty() && self.individuals.is_empty()
    }

    /// Declared surface form of an entity or relation, or the canonical
    /// text when the name is not in the ontology.
    pub fn display_name<'a>(&'a self, name: &'a ConceptName) -> &'a str {
        if let Some(c) = self.classes.get(name) {
            &c.display
        } else if let Some(i) = self.individuals.get(name) {
            &i.display
        } else if let Some(r) = self.relations.get(name) {
            &r.display
        } else {
            name.as_str()
        }
    }

    /// Resolves any label of a class or individual to the entity.
    pub fn resolve(&self, term: &str) -> Option<EntityRef<'_>> {
        let key = ConceptName::new(term)?;
        self.resolve_name(&key)
    }

    pub fn resolve_name(&self, key: &ConceptName) -> Option<EntityRef<'_>> {
        self.entity_labels
            .get(key)
            .map(|(name, kind)| EntityRef { name, kind: *kind })
    }

    /// Resolves a relation name or alias label.
    pub fn resolve_relation(&self, term: &str) -> Option<&ConceptName> {
        let key = ConceptName::new(term)?;
        self.relation_labels.get(&key)
    }

    /// Maps an inflected verb (`sends`, `contains`, `received`) to a relation
    /// by trying the word itself and then with `s`, `es` or `ed` stripped.
    pub fn relation_for_verb(&self, word: &str) -> Option<&ConceptName> {
        let word = word.to_lowercase();
        if let Some(r) = self.resolve_relation(&word) {
            return Some(r);
        }
        ["s", "es", "ed"]
            .iter()
            .filter_map(|suffix| word.strip_suffix(suffix))
            .filter(|stem| !stem.is_empty())
            .find_map(|stem| self.resolve_relation(stem))
    }

    /// All canonical labels (names included) of classes and individuals.
    pub fn entity_labels(&self) -> impl Iterator<Item = (&ConceptName, &ConceptName, EntityKind)> {
        self.entity_labels
            .iter()
            .map(|(label, (name, kind))| (label, name, *kind))
    }

    /// All canonical relation labels, names included.
    pub fn relation_labels(&self) -> impl Iterator<Item = (&ConceptName, &ConceptName)> {
        self.relation_labels.iter()
    }

    /// Class of an entity: the class itself, or the declared class of an
    /// individual.
    pub fn class_of_entity(&self, name: &ConceptName) -> Option<&ConceptName> {
        if let Some(c) = self.classes.get(name) {
            Some(&c.name)
        } else {
            self.individuals.get(name).map(|i| &i.class_of)
        }
    }

    /// `a` is-a `b`: same class, equivalent, or a transitive subclass.
    pub fn is_a(&self, a: &ConceptName, b: &ConceptName) -> bool {
        match (self.group_of.get(a), self.group_of.get(b)) {
            (Some(&ga), Some(&gb)) => ga == gb || self.group_ancestors[ga].contains(&gb),
            _ => false,
        }
    }

    /// Whether `(subject, relation, object)` fits one of the relation's
    /// domain/range signatures. Individuals are checked through their class.
    pub fn is_compatible(&self, subject: &ConceptName, relation: &ConceptName, object: &ConceptName) -> bool {
        let (Some(rel), Some(s), Some(o)) = (
            self.relations.get(relation),
            self.class_of_entity(subject),
            self.class_of_entity(object),
        ) else {
            return false;
        };
        rel.signatures
            .iter()
            .any(|sig| self.is_a(s, &sig.domain) && self.is_a(o, &sig.range))
    }

    fn equivalence_group(&self, class: &ConceptName) -> &BTreeSet<ConceptName> {
        &self.groups[self.group_of[class]]
    }

    /// Representative of an equivalence group: the first declared member.
    pub fn group_representative(&self, class: &ConceptName) -> Option<&ConceptName> {
        let g = *self.group_of.get(class)?;
        self.class_order.iter().find(|n| self.group_of[*n] == g)
    }

    pub fn equivalents(&self, class: &ConceptName) -> BTreeSet<ConceptName> {
        match self.group_of.get(class) {
            Some(&g) => self.groups[g].clone(),
            None => BTreeSet::new(),
        }
    }

    fn class_key(&self, term: &str) -> Result<ConceptName, OntologyError> {
        match self.resolve(term) {
            Some(EntityRef {
                name,
                kind: EntityKind::Class,
            }) => Ok(name.clone()),
            _ => Err(OntologyError::UnknownEntity(term.to_string())),
        }
    }

    fn members(&self, groups: impl IntoIterator<Item = usize>) -> BTreeSet<ConceptName> {
        groups
            .into_iter()
            .flat_map(|g| self.groups[g].iter().cloned())
            .collect()
    }

    /// `Class(?a)`: every class name, or the class named by `term`.
    pub fn query_class(&self, term: Option<&str>) -> BTreeSet<ConceptName> {
        match term {
            None => self.classes.keys().cloned().collect(),
            Some(t) => match self.resolve(t) {
                Some(EntityRef {
                    name,
                    kind: EntityKind::Class,
                }) => BTreeSet::from([name.clone()]),
                _ => BTreeSet::new(),
            },
        }
    }

    /// `Type(?a, ?b)`: the class of an individual, or all individuals of a
    /// class including those of its subclasses and equivalents.
    pub fn query_type(
        &self,
        individual: Option<&str>,
        class: Option<&str>,
    ) -> Result<BTreeSet<(ConceptName, ConceptName)>, OntologyError> {
        let class_key = match class {
            Some(c) => match self.resolve(c) {
                Some(EntityRef {
                    name,
                    kind: EntityKind::Class,
                }) => Some(name.clone()),
                _ => return Ok(BTreeSet::new()),
            },
            None => None,
        };
        match (individual, class_key) {
            (None, None) if class.is_none() => Err(OntologyError::BothUnbound),
            (Some(ind), class_key) => {
                let Some(EntityRef {
                    name,
                    kind: EntityKind::Individual,
                }) = self.resolve(ind)
                else {
                    return Ok(BTreeSet::new());
                };
                let of = &self.individuals[name].class_of;
                if class_key.as_ref().is_some_and(|c| !self.is_a(of, c)) {
                    return Ok(BTreeSet::new());
                }
                Ok(BTreeSet::from([(name.clone(), of.clone())]))
            }
            (None, Some(c)) => Ok(self
                .individuals
                .values()
                .filter(|i| self.is_a(&i.class_of, &c))
                .map(|i| (i.name.clone(), i.class_of.clone()))
                .collect()),
            (None, None) => Ok(BTreeSet::new()),
        }
    }

    /// `PropertyValue(?a, ?p, ?v)` at the terminological level: every
    /// `(relation, range)` whose domain is the entity's class, an equivalent
    /// or a superclass.
    pub fn query_property_value(&self, term: &str) -> Result<BTreeSet<(ConceptName, ConceptName)>, OntologyError> {
        let entity = self
            .resolve(term)
            .ok_or_else(|| OntologyError::UnknownEntity(term.to_string()))?;
        let class = self
            .class_of_entity(entity.name)
            .expect("resolved entity has a class")
            .clone();
        Ok(self
            .relations
            .values()
            .flat_map(|r| {
                r.signatures
                    .iter()
                    .filter(|sig| self.is_a(&class, &sig.domain))
                    .map(|sig| (r.name.clone(), sig.range.clone()))
            })
            .collect())
    }

    pub fn subclasses(&self, term: &str, transitive: bool) -> Result<BTreeSet<ConceptName>, OntologyError> {
        let key = self.class_key(term)?;
        let g = self.group_of[&key];
        Ok(if transitive {
            self.members(self.group_descendants[g].iter().copied())
        } else {
            self.members(self.group_children[g].iter().copied())
        })
    }

    pub fn superclasses(&self, term: &str, transitive: bool) -> Result<BTreeSet<ConceptName>, OntologyError> {
        let key = self.class_key(term)?;
        let g = self.group_of[&key];
        Ok(if transitive {
            self.members(self.group_ancestors[g].iter().copied())
        } else {
            self.members(self.group_parents[g].iter().copied())
        })
    }

    /// Expands a term to its equivalence group, optionally adding the
    /// transitive subtypes or supertypes of every group member. The term
    /// itself is always part of the result.
    pub fn expand_concept(&self, term: &str, policy: ExpansionPolicy) -> Result<BTreeSet<ConceptName>, OntologyError> {
        let entity = self
            .resolve(term)
            .ok_or_else(|| OntologyError::UnknownEntity(term.to_string()))?;
        if entity.kind == EntityKind::Individual {
            return Ok(BTreeSet::from([entity.name.clone()]));
        }
        let g = self.group_of[entity.name];
        let mut out = self.equivalence_group(entity.name).clone();
        match policy {
            ExpansionPolicy::EquivalentsOnly => {}
            ExpansionPolicy::WithSubtypes => out.extend(self.members(self.group_descendants[g].iter().copied())),
            ExpansionPolicy::WithSupertypes => out.extend(self.members(self.group_ancestors[g].iter().copied())),
        }
        Ok(out)
    }

    /// Root classes (no superclass), one per equivalence group.
    pub fn root_classes(&self) -> Vec<&ConceptName> {
        self.class_order
            .iter()
            .filter(|n| {
                let g = self.group_of[*n];
                self.group_parents[g].is_empty() && self.group_representative(n) == Some(*n)
            })
            .collect()
    }

    /// Direct subclasses of a class, one representative per equivalence
    /// group, in declaration order.
    pub fn direct_subclass_representatives(&self, class: &ConceptName) -> Vec<&ConceptName> {
        let Some(&g) = self.group_of.get(class) else {
            return Vec::new();
        };
        let children = &self.group_children[g];
        self.class_order
            .iter()
            .filter(|n| children.contains(&self.group_of[*n]) && self.group_representative(n) == Some(*n))
            .collect()
    }

    /// Individuals declared directly on any member of the class's group.
    pub fn direct_individuals(&self, class: &ConceptName) -> Vec<&Individual> {
        let group = self.equivalents(class);
        self.individuals().filter(|i| group.contains(&i.class_of)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn c(s: &str) -> ConceptName {
        ConceptName::new(s).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<ConceptName> {
        items.iter().map(|s| c(s)).collect()
    }

    fn railway() -> Ontology {
        fixtures::railway_ontology()
    }

    #[test]
    fn empty_file_gives_empty_ontology() {
        let ont = Ontology::load("").unwrap();
        assert!(ont.is_empty());
        assert!(ont.query_class(None).is_empty());
    }

    #[test]
    fn individual_class_is_recorded() {
        let ont = Ontology::load("class Train\nindividual Train1 : Train\n").unwrap();
        assert_eq!(ont.individual(&c("Train1")).unwrap().class_of, c("Train"));
    }

    #[test]
    fn subclass_cycle_is_rejected() {
        let err = Ontology::load("class A\nclass B\nsubclass A B\nsubclass B A\n").unwrap_err();
        assert!(
            matches!(err, OntologyError::Validation(ValidationError::SubclassCycle(_))),
            "{err}"
        );
        // With an equivalence the mutual subclassing collapses into one group.
        Ontology::load("class A\nclass B\nequivalent A B\nsubclass A B\nsubclass B A\n").unwrap();
    }

    #[test]
    fn longer_cycles_are_rejected() {
        let err = Ontology::load("class A\nclass B\nclass C\nsubclass A B\nsubclass B C\nsubclass C A\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::SubclassCycle(_))
        ));
    }

    #[test]
    fn validation_errors() {
        let err = Ontology::load("class A\nsubclass A B\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::UndeclaredOperand { line: 2, .. })
        ));
        let err = Ontology::load("class A\nrelation r domain A range A inverse q\nrelation q domain A range A\n")
            .unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::AsymmetricInverse { .. })
        ));
        let err = Ontology::load("class A\nindividual a1 : A\nequivalent A a1\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::NonClassEquivalence { .. })
        ));
        let err = Ontology::load("class A\nclass a\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::Duplicate { .. })
        ));
        let err = Ontology::load("class A labels: x\nclass B labels: X\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::AmbiguousLabel { .. })
        ));
        let err = Ontology::load("class A category: Top\n").unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Validation(ValidationError::UndeclaredOperand { .. })
        ));
    }

    #[test]
    fn query_class_on_railway() {
        let ont = railway();
        let all = ont.query_class(None);
        assert!(set(&["Train", "Balise", "Balise Group", "Telegram", "SSB"]).is_subset(&all));
        assert_eq!(ont.query_class(Some("train")), set(&["Train"]));
        assert_eq!(ont.query_class(Some("BALISE_GROUP")), set(&["Balise Group"]));
        assert_eq!(ont.query_class(Some("Movement Authority")), set(&["MA"]));
        assert!(ont.query_class(Some("widget")).is_empty());
        assert!(ont.query_class(Some("Train1")).is_empty());
    }

    #[test]
    fn query_type_both_directions() {
        let ont = railway();
        let expect = BTreeSet::from([(c("Train1"), c("Train"))]);
        assert_eq!(ont.query_type(None, Some("Train")).unwrap(), expect);
        assert_eq!(ont.query_type(Some("Train1"), None).unwrap(), expect);
        assert_eq!(ont.query_type(None, None), Err(OntologyError::BothUnbound));
        // Treno1 is an alias of OBU1.
        assert_eq!(
            ont.query_type(Some("Treno1"), None).unwrap(),
            BTreeSet::from([(c("OBU1"), c("OBU"))])
        );
        // Individuals of an equivalent class.
        assert!(ont
            .query_type(None, Some("SSB"))
            .unwrap()
            .contains(&(c("OBU1"), c("OBU"))));
    }

    #[test]
    fn query_type_follows_subclasses() {
        let text = format!("{}\nindividual MA1 : MA\n", fixtures::RAILWAY_ONTOLOGY);
        let ont = Ontology::load(&text).unwrap();
        let got = ont.query_type(None, Some("Radio Message")).unwrap();
        assert!(got.contains(&(c("MA1"), c("MA"))));
        // Brute force over declared individuals and superclass reachability.
        let brute: BTreeSet<_> = ont
            .individuals()
            .filter(|i| {
                let mut frontier = vec![i.class_of.clone()];
                let mut seen = BTreeSet::new();
                while let Some(x) = frontier.pop() {
                    if !seen.insert(x.clone()) {
                        continue;
                    }
                    for ax in ont.axioms() {
                        if let Axiom::SubClassOf(a, b) = ax {
                            if *a == x {
                                frontier.push(b.clone());
                            }
                        }
                    }
                }
                seen.contains(&c("Radio Message"))
            })
            .map(|i| (i.name.clone(), i.class_of.clone()))
            .collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn property_values() {
        let ont = railway();
        assert!(ont
            .query_property_value("Balise")
            .unwrap()
            .contains(&(c("contain"), c("Telegram"))));
        assert!(ont
            .query_property_value("Train")
            .unwrap()
            .contains(&(c("send"), c("Position Report"))));
        // Individuals inherit their class's relations.
        assert!(ont
            .query_property_value("Train1")
            .unwrap()
            .contains(&(c("send"), c("Position Report"))));
        // Equivalents share domain relations.
        assert!(ont
            .query_property_value("SSB")
            .unwrap()
            .contains(&(c("use"), c("Linking Information"))));
        assert_eq!(
            ont.query_property_value("nonexistent"),
            Err(OntologyError::UnknownEntity("nonexistent".into()))
        );
    }

    #[test]
    fn sub_and_super_classes() {
        let ont = railway();
        let subs = ont.subclasses("Radio Message", true).unwrap();
        assert!(subs.contains(&c("Position Report")));
        assert!(subs.contains(&c("SoM Position Report")));
        assert!(!ont
            .subclasses("Radio Message", false)
            .unwrap()
            .contains(&c("SoM Position Report")));
        assert_eq!(
            ont.superclasses("Position Report", false).unwrap(),
            set(&["Radio Message"])
        );
        assert!(ont.subclasses("Telegram", true).unwrap().is_empty());
        assert!(!ont
            .superclasses("SoM Position Report", true)
            .unwrap()
            .contains(&c("SoM Position Report")));
        assert!(matches!(
            ont.subclasses("nope", true),
            Err(OntologyError::UnknownEntity(_))
        ));
    }

    #[test]
    fn expansion_policies() {
        let ont = railway();
        assert_eq!(
            ont.expand_concept("OBU", ExpansionPolicy::EquivalentsOnly).unwrap(),
            set(&["OBU", "SSB", "on-board equipment", "ERTMS-ETCS on-board equipment"])
        );
        assert_eq!(
            ont.expand_concept("Telegram", ExpansionPolicy::EquivalentsOnly)
                .unwrap(),
            set(&["Telegram"])
        );
        assert_eq!(
            ont.expand_concept("Radio Message", ExpansionPolicy::WithSubtypes)
                .unwrap(),
            set(&[
                "Radio Message",
                "Position Report",
                "SoM Position Report",
                "MA",
                "Emergency Brake"
            ])
        );
        assert_eq!(
            ont.expand_concept("SoM Position Report", ExpansionPolicy::WithSupertypes)
                .unwrap(),
            set(&["SoM Position Report", "Position Report", "Radio Message"])
        );
        assert_eq!(
            ont.expand_concept("OBU1", ExpansionPolicy::WithSubtypes).unwrap(),
            set(&["OBU1"])
        );
        assert!(ont.expand_concept("zzz", ExpansionPolicy::EquivalentsOnly).is_err());
    }

    #[test]
    fn verb_forms_resolve_to_relations() {
        let ont = railway();
        for (verb, rel) in [
            ("sends", "send"),
            ("send", "send"),
            ("capts", "capt"),
            ("contains", "contain"),
            ("receives", "receive"),
            ("Recive", "receive"),
            ("using", "use"),
            ("performs", "perform"),
        ] {
            assert_eq!(ont.relation_for_verb(verb), Some(&c(rel)), "{verb}");
        }
        assert_eq!(ont.relation_for_verb("transmits"), None);
        assert_eq!(ont.relation_for_verb("is"), None);
    }

    #[test]
    fn compatibility_uses_classes_and_closure() {
        let ont = railway();
        assert!(ont.is_compatible(&c("OBU"), &c("send"), &c("SoM Position Report")));
        assert!(ont.is_compatible(&c("OBU1"), &c("send"), &c("SoM Position Report")));
        assert!(ont.is_compatible(&c("SSB"), &c("use"), &c("Linking Information")));
        assert!(!ont.is_compatible(&c("Telegram"), &c("contain"), &c("Balise")));
        assert!(!ont.is_compatible(&c("RBC"), &c("receive"), &c("SoM Position Report")));
    }

    #[test]
    fn serialization_round_trip_on_fixture() {
        let ont = railway();
        let again = Ontology::load(&ont.to_text()).unwrap();
        assert_eq!(again.to_text(), ont.to_text());
        assert_eq!(again.query_class(None), ont.query_class(None));
    }

    #[test]
    fn tree_helpers() {
        let ont = railway();
        let roots = ont.root_classes();
        assert!(roots.contains(&&c("Radio Message")));
        assert!(roots.contains(&&c("OBU")));
        assert!(!roots.contains(&&c("SSB")));
        assert_eq!(
            ont.direct_subclass_representatives(&c("Position Report")),
            vec![&c("SoM Position Report")]
        );
        assert_eq!(ont.direct_individuals(&c("SSB")).len(), 1);
    }
}
