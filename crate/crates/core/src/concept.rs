use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Canonical name of an ontology entity (class, individual or relation).
///
/// Canonicalization case-folds, treats underscores as spaces and collapses
/// runs of whitespace, so `Balise_Group`, `balise group` and `BALISE  GROUP`
/// all compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptName(String);

impl ConceptName {
    /// Returns `None` when the input canonicalizes to the empty string.
    pub fn new(raw: &str) -> Option<Self> {
        let canonical = canonicalize(raw);
        if canonical.is_empty() {
            None
        } else {
            Some(Self(canonical))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn canonicalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

impl fmt::Display for ConceptName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ConceptName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl AsRef<str> for ConceptName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for ConceptName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ConceptName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        ConceptName::new(&raw).ok_or_else(|| serde::de::Error::custom("empty concept name"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn surface_variants_share_one_form() {
        let a = ConceptName::new("Balise_Group").unwrap();
        let b = ConceptName::new("balise group").unwrap();
        let c = ConceptName::new("  BALISE \t GROUP ").unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(a.as_str(), "balise group");
    }

    #[test]
    fn empty_is_rejected() {
        assert!(ConceptName::new("").is_none());
        assert!(ConceptName::new(" _ ").is_none());
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(raw in "\\PC{0,40}") {
            let once = canonicalize(&raw);
            prop_assert_eq!(canonicalize(&once), once);
        }
    }
}
