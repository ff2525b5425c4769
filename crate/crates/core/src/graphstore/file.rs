//! Line-oriented graph file.
//!
//! ```text
//! semtrace-graph v1
//! N <id> <label> <json-props>
//! E <src> <dst> <label> <json-props>
//! END <nodes> <edges>
//! ```
//!
//! Edge labels containing whitespace are written as JSON strings. The
//! trailer lets a truncated file be told apart from a complete one.

use std::io::Write;
use std::path::Path;

use super::{Edge, GraphError, GraphStore, Node, NodeLabel, Props};
use crate::concept::ConceptName;

pub const FORMAT_HEADER: &str = "semtrace-graph v1";

fn corrupt(line: usize, reason: impl Into<String>) -> GraphError {
    GraphError::Corrupt {
        line,
        reason: reason.into(),
    }
}

fn write_label(label: &str) -> String {
    if label.is_empty() || label.contains(char::is_whitespace) || label.starts_with('"') {
        serde_json::to_string(label).expect("string serializes")
    } else {
        label.to_string()
    }
}

/// Splits off the next whitespace-delimited or JSON-quoted token.
fn next_token(s: &str) -> Option<(String, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    if s.starts_with('"') {
        let mut de = serde_json::Deserializer::from_str(s).into_iter::<String>();
        let value = de.next()?.ok()?;
        let used = de.byte_offset();
        return Some((value, &s[used..]));
    }
    let end = s.find(char::is_whitespace).unwrap_or(s.len());
    Some((s[..end].to_string(), &s[end..]))
}

impl GraphStore {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        for n in self.nodes.values() {
            let props = serde_json::to_string(&n.props).expect("props serialize");
            out.push_str(&format!("N {} {} {}\n", n.id, n.label.as_str(), props));
        }
        for e in &self.edges {
            let props = serde_json::to_string(&e.props).expect("props serialize");
            out.push_str(&format!("E {} {} {} {}\n", e.src, e.dst, write_label(&e.label), props));
        }
        out.push_str(&format!("END {} {}\n", self.nodes.len(), self.edges.len()));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == FORMAT_HEADER => {}
            Some((_, h)) => return Err(GraphError::FormatVersion(h.chars().take(40).collect())),
            None => return Err(GraphError::FormatVersion("empty file".into())),
        }
        let mut g = GraphStore::new();
        let mut trailer = None;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if trailer.is_some() {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(corrupt(lineno, "content after END"));
            }
            let (kind, rest) = next_token(line).ok_or_else(|| corrupt(lineno, "empty line"))?;
            match kind.as_str() {
                "N" => {
                    let (id, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing node id"))?;
                    let (label, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing label"))?;
                    let id: u64 = id.parse().map_err(|_| corrupt(lineno, "bad node id"))?;
                    let label: NodeLabel = label.parse().map_err(|e: String| corrupt(lineno, e))?;
                    let props: Props = serde_json::from_str(rest.trim()).map_err(|e| corrupt(lineno, e.to_string()))?;
                    if g.nodes.contains_key(&id) {
                        return Err(corrupt(lineno, format!("duplicate node {id}")));
                    }
                    let key = match label {
                        NodeLabel::DocumentNode => props.get("doc_id"),
                        NodeLabel::EntityNode => props.get("name"),
                    }
                    .cloned()
                    .ok_or_else(|| corrupt(lineno, "node without its key property"))?;
                    match label {
                        NodeLabel::DocumentNode => {
                            if g.docs.insert(key, id).is_some() {
                                return Err(corrupt(lineno, "duplicate document node"));
                            }
                        }
                        NodeLabel::EntityNode => {
                            let name = ConceptName::new(&key).ok_or_else(|| corrupt(lineno, "empty entity name"))?;
                            if g.entities.insert(name, id).is_some() {
                                return Err(corrupt(lineno, "duplicate entity node"));
                            }
                        }
                    }
                    g.nodes.insert(id, Node { id, label, props });
                    g.next_id = g.next_id.max(id + 1);
                }
                "E" => {
                    let (src, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing source"))?;
                    let (dst, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing target"))?;
                    let (label, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing label"))?;
                    let src: u64 = src.parse().map_err(|_| corrupt(lineno, "bad source id"))?;
                    let dst: u64 = dst.parse().map_err(|_| corrupt(lineno, "bad target id"))?;
                    if !g.nodes.contains_key(&src) || !g.nodes.contains_key(&dst) {
                        return Err(corrupt(lineno, "edge endpoint does not exist"));
                    }
                    let props: Props = serde_json::from_str(rest.trim()).map_err(|e| corrupt(lineno, e.to_string()))?;
                    g.edges.insert(Edge { src, dst, label, props });
                }
                "END" => {
                    let (n, rest) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing node count"))?;
                    let (e, _) = next_token(rest).ok_or_else(|| corrupt(lineno, "missing edge count"))?;
                    let counts = (n.parse::<usize>().ok(), e.parse::<usize>().ok());
                    if counts != (Some(g.nodes.len()), Some(g.edges.len())) {
                        return Err(corrupt(lineno, "record counts do not match the trailer"));
                    }
                    trailer = Some(lineno);
                }
                other => return Err(corrupt(lineno, format!("unknown record `{other}`"))),
            }
        }
        if trailer.is_none() {
            return Err(corrupt(text.lines().count(), "missing END trailer (truncated file?)"));
        }
        Ok(g)
    }

    /// Writes to a temporary file next to `path` and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_text().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| GraphError::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graphstore::{MatchOptions, TriplePattern};
    use crate::testlang::{log_triples, parse_log};
    use crate::textindex::{DocKind, Document};

    fn sample() -> GraphStore {
        let ont = fixtures::railway_ontology();
        let mut g = GraphStore::new();
        for (id, text) in [("a", fixtures::SOM_FAILED_LOG), ("b", fixtures::SIMILAR_FAILURE_LOG)] {
            let log = parse_log(text).unwrap().value;
            let doc = Document::new(id, DocKind::Log, text).with_link("req");
            g.ingest(&doc, &log_triples(&log, &ont), &ont);
        }
        g
    }

    #[test]
    fn save_and_load() {
        let g = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.sgf");
        g.save(&path).unwrap();
        let back = GraphStore::load(&path).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), g.to_text());
        let ont = fixtures::railway_ontology();
        let p = TriplePattern::parse("?", "send", "?");
        assert_eq!(
            back.match_pattern(&p, MatchOptions::exact(), &ont).unwrap(),
            g.match_pattern(&p, MatchOptions::exact(), &ont).unwrap()
        );
    }

    #[test]
    fn labels_with_spaces_are_quoted() {
        assert_eq!(write_label("linking information"), "\"linking information\"");
        let (tok, rest) = next_token("\"a b\" {}").unwrap();
        assert_eq!(tok, "a b");
        assert_eq!(rest.trim(), "{}");
    }

    #[test]
    fn truncated_or_foreign_files_fail() {
        let text = sample().to_text();
        let cut = &text[..text.len() / 2];
        assert!(matches!(GraphStore::from_text(cut), Err(GraphError::Corrupt { .. })));
        let without_trailer: String = text
            .lines()
            .filter(|l| !l.starts_with("END"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(GraphStore::from_text(&without_trailer).is_err());
        assert!(matches!(
            GraphStore::from_text("semtrace-graph v9\n"),
            Err(GraphError::FormatVersion(_))
        ));
        assert!(matches!(GraphStore::from_text(""), Err(GraphError::FormatVersion(_))));
        assert!(matches!(
            GraphStore::load(Path::new("/nonexistent/graph.sgf")),
            Err(GraphError::Io(_))
        ));
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = GraphStore::new();
        assert_eq!(GraphStore::from_text(&g.to_text()).unwrap(), g);
    }
}
