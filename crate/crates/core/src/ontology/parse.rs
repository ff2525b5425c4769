//! Line-oriented ontology file format.
//!
//! ```text
//! # comment
//! class <name> [labels: <l1>; <l2>; ...] [category: <top-class>]
//! relation <name> domain <class> range <class> [inverse <name>] [labels: ...]
//! individual <name> : <class> [labels: ...]
//! subclass <classA> <classB>
//! equivalent <a> <b>
//! ```
//!
//! Names containing spaces are double-quoted. A relation may be declared on
//! several lines; each line adds a domain/range signature.

use super::OntologyError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Statement {
    Class {
        name: String,
        labels: Vec<String>,
        category: Option<String>,
    },
    Relation {
        name: String,
        domain: String,
        range: String,
        inverse: Option<String>,
        labels: Vec<String>,
    },
    Individual {
        name: String,
        class_of: String,
        labels: Vec<String>,
    },
    SubClass(String, String),
    Equivalent(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    text: String,
    quoted: bool,
}

impl Token {
    fn is_keyword(&self, kw: &str) -> bool {
        !self.quoted && self.text == kw
    }
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, OntologyError> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut text = String::new();
            let mut closed = false;
            for c in chars.by_ref() {
                if c == '"' {
                    closed = true;
                    break;
                }
                text.push(c);
            }
            if !closed {
                return Err(OntologyError::parse(lineno, "unterminated quoted name"));
            }
            tokens.push(Token { text, quoted: true });
            continue;
        }
        let mut text = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() || c == '"' {
                break;
            }
            text.push(c);
            chars.next();
        }
        tokens.push(Token { text, quoted: false });
    }
    Ok(tokens)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Splits `a; b c; "d"` into labels.
fn labels_from(tokens: &[Token], lineno: usize) -> Result<Vec<String>, OntologyError> {
    let mut labels = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let close = |words: &mut Vec<String>, labels: &mut Vec<String>| {
        if !words.is_empty() {
            labels.push(words.join(" "));
            words.clear();
        }
    };
    for tok in tokens {
        if tok.quoted {
            words.push(tok.text.clone());
            continue;
        }
        let mut rest = tok.text.as_str();
        while let Some(idx) = rest.find(';') {
            let head = &rest[..idx];
            if !head.is_empty() {
                words.push(head.to_string());
            }
            close(&mut words, &mut labels);
            rest = &rest[idx + 1..];
        }
        if !rest.is_empty() {
            words.push(rest.to_string());
        }
    }
    close(&mut words, &mut labels);
    if labels.is_empty() {
        return Err(OntologyError::parse(lineno, "`labels:` needs at least one label"));
    }
    Ok(labels)
}

fn name_at(tokens: &[Token], idx: usize, lineno: usize, what: &str) -> Result<String, OntologyError> {
    match tokens.get(idx) {
        Some(t) if !t.text.trim().is_empty() => Ok(t.text.clone()),
        _ => Err(OntologyError::parse(lineno, format!("expected {what}"))),
    }
}

/// Position of the first unquoted `labels:` keyword at or after `from`.
fn find_keyword(tokens: &[Token], from: usize, kw: &str) -> Option<usize> {
    tokens[from..].iter().position(|t| t.is_keyword(kw)).map(|p| p + from)
}

pub(crate) fn parse_statements(text: &str) -> Result<Vec<(usize, Statement)>, OntologyError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        let tokens = lex(line, lineno)?;
        let Some(head) = tokens.first() else {
            continue;
        };
        if head.quoted {
            return Err(OntologyError::parse(lineno, "expected a statement keyword"));
        }
        let stmt = match head.text.as_str() {
            "class" => parse_class(&tokens, lineno)?,
            "relation" => parse_relation(&tokens, lineno)?,
            "individual" => parse_individual(&tokens, lineno)?,
            "subclass" | "equivalent" => {
                if tokens.len() != 3 {
                    return Err(OntologyError::parse(
                        lineno,
                        format!("`{}` takes exactly two names", head.text),
                    ));
                }
                let a = name_at(&tokens, 1, lineno, "first operand")?;
                let b = name_at(&tokens, 2, lineno, "second operand")?;
                if head.text == "subclass" {
                    Statement::SubClass(a, b)
                } else {
                    Statement::Equivalent(a, b)
                }
            }
            other => return Err(OntologyError::parse(lineno, format!("unknown statement `{other}`"))),
        };
        out.push((lineno, stmt));
    }
    Ok(out)
}

fn parse_class(tokens: &[Token], lineno: usize) -> Result<Statement, OntologyError> {
    let name = name_at(tokens, 1, lineno, "class name")?;
    let labels_at = find_keyword(tokens, 2, "labels:");
    let category_at = find_keyword(tokens, 2, "category:");
    let first_clause = [labels_at, category_at].into_iter().flatten().min();
    if first_clause.unwrap_or(tokens.len()) != 2 {
        return Err(OntologyError::parse(
            lineno,
            "expected `labels:` or `category:` after the class name",
        ));
    }
    let mut labels = Vec::new();
    let mut category = None;
    if let Some(l) = labels_at {
        let end = category_at.filter(|&c| c > l).unwrap_or(tokens.len());
        labels = labels_from(&tokens[l + 1..end], lineno)?;
    }
    if let Some(c) = category_at {
        let end = labels_at.filter(|&l| l > c).unwrap_or(tokens.len());
        if end != c + 2 {
            return Err(OntologyError::parse(lineno, "`category:` takes exactly one name"));
        }
        category = Some(name_at(tokens, c + 1, lineno, "category")?);
    }
    Ok(Statement::Class { name, labels, category })
}

fn parse_relation(tokens: &[Token], lineno: usize) -> Result<Statement, OntologyError> {
    let name = name_at(tokens, 1, lineno, "relation name")?;
    if !tokens.get(2).is_some_and(|t| t.is_keyword("domain")) {
        return Err(OntologyError::parse(lineno, "expected `domain`"));
    }
    let domain = name_at(tokens, 3, lineno, "domain class")?;
    if !tokens.get(4).is_some_and(|t| t.is_keyword("range")) {
        return Err(OntologyError::parse(lineno, "expected `range`"));
    }
    let range = name_at(tokens, 5, lineno, "range class")?;
    let mut idx = 6;
    let mut inverse = None;
    if tokens.get(idx).is_some_and(|t| t.is_keyword("inverse")) {
        inverse = Some(name_at(tokens, idx + 1, lineno, "inverse relation")?);
        idx += 2;
    }
    let mut labels = Vec::new();
    if let Some(t) = tokens.get(idx) {
        if !t.is_keyword("labels:") {
            return Err(OntologyError::parse(
                lineno,
                format!("unexpected `{}` in relation declaration", t.text),
            ));
        }
        labels = labels_from(&tokens[idx + 1..], lineno)?;
    }
    Ok(Statement::Relation {
        name,
        domain,
        range,
        inverse,
        labels,
    })
}

fn parse_individual(tokens: &[Token], lineno: usize) -> Result<Statement, OntologyError> {
    let name = name_at(tokens, 1, lineno, "individual name")?;
    if !tokens.get(2).is_some_and(|t| t.is_keyword(":")) {
        return Err(OntologyError::parse(lineno, "expected `:` after the individual name"));
    }
    let class_of = name_at(tokens, 3, lineno, "class of the individual")?;
    let mut labels = Vec::new();
    if let Some(t) = tokens.get(4) {
        if !t.is_keyword("labels:") {
            return Err(OntologyError::parse(
                lineno,
                format!("unexpected `{}` in individual declaration", t.text),
            ));
        }
        labels = labels_from(&tokens[5..], lineno)?;
    }
    Ok(Statement::Individual { name, class_of, labels })
}

/// Quotes a name when it would not survive lexing as a single bare token.
pub(crate) fn quote(name: &str) -> String {
    let bare = !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == '"' || c == '#' || c == ';')
        && !matches!(name, "labels:" | "category:" | "domain" | "range" | "inverse" | ":");
    if bare {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}
