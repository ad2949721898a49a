//! Splitting and normalizing raw author strings.
//!
//! Metadata records carry authors as one string, e.g.
//! `"Colin B. Clement, Matthew Bierbaum, and Alexander A. Alemi"`. Names are
//! separated by top-level commas and the words `and`/`And`; separators inside
//! parentheses (usually affiliations) are ignored.
//!
//! Known limitation: collaboration names are not detected, so
//! `"ATLAS Collaboration"` normalizes to keyname `Collaboration`.

use serde::{Deserialize, Serialize};

const SUFFIXES: &[&str] = &["Jr.", "Jr", "Sr.", "Sr", "I", "II", "III", "IV"];

/// Lower-case particles that stay attached to the family name.
const PARTICLES: &[&str] = &[
    "van", "von", "der", "den", "de", "del", "della", "di", "da", "la", "le", "du", "dos", "das",
    "ter", "ten", "zu", "y",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorName {
    pub keyname: String,
    pub forenames: Option<String>,
    pub suffix: Option<String>,
    /// Source fragment with whitespace collapsed.
    pub raw: String,
}

impl AuthorName {
    /// `[keyname, forenames, suffix]` with empty strings for absent parts.
    pub fn to_triple(&self) -> [String; 3] {
        [
            self.keyname.clone(),
            self.forenames.clone().unwrap_or_default(),
            self.suffix.clone().unwrap_or_default(),
        ]
    }
}

pub fn split_authors(authors: &str) -> Vec<AuthorName> {
    let mut names: Vec<AuthorName> = Vec::new();
    for fragment in split_fragments(authors) {
        // "John Smith, Jr." splits into a lone suffix fragment; fold it back.
        if SUFFIXES.contains(&fragment.as_str()) {
            if let Some(prev) = names.last_mut() {
                if prev.suffix.is_none() {
                    prev.suffix = Some(fragment.clone());
                    prev.raw = format!("{}, {}", prev.raw, fragment);
                    continue;
                }
            }
        }
        if let Some(name) = normalize_fragment(&fragment) {
            names.push(name);
        }
    }
    names
}

/// Normalizes one author fragment.
///
/// A fragment that is empty once parenthesized text is removed keeps its
/// collapsed text as the keyname.
pub fn normalize_name(fragment: &str) -> AuthorName {
    normalize_fragment(fragment).unwrap_or_else(|| {
        let raw = collapse_ws(fragment);
        AuthorName { keyname: raw.clone(), forenames: None, suffix: None, raw }
    })
}

fn normalize_fragment(fragment: &str) -> Option<AuthorName> {
    let raw = collapse_ws(fragment);
    let stripped = strip_parens(&raw);
    let mut tokens: Vec<&str> = stripped.split_whitespace().collect();
    if tokens.is_empty() {
        return None;
    }

    let mut suffix = None;
    if tokens.len() > 1 && SUFFIXES.contains(tokens.last().unwrap()) {
        suffix = tokens.pop().map(str::to_string);
    }
    let mut key_start = tokens.len() - 1;
    while key_start > 0 && PARTICLES.contains(&tokens[key_start - 1]) {
        key_start -= 1;
    }
    let keyname = tokens[key_start..].join(" ");
    let forenames = (key_start > 0).then(|| tokens[..key_start].join(" "));
    Some(AuthorName { keyname, forenames, suffix, raw })
}

/// Splits on top-level commas and `and`/`And` words, dropping empty pieces.
fn split_fragments(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => out.append(&mut split_on_and(&std::mem::take(&mut current))),
            _ => current.push(c),
        }
    }
    out.append(&mut split_on_and(&current));
    out
}

fn split_on_and(piece: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut words: Vec<&str> = Vec::new();
    for word in piece.split_whitespace() {
        let at_top = depth == 0;
        depth += word.matches('(').count();
        depth = depth.saturating_sub(word.matches(')').count());
        if at_top && (word == "and" || word == "And") {
            out.push(words.join(" "));
            words.clear();
        } else {
            words.push(word);
        }
    }
    out.push(words.join(" "));
    out.retain(|f| !f.is_empty());
    out
}

fn strip_parens(s: &str) -> String {
    let mut depth = 0usize;
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
