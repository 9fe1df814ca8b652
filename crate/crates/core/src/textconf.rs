//! Flat `key = value` text with optional `[section]` headers.
//!
//! Used for run configurations and encoding specification files. Blank lines and
//! lines starting with `#` or `;` are ignored, as is anything after a `#` that
//! follows whitespace. Keys are unique within a section.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    /// Empty for entries before the first header.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = vec![Section::default()];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = strip_comment(raw).trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line,
                    msg: "unterminated section header".into(),
                })?;
                let name = name.trim().to_string();
                if name.is_empty() {
                    return Err(Error::Parse { line, msg: "empty section name".into() });
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(Error::Parse { line, msg: format!("duplicate section [{name}]") });
                }
                sections.push(Section { name, line, entries: Vec::new() });
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `key = value`, got `{trimmed}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse { line, msg: "empty key".into() });
            }
            let section = sections.last_mut().expect("root section always present");
            if section.get(key).is_some() {
                return Err(Error::Parse { line, msg: format!("duplicate key `{key}`") });
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Document { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Iterate `(section, entry)` pairs in file order.
    pub fn entries(&self) -> impl Iterator<Item = (&Section, &Entry)> {
        self.sections.iter().flat_map(|s| s.entries.iter().map(move |e| (s, e)))
    }
}

/// Parse a comma- or whitespace-separated list of floats.
fn strip_comment(raw: &str) -> &str {
    raw.char_indices()
        .find(|&(i, c)| c == '#' && raw[..i].ends_with(char::is_whitespace))
        .map_or(raw, |(i, _)| &raw[..i])
}

pub fn parse_f64_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

pub fn parse_usize_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("`{s}` is not a non-negative integer")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_comments() {
        let doc = Document::parse("[run]\nseed = 7   # fixed\nout = a#b\n").unwrap();
        let run = doc.section("run").unwrap();
        assert_eq!(run.get("seed").unwrap().value, "7");
        assert_eq!(run.get("out").unwrap().value, "a#b");
    }

    #[test]
    fn parses_sections_and_comments() {
        let doc = Document::parse("a = 1\n# c\n[run]\nseed = 7\n\n[state]\nkind = ghz\n").unwrap();
        assert_eq!(doc.sections.len(), 3);
        assert_eq!(doc.section("run").unwrap().get("seed").unwrap().value, "7");
        assert_eq!(doc.section("").unwrap().get("a").unwrap().line, 1);
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(Document::parse("a = 1\na = 2").is_err());
        assert!(Document::parse("[x]\n[x]").is_err());
        assert!(Document::parse("just words").is_err());
        assert!(Document::parse("[open").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_f64_list("1, 2 3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_f64_list("1, x").is_err());
        assert_eq!(parse_usize_list("1,3").unwrap(), vec![1, 3]);
    }
}
