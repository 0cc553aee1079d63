//! Outline-structured corpus: pages with heading trees, the pooled paragraph
//! collection, one query per heading, exact-section ground truth and
//! page-level folds.
//!
//! # Exchange format
//!
//! One JSON object per line. A page record looks like
//!
//! ```json
//! {"id": "P1", "title": "Culture of X", "sections": [
//!   {"heading": "History", "paragraphs": [{"id": "p1", "text": "..."}], "children": []}
//! ]}
//! ```
//!
//! A paragraph entry without `text` refers to a paragraph defined elsewhere
//! in the stream. A line that has `text` but no `sections` is a standalone
//! collection paragraph that belongs to no page (a distractor).

mod folds;
mod qrels;
mod query;

pub use folds::{assign_folds, FoldAssignment};
pub(crate) use folds::assign_ids;
pub use qrels::{derive_qrels, Qrels};
pub use query::{build_all_queries, build_queries, query_id, HeadingQuery};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub heading: String,
    /// Ancestor headings from the root down, excluding this heading and the title.
    pub path: Vec<String>,
    pub paragraphs: Vec<String>,
    pub children: Vec<Section>,
}

impl Section {
    /// Headings from the root down to and including this one.
    pub fn full_path(&self) -> Vec<&str> {
        self.path.iter().map(String::as_str).chain(std::iter::once(self.heading.as_str())).collect()
    }

    /// Pre-order walk over this section and its descendants.
    pub fn walk(&self) -> Vec<&Section> {
        let mut out = vec![self];
        for child in &self.children {
            out.extend(child.walk());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub id: String,
    pub title: String,
    pub sections: Vec<Section>,
}

impl Page {
    /// Every section at every depth, pre-order.
    pub fn all_sections(&self) -> Vec<&Section> {
        self.sections.iter().flat_map(Section::walk).collect()
    }

    /// Paragraph ids attached anywhere in the page, in outline order.
    pub fn paragraph_ids(&self) -> Vec<&str> {
        self.all_sections()
            .into_iter()
            .flat_map(|s| s.paragraphs.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub pages: Vec<Page>,
    pub paragraphs: BTreeMap<String, Paragraph>,
}

impl Corpus {
    pub fn page(&self, id: &str) -> Option<&Page> {
        self.pages.iter().find(|p| p.id == id)
    }

    pub fn text(&self, paragraph_id: &str) -> Option<&str> {
        self.paragraphs.get(paragraph_id).map(|p| p.text.as_str())
    }

    /// Paragraph id to text, the input shape of the index builder.
    pub fn texts(&self) -> BTreeMap<String, String> {
        self.paragraphs.iter().map(|(id, p)| (id.clone(), p.text.clone())).collect()
    }

    pub fn section_count(&self) -> usize {
        self.pages.iter().map(|p| p.all_sections().len()).sum()
    }

    /// Builds a corpus from already-constructed pages, checking the same
    /// invariants as the parser.
    pub fn from_parts(pages: Vec<Page>, paragraphs: Vec<Paragraph>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in paragraphs {
            check_paragraph(&p.id, &p.text)?;
            if map.insert(p.id.clone(), p.clone()).is_some() {
                return Err(Error::Integrity(format!("duplicate paragraph id {:?}", p.id)));
            }
        }
        let corpus = Corpus { pages, paragraphs: map };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<()> {
        let mut page_ids = HashSet::new();
        let mut query_ids = HashSet::new();
        for page in &self.pages {
            if page.id.trim().is_empty() {
                return Err(Error::Integrity("empty page id".into()));
            }
            if !page_ids.insert(page.id.as_str()) {
                return Err(Error::Integrity(format!("duplicate page id {:?}", page.id)));
            }
            let mut seen = HashSet::new();
            for section in page.all_sections() {
                if section.heading.trim().is_empty() {
                    return Err(Error::Integrity(format!("empty heading in page {:?}", page.id)));
                }
                let qid = query_id(&page.id, &section.full_path());
                if !query_ids.insert(qid.clone()) {
                    return Err(Error::Integrity(format!("duplicate heading path {qid:?}")));
                }
                for pid in &section.paragraphs {
                    if !self.paragraphs.contains_key(pid) {
                        return Err(Error::Integrity(format!(
                            "page {:?} references unknown paragraph {pid:?}",
                            page.id
                        )));
                    }
                    if !seen.insert(pid.as_str()) {
                        return Err(Error::Integrity(format!(
                            "paragraph {pid:?} referenced twice in page {:?}",
                            page.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lookup of paragraph text by id.
pub trait TextSource: Sync {
    fn paragraph_text(&self, paragraph_id: &str) -> Option<&str>;
}

impl TextSource for Corpus {
    fn paragraph_text(&self, paragraph_id: &str) -> Option<&str> {
        self.text(paragraph_id)
    }
}

impl TextSource for BTreeMap<String, String> {
    fn paragraph_text(&self, paragraph_id: &str) -> Option<&str> {
        self.get(paragraph_id).map(String::as_str)
    }
}

fn check_paragraph(id: &str, text: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::Integrity(format!("paragraph id {id:?} is empty or contains whitespace")));
    }
    if text.trim().is_empty() {
        return Err(Error::Integrity(format!("paragraph {id:?} has empty text")));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PageRecord {
    id: String,
    title: String,
    sections: Vec<SectionRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionRecord {
    heading: String,
    #[serde(default)]
    paragraphs: Vec<ParagraphRecord>,
    #[serde(default)]
    children: Vec<SectionRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParagraphRecord {
    id: String,
    #[serde(default)]
    text: Option<String>,
}

struct Loader {
    paragraphs: BTreeMap<String, Paragraph>,
    /// Line that defined each paragraph, for error messages.
    defined_at: BTreeMap<String, usize>,
}

impl Loader {
    fn define(&mut self, line: usize, rec: ParagraphRecord) -> Result<String> {
        let Some(text) = rec.text else {
            return Ok(rec.id);
        };
        check_paragraph(&rec.id, &text).map_err(|e| Error::parse(line, e.to_string()))?;
        if let Some(first) = self.defined_at.get(&rec.id) {
            return Err(Error::Integrity(format!(
                "duplicate paragraph id {:?} (lines {first} and {line})",
                rec.id
            )));
        }
        self.defined_at.insert(rec.id.clone(), line);
        self.paragraphs.insert(rec.id.clone(), Paragraph { id: rec.id.clone(), text });
        Ok(rec.id)
    }

    fn section(&mut self, line: usize, rec: SectionRecord, path: &[String]) -> Result<Section> {
        let heading = rec.heading.trim().to_string();
        if heading.is_empty() {
            return Err(Error::parse(line, "empty heading"));
        }
        let paragraphs = rec
            .paragraphs
            .into_iter()
            .map(|p| self.define(line, p))
            .collect::<Result<Vec<_>>>()?;
        let mut child_path = path.to_vec();
        child_path.push(heading.clone());
        let children = rec
            .children
            .into_iter()
            .map(|c| self.section(line, c, &child_path))
            .collect::<Result<Vec<_>>>()?;
        Ok(Section { heading, path: path.to_vec(), paragraphs, children })
    }
}

/// Parses the line-delimited exchange format and validates referential
/// integrity.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut loader = Loader { paragraphs: BTreeMap::new(), defined_at: BTreeMap::new() };
    let mut pages = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let is_page = value.get("sections").is_some();
        if is_page {
            let rec: PageRecord =
                serde_json::from_value(value).map_err(|e| Error::parse(lineno, e.to_string()))?;
            let sections = rec
                .sections
                .into_iter()
                .map(|s| loader.section(lineno, s, &[]))
                .collect::<Result<Vec<_>>>()?;
            pages.push(Page { id: rec.id, title: rec.title.trim().to_string(), sections });
        } else {
            let rec: ParagraphRecord =
                serde_json::from_value(value).map_err(|e| Error::parse(lineno, e.to_string()))?;
            if rec.text.is_none() {
                return Err(Error::parse(lineno, "record is neither a page nor a paragraph"));
            }
            loader.define(lineno, rec)?;
        }
    }
    let corpus = Corpus { pages, paragraphs: loader.paragraphs };
    corpus.validate()?;
    Ok(corpus)
}

/// Writes the corpus back in the exchange format: pages first (paragraph text
/// inlined at first reference), then standalone paragraphs.
pub fn write_corpus<W: std::io::Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    fn section_json(
        s: &Section,
        corpus: &Corpus,
        emitted: &mut BTreeSet<String>,
    ) -> serde_json::Value {
        let paragraphs: Vec<serde_json::Value> = s
            .paragraphs
            .iter()
            .map(|pid| {
                if emitted.insert(pid.clone()) {
                    serde_json::json!({"id": pid, "text": corpus.paragraphs[pid].text})
                } else {
                    serde_json::json!({"id": pid})
                }
            })
            .collect();
        let children: Vec<_> = s.children.iter().map(|c| section_json(c, corpus, emitted)).collect();
        serde_json::json!({"heading": s.heading, "paragraphs": paragraphs, "children": children})
    }

    let mut emitted = BTreeSet::new();
    for page in &corpus.pages {
        let sections: Vec<_> =
            page.sections.iter().map(|s| section_json(s, corpus, &mut emitted)).collect();
        let rec = serde_json::json!({"id": page.id, "title": page.title, "sections": sections});
        writeln!(out, "{rec}")?;
    }
    for (id, p) in &corpus.paragraphs {
        if !emitted.contains(id) {
            writeln!(out, "{}", serde_json::json!({"id": id, "text": p.text}))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_PAGE: &str = r#"{"id":"P","title":"T","sections":[{"heading":"History","paragraphs":[{"id":"p1","text":"alpha beta"},{"id":"p2","text":"gamma"}],"children":[]}]}"#;

    #[test]
    fn one_page_two_paragraphs() {
        let c = parse_corpus(ONE_PAGE.as_bytes()).unwrap();
        assert_eq!(c.pages.len(), 1);
        assert_eq!(c.paragraphs.len(), 2);
        assert_eq!(c.pages[0].sections[0].paragraphs, vec!["p1", "p2"]);
        assert!(c.pages[0].sections[0].path.is_empty());
    }

    #[test]
    fn unknown_reference_is_integrity_error() {
        let line = r#"{"id":"P","title":"T","sections":[{"heading":"H","paragraphs":[{"id":"nope"}]}]}"#;
        assert!(matches!(parse_corpus(line.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn duplicate_paragraph_id() {
        let input = format!("{ONE_PAGE}\n{{\"id\":\"p1\",\"text\":\"again\"}}\n");
        assert!(matches!(parse_corpus(input.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = format!("{ONE_PAGE}\n{{not json\n");
        match parse_corpus(input.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn references_and_distractors() {
        let input = concat!(
            r#"{"id":"d1","text":"standalone"}"#,
            "\n",
            r#"{"id":"P","title":"T","sections":[{"heading":"A","paragraphs":[{"id":"d1"}],"children":[{"heading":"B","paragraphs":[{"id":"p2","text":"x"}]}]}]}"#,
            "\n",
            r#"{"id":"d2","text":"unreferenced"}"#,
        );
        let c = parse_corpus(input.as_bytes()).unwrap();
        assert_eq!(c.paragraphs.len(), 3);
        let child = &c.pages[0].sections[0].children[0];
        assert_eq!(child.path, vec!["A"]);
        assert_eq!(c.section_count(), 2);
    }

    #[test]
    fn same_paragraph_twice_in_page() {
        let line = r#"{"id":"P","title":"T","sections":[{"heading":"A","paragraphs":[{"id":"p","text":"x"}]},{"heading":"B","paragraphs":[{"id":"p"}]}]}"#;
        assert!(matches!(parse_corpus(line.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn whitespace_in_paragraph_id_rejected() {
        let line = r#"{"id":"P","title":"T","sections":[{"heading":"A","paragraphs":[{"id":"p 1","text":"x"}]}]}"#;
        assert!(parse_corpus(line.as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let input = concat!(
            r#"{"id":"P","title":"T","sections":[{"heading":"A","paragraphs":[{"id":"p1","text":"x y"}],"children":[{"heading":"B","paragraphs":[{"id":"p2","text":"z"}]}]}]}"#,
            "\n",
            r#"{"id":"Q","title":"U","sections":[{"heading":"A","paragraphs":[{"id":"p1"}]}]}"#,
            "\n",
            r#"{"id":"d","text":"free"}"#,
        );
        let c = parse_corpus(input.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        assert_eq!(parse_corpus(buf.as_slice()).unwrap(), c);
    }
}
