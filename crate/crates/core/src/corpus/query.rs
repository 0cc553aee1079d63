use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};

use super::{Corpus, Page, Section};
use crate::textproc::{Token, TokenPipelineConfig};

/// Characters escaped inside query id components so that ids stay single
/// whitespace-free fields in run and qrels files.
const ID_COMPONENT: &AsciiSet = &CONTROLS.add(b' ').add(b'%').add(b'/');

/// One retrieval query per heading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadingQuery {
    pub query_id: String,
    pub page_id: String,
    /// The section's own heading.
    pub heading: String,
    /// Heading, ancestors leaf-to-root, then the page title, space-joined.
    pub raw_text: String,
    pub terms: Vec<Token>,
}

/// `pageId/H1/H1.2/...` with each component percent-escaped.
pub fn query_id(page_id: &str, headings: &[&str]) -> String {
    let mut id = utf8_percent_encode(page_id, ID_COMPONENT).to_string();
    for h in headings {
        id.push('/');
        id.extend(utf8_percent_encode(h, ID_COMPONENT));
    }
    id
}

fn section_query(page: &Page, section: &Section, cfg: &TokenPipelineConfig) -> HeadingQuery {
    let full = section.full_path();
    let mut parts: Vec<&str> = full.iter().rev().copied().collect();
    parts.push(page.title.as_str());
    let raw_text = parts.join(" ");
    HeadingQuery {
        query_id: query_id(&page.id, &full),
        page_id: page.id.clone(),
        heading: section.heading.clone(),
        terms: cfg.tokenize(&raw_text),
        raw_text,
    }
}

/// One query per section at every depth, in outline pre-order. The title
/// alone never forms a query.
pub fn build_queries(page: &Page, cfg: &TokenPipelineConfig) -> Vec<HeadingQuery> {
    page.all_sections().into_iter().map(|s| section_query(page, s, cfg)).collect()
}

pub fn build_all_queries(corpus: &Corpus, cfg: &TokenPipelineConfig) -> Vec<HeadingQuery> {
    corpus.pages.iter().flat_map(|p| build_queries(p, cfg)).collect()
}
