use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::{query_id, Corpus};
use crate::error::{Error, Result};

/// Relevance judgments: query id to paragraph id to grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    entries: BTreeMap<String, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, paragraph_id: &str, grade: u8) {
        self.entries
            .entry(query_id.to_string())
            .or_default()
            .insert(paragraph_id.to_string(), grade);
    }

    pub fn grade(&self, query_id: &str, paragraph_id: &str) -> u8 {
        self.entries
            .get(query_id)
            .and_then(|m| m.get(paragraph_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_relevant(&self, query_id: &str, paragraph_id: &str) -> bool {
        self.grade(query_id, paragraph_id) > 0
    }

    /// Paragraphs with grade > 0 for the query.
    pub fn relevant(&self, query_id: &str) -> BTreeSet<&str> {
        self.entries
            .get(query_id)
            .map(|m| m.iter().filter(|(_, g)| **g > 0).map(|(p, _)| p.as_str()).collect())
            .unwrap_or_default()
    }

    /// Every query id that has at least one row, graded or not.
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `(query, paragraph, grade)` rows in sorted order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.entries
            .iter()
            .flat_map(|(q, m)| m.iter().map(move |(p, g)| (q.as_str(), p.as_str(), *g)))
    }

    pub fn positive_count(&self) -> usize {
        self.rows().filter(|r| r.2 > 0).count()
    }

    /// Reads TREC qrels: `<queryId> <iteration> <paragraphId> <grade>`.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(i + 1, format!("expected 4 fields, got {}", fields.len())));
            }
            let grade: i32 = fields[3]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad grade {:?}", fields[3])))?;
            qrels.insert(fields[0], fields[2], grade.clamp(0, u8::MAX as i32) as u8);
        }
        Ok(qrels)
    }

    /// Writes one `<queryId> 0 <paragraphId> <grade>` row per stored entry.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (q, p, g) in self.rows() {
            writeln!(out, "{q} 0 {p} {g}")?;
        }
        Ok(())
    }
}

/// Grade 1 for every paragraph attached directly to the query's section.
/// Paragraphs of descendant sections are not credited to ancestors.
pub fn derive_qrels(corpus: &Corpus) -> Qrels {
    let mut qrels = Qrels::new();
    for page in &corpus.pages {
        for section in page.all_sections() {
            let qid = query_id(&page.id, &section.full_path());
            for pid in &section.paragraphs {
                qrels.insert(&qid, pid, 1);
            }
        }
    }
    qrels
}
