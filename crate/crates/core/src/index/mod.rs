//! Immutable inverted index over the paragraph collection.
//!
//! Documents are numbered in ascending paragraph-id order, so ordering by
//! document number is the same as ordering by paragraph id. Terms are numbered
//! in ascending lexical order.

mod ranking;
mod scoring;
mod sparse;

pub use ranking::{Ranking, ScoredParagraph};
pub use scoring::{
    bm25_idf, bm25_score, doc_tfidf_vector, lm_dirichlet_score, rank_candidates, retrieve_topk,
    tfidf_idf, tfidf_vector, Bm25Params, Bm25Scorer, CosineScorer, DocScorer, LmScorer,
};
pub use sparse::SparseVector;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{Token, TokenPipelineConfig};

pub type DocNum = u32;
pub type TermId = u32;

const FORMAT_NAME: &str = "outline-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Index {
    analyzer: TokenPipelineConfig,
    doc_ids: Vec<String>,
    doc_lookup: HashMap<String, DocNum>,
    doc_lens: Vec<u32>,
    terms: Vec<String>,
    term_lookup: HashMap<String, TermId>,
    /// Per term, `(doc, tf)` in ascending doc order.
    postings: Vec<Vec<(DocNum, u32)>>,
    /// Per doc, `(term, tf)` in ascending term order.
    forward: Vec<Vec<(TermId, u32)>>,
    collection_freq: Vec<u64>,
    collection_len: u64,
    avg_doc_len: f64,
    /// L2 norm of each document's log-tf idf vector.
    tfidf_norms: Vec<f64>,
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.analyzer == other.analyzer
            && self.doc_ids == other.doc_ids
            && self.terms == other.terms
            && self.forward == other.forward
    }
}

/// Tokenizes every paragraph and builds postings and corpus statistics.
pub fn build_index(paragraphs: &BTreeMap<String, String>, cfg: &TokenPipelineConfig) -> Result<Index> {
    if paragraphs.is_empty() {
        return Err(Error::InvalidArgument("cannot index an empty paragraph collection".into()));
    }
    let entries: Vec<(&String, &String)> = paragraphs.iter().collect();
    let bags: Vec<BTreeMap<Token, u32>> = entries
        .par_iter()
        .map(|(_, text)| {
            let mut counts = BTreeMap::new();
            for tok in cfg.tokenize(text) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    let mut vocab: Vec<String> = bags.iter().flat_map(|b| b.keys().cloned()).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let term_lookup: HashMap<String, TermId> =
        vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as TermId)).collect();

    let forward = bags
        .iter()
        .map(|bag| bag.iter().map(|(t, tf)| (term_lookup[t], *tf)).collect())
        .collect();
    let doc_ids = entries.into_iter().map(|(id, _)| id.clone()).collect();
    Ok(Index::assemble(cfg.clone(), doc_ids, vocab, forward))
}

impl Index {
    fn assemble(
        analyzer: TokenPipelineConfig,
        doc_ids: Vec<String>,
        terms: Vec<String>,
        forward: Vec<Vec<(TermId, u32)>>,
    ) -> Index {
        let mut postings = vec![Vec::new(); terms.len()];
        let mut collection_freq = vec![0u64; terms.len()];
        let mut doc_lens = Vec::with_capacity(forward.len());
        for (doc, row) in forward.iter().enumerate() {
            let mut len = 0u32;
            for &(t, tf) in row {
                postings[t as usize].push((doc as DocNum, tf));
                collection_freq[t as usize] += u64::from(tf);
                len += tf;
            }
            doc_lens.push(len);
        }
        let collection_len: u64 = doc_lens.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_len = collection_len as f64 / doc_ids.len() as f64;
        let doc_lookup =
            doc_ids.iter().enumerate().map(|(i, id): (usize, &String)| (id.clone(), i as DocNum)).collect();
        let term_lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as TermId)).collect();
        let mut ix = Index {
            analyzer,
            doc_ids,
            doc_lookup,
            doc_lens,
            terms,
            term_lookup,
            postings,
            forward,
            collection_freq,
            collection_len,
            avg_doc_len,
            tfidf_norms: Vec::new(),
        };
        ix.tfidf_norms = (0..ix.n_docs() as DocNum)
            .into_par_iter()
            .map(|d| {
                ix.doc_terms(d)
                    .iter()
                    .map(|&(t, tf)| {
                        let w = (1.0 + f64::from(tf).ln()) * tfidf_idf(&ix, t);
                        w * w
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ix
    }

    pub fn analyzer(&self) -> &TokenPipelineConfig {
        &self.analyzer
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        self.analyzer.tokenize(text)
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn collection_len(&self) -> u64 {
        self.collection_len
    }

    pub fn doc_id(&self, doc: DocNum) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn doc_num(&self, paragraph_id: &str) -> Option<DocNum> {
        self.doc_lookup.get(paragraph_id).copied()
    }

    pub(crate) fn require_doc(&self, paragraph_id: &str) -> Result<DocNum> {
        self.doc_num(paragraph_id).ok_or_else(|| Error::UnknownParagraph(paragraph_id.to_string()))
    }

    pub fn doc_len(&self, doc: DocNum) -> u32 {
        self.doc_lens[doc as usize]
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn doc_freq(&self, term: TermId) -> usize {
        self.postings[term as usize].len()
    }

    pub fn collection_freq(&self, term: TermId) -> u64 {
        self.collection_freq[term as usize]
    }

    pub fn postings(&self, term: TermId) -> &[(DocNum, u32)] {
        &self.postings[term as usize]
    }

    pub fn doc_terms(&self, doc: DocNum) -> &[(TermId, u32)] {
        &self.forward[doc as usize]
    }

    pub fn tf(&self, term: TermId, doc: DocNum) -> u32 {
        let row = self.doc_terms(doc);
        row.binary_search_by_key(&term, |&(t, _)| t).map(|i| row[i].1).unwrap_or(0)
    }

    pub(crate) fn tfidf_norm(&self, doc: DocNum) -> f64 {
        self.tfidf_norms[doc as usize]
    }

    /// Every document containing at least one of `terms`, ascending.
    pub fn matching_docs(&self, terms: &[TermId]) -> Vec<DocNum> {
        let mut docs: Vec<DocNum> =
            terms.iter().flat_map(|&t| self.postings(t).iter().map(|&(d, _)| d)).collect();
        docs.sort_unstable();
        docs.dedup();
        docs
    }

    /// Writes the versioned JSON artifact. Output is byte-identical for
    /// identical input.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let file = IndexFile {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            stopwords: self.analyzer.stopwords().iter().cloned().collect(),
            stem: self.analyzer.stem,
            drop_digits: self.analyzer.drop_digits,
            terms: self.terms.clone(),
            docs: self
                .doc_ids
                .iter()
                .zip(&self.forward)
                .map(|(id, row)| DocRecord { id: id.clone(), terms: row.clone() })
                .collect(),
        };
        serde_json::to_writer(&mut out, &file).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Index> {
        let file: IndexFile =
            serde_json::from_reader(reader).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        if file.format != FORMAT_NAME || file.version != FORMAT_VERSION {
            return Err(Error::parse(
                1,
                format!("unsupported index format {} v{}", file.format, file.version),
            ));
        }
        if file.docs.is_empty() {
            return Err(Error::parse(1, "index has no documents"));
        }
        let n_terms = file.terms.len() as TermId;
        for (i, doc) in file.docs.iter().enumerate() {
            if i > 0 && file.docs[i - 1].id >= doc.id {
                return Err(Error::parse(1, "document ids are not strictly ascending"));
            }
            if doc.terms.iter().any(|&(t, tf)| t >= n_terms || tf == 0)
                || doc.terms.windows(2).any(|w| w[0].0 >= w[1].0)
            {
                return Err(Error::parse(1, format!("corrupt term list for {:?}", doc.id)));
            }
        }
        let analyzer = TokenPipelineConfig::new(
            file.stopwords.into_iter().collect(),
            file.stem,
            file.drop_digits,
        );
        let (doc_ids, forward) = file.docs.into_iter().map(|d| (d.id, d.terms)).unzip();
        Ok(Index::assemble(analyzer, doc_ids, file.terms, forward))
    }
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    stopwords: Vec<String>,
    stem: bool,
    drop_digits: bool,
    terms: Vec<String>,
    docs: Vec<DocRecord>,
}

#[derive(Serialize, Deserialize)]
struct DocRecord {
    id: String,
    terms: Vec<(TermId, u32)>,
}
