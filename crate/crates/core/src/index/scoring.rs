use std::collections::BTreeMap;

use super::ranking::rank_order;
use super::{DocNum, Index, Ranking, ScoredParagraph, SparseVector, TermId};
use crate::error::{Error, Result};
use crate::textproc::Token;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Error::InvalidArgument(format!("k1 must be positive, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidArgument(format!("b must be in [0, 1], got {b}")));
        }
        Ok(Self { k1, b })
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, never negative.
pub fn bm25_idf(n_docs: usize, df: usize) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// `ln(N / df)`; zero for a term in every document.
pub fn tfidf_idf(ix: &Index, term: TermId) -> f64 {
    (ix.n_docs() as f64 / ix.doc_freq(term) as f64).ln()
}

fn log_tf(tf: u32) -> f64 {
    1.0 + f64::from(tf).ln()
}

fn counts<'a>(ix: &Index, tokens: impl IntoIterator<Item = &'a Token>) -> BTreeMap<TermId, u32> {
    let mut out = BTreeMap::new();
    for tok in tokens {
        if let Some(t) = ix.term_id(tok) {
            *out.entry(t).or_insert(0) += 1;
        }
    }
    out
}

/// A per-query document scorer. The candidate pool for full-index retrieval
/// is every document containing one of `pool_terms`.
pub trait DocScorer: Sync {
    fn pool_terms(&self) -> &[TermId];
    fn score(&self, ix: &Index, doc: DocNum) -> f64;
}

/// Okapi BM25 with per-term query weights. Plain queries weight each term by
/// its multiplicity.
#[derive(Debug, Clone)]
pub struct Bm25Scorer {
    params: Bm25Params,
    /// `(term, query weight, idf)`.
    terms: Vec<(TermId, f64, f64)>,
    pool: Vec<TermId>,
}

impl Bm25Scorer {
    pub fn new(ix: &Index, weights: &[(TermId, f64)], params: Bm25Params) -> Self {
        let mut merged: BTreeMap<TermId, f64> = BTreeMap::new();
        for &(t, w) in weights {
            *merged.entry(t).or_insert(0.0) += w;
        }
        let terms: Vec<(TermId, f64, f64)> = merged
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(t, w)| (t, w, bm25_idf(ix.n_docs(), ix.doc_freq(t))))
            .collect();
        let pool = terms.iter().map(|t| t.0).collect();
        Self { params, terms, pool }
    }

    pub fn from_tokens(ix: &Index, tokens: &[Token], params: Bm25Params) -> Self {
        let weights: Vec<(TermId, f64)> =
            counts(ix, tokens).into_iter().map(|(t, c)| (t, f64::from(c))).collect();
        Self::new(ix, &weights, params)
    }
}

impl DocScorer for Bm25Scorer {
    fn pool_terms(&self) -> &[TermId] {
        &self.pool
    }

    fn score(&self, ix: &Index, doc: DocNum) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let avg = ix.avg_doc_len();
        let len_ratio = if avg > 0.0 { f64::from(ix.doc_len(doc)) / avg } else { 1.0 };
        let norm = k1 * (1.0 - b + b * len_ratio);
        self.terms
            .iter()
            .map(|&(t, w, idf)| {
                let tf = f64::from(ix.tf(t, doc));
                if tf == 0.0 {
                    0.0
                } else {
                    w * idf * tf * (k1 + 1.0) / (tf + norm)
                }
            })
            .sum()
    }
}

/// Cosine between a fixed query vector and each document's log-tf idf vector.
#[derive(Debug, Clone)]
pub struct CosineScorer {
    query: SparseVector,
    pool: Vec<TermId>,
}

impl CosineScorer {
    /// `pool` defaults to the vector's own terms when `None`.
    pub fn new(query: SparseVector, pool: Option<Vec<TermId>>) -> Self {
        let query = query.normalized();
        let pool = pool.unwrap_or_else(|| query.terms());
        Self { query, pool }
    }

    /// Query vector from the tokens; every indexed query token joins the pool,
    /// including zero-idf ones.
    pub fn from_tokens(ix: &Index, tokens: &[Token]) -> Self {
        let pool = counts(ix, tokens).into_keys().collect();
        Self::new(tfidf_vector(ix, tokens), Some(pool))
    }

    pub fn query(&self) -> &SparseVector {
        &self.query
    }
}

impl DocScorer for CosineScorer {
    fn pool_terms(&self) -> &[TermId] {
        &self.pool
    }

    fn score(&self, ix: &Index, doc: DocNum) -> f64 {
        let norm = ix.tfidf_norm(doc);
        if norm == 0.0 || self.query.is_empty() {
            return 0.0;
        }
        let dot: f64 = self
            .query
            .entries()
            .iter()
            .map(|&(t, q)| match ix.tf(t, doc) {
                0 => 0.0,
                tf => q * log_tf(tf) * tfidf_idf(ix, t),
            })
            .sum();
        dot / norm
    }
}

/// Dirichlet-smoothed query likelihood. Terms absent from the collection are
/// skipped.
#[derive(Debug, Clone)]
pub struct LmScorer {
    mu: f64,
    /// `(term, multiplicity, collection probability)`.
    terms: Vec<(TermId, f64, f64)>,
    pool: Vec<TermId>,
}

impl LmScorer {
    pub fn from_tokens(ix: &Index, tokens: &[Token], mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        let c_len = ix.collection_len() as f64;
        let terms: Vec<(TermId, f64, f64)> = counts(ix, tokens)
            .into_iter()
            .filter(|&(t, _)| ix.collection_freq(t) > 0)
            .map(|(t, c)| (t, f64::from(c), ix.collection_freq(t) as f64 / c_len))
            .collect();
        let pool = terms.iter().map(|t| t.0).collect();
        Ok(Self { mu, terms, pool })
    }
}

impl DocScorer for LmScorer {
    fn pool_terms(&self) -> &[TermId] {
        &self.pool
    }

    fn score(&self, ix: &Index, doc: DocNum) -> f64 {
        let denom = f64::from(ix.doc_len(doc)) + self.mu;
        self.terms
            .iter()
            .map(|&(t, n, p_c)| n * ((f64::from(ix.tf(t, doc)) + self.mu * p_c) / denom).ln())
            .sum()
    }
}

pub fn bm25_score(ix: &Index, query: &[Token], paragraph_id: &str, params: Bm25Params) -> Result<f64> {
    let doc = ix.require_doc(paragraph_id)?;
    Ok(Bm25Scorer::from_tokens(ix, query, params).score(ix, doc))
}

pub fn lm_dirichlet_score(ix: &Index, query: &[Token], paragraph_id: &str, mu: f64) -> Result<f64> {
    let doc = ix.require_doc(paragraph_id)?;
    Ok(LmScorer::from_tokens(ix, query, mu)?.score(ix, doc))
}

/// L2-normalized `(1 + ln tf) · ln(N / df)` vector of a token bag. Tokens
/// outside the vocabulary and zero-idf terms are dropped.
pub fn tfidf_vector(ix: &Index, bag: &[Token]) -> SparseVector {
    SparseVector::from_entries(
        counts(ix, bag).into_iter().map(|(t, tf)| (t, log_tf(tf) * tfidf_idf(ix, t))),
    )
    .normalized()
}

/// The same weighting applied to an indexed paragraph.
pub fn doc_tfidf_vector(ix: &Index, doc: DocNum) -> SparseVector {
    SparseVector::from_entries(
        ix.doc_terms(doc).iter().map(|&(t, tf)| (t, log_tf(tf) * tfidf_idf(ix, t))),
    )
    .normalized()
}

fn top_k(ix: &Index, mut scored: Vec<(DocNum, f64)>, query_id: &str, k: usize) -> Ranking {
    for s in scored.iter_mut() {
        s.1 += 0.0;
    }
    let cmp = |a: &(DocNum, f64), b: &(DocNum, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if scored.len() > k {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    let entries = scored
        .into_iter()
        .map(|(d, score)| ScoredParagraph { id: ix.doc_id(d).to_string(), score })
        .collect();
    Ranking::from_sorted(query_id.to_string(), entries)
}

/// Top `k` documents among those sharing at least one pool term with the
/// query, ordered by score descending then paragraph id ascending.
pub fn retrieve_topk(ix: &Index, scorer: &dyn DocScorer, query_id: &str, k: usize) -> Ranking {
    if k == 0 {
        return Ranking::empty(query_id);
    }
    let scored = ix
        .matching_docs(scorer.pool_terms())
        .into_iter()
        .map(|d| (d, scorer.score(ix, d)))
        .collect();
    top_k(ix, scored, query_id, k)
}

/// Scores exactly the supplied candidates, whether or not they match.
pub fn rank_candidates(
    ix: &Index,
    scorer: &dyn DocScorer,
    query_id: &str,
    candidates: &[String],
) -> Result<Ranking> {
    let mut docs = candidates.iter().map(|c| ix.require_doc(c)).collect::<Result<Vec<_>>>()?;
    docs.sort_unstable();
    if docs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Integrity(format!("duplicate candidate in query {query_id:?}")));
    }
    let scored: Vec<(DocNum, f64)> = docs.into_iter().map(|d| (d, scorer.score(ix, d))).collect();
    let n = scored.len();
    let ranking = top_k(ix, scored, query_id, n);
    debug_assert!(ranking
        .entries()
        .windows(2)
        .all(|w| rank_order(w[0].score, &w[0].id, w[1].score, &w[1].id).is_lt()));
    Ok(ranking)
}
