use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::{
    cosine, entity_vector, index_term, text_vector, DenseVector, EmbeddingStore, EntityLinker,
    EntityMention, EntityStats, SpaceVector,
};
use crate::corpus::{HeadingQuery, TextSource};
use crate::error::{Error, Result};
use crate::index::{
    doc_tfidf_vector, tfidf_idf, tfidf_vector, CosineScorer, DocNum, DocScorer, Index, SparseVector,
    TermId,
};
use crate::textproc::TokenPipelineConfig;

/// A vector space in which queries, paragraphs and feedback are compared by
/// cosine similarity.
pub trait Vectorizer: Sync {
    fn name(&self) -> &'static str;
    fn index(&self) -> &Index;
    fn query_vector(&self, query: &HeadingQuery) -> Result<SpaceVector>;
    fn doc_vector(&self, doc: DocNum) -> Cow<'_, SpaceVector>;
    /// Weighted index terms, such as relevance-model feedback.
    fn terms_vector(&self, terms: &[(TermId, f64)]) -> Result<SpaceVector>;
    fn entities_vector(&self, entities: &[(&str, f64)]) -> Result<SpaceVector>;

    fn paragraph_vector(&self, paragraph_id: &str) -> Result<Cow<'_, SpaceVector>> {
        let doc = self
            .index()
            .doc_num(paragraph_id)
            .ok_or_else(|| Error::UnknownParagraph(paragraph_id.to_string()))?;
        Ok(self.doc_vector(doc))
    }
}

/// Logarithmic TF-IDF vectors over the index vocabulary.
pub struct TfidfSpace<'a> {
    ix: &'a Index,
}

impl<'a> TfidfSpace<'a> {
    pub fn new(ix: &'a Index) -> Self {
        Self { ix }
    }
}

impl Vectorizer for TfidfSpace<'_> {
    fn name(&self) -> &'static str {
        "tfidf"
    }

    fn index(&self) -> &Index {
        self.ix
    }

    fn query_vector(&self, query: &HeadingQuery) -> Result<SpaceVector> {
        Ok(SpaceVector::Sparse(tfidf_vector(self.ix, &query.terms)))
    }

    fn doc_vector(&self, doc: DocNum) -> Cow<'_, SpaceVector> {
        Cow::Owned(SpaceVector::Sparse(doc_tfidf_vector(self.ix, doc)))
    }

    fn terms_vector(&self, terms: &[(TermId, f64)]) -> Result<SpaceVector> {
        Ok(SpaceVector::Sparse(SparseVector::from_entries(
            terms.iter().map(|&(t, w)| (t, w * tfidf_idf(self.ix, t))),
        )))
    }

    fn entities_vector(&self, _entities: &[(&str, f64)]) -> Result<SpaceVector> {
        Err(Error::SpaceMismatch("the tf-idf space has no entity coordinates".into()))
    }
}

fn require_text<'t>(texts: &'t dyn TextSource, ix: &Index, doc: DocNum) -> Result<&'t str> {
    let id = ix.doc_id(doc);
    texts.paragraph_text(id).ok_or_else(|| Error::UnknownParagraph(id.to_string()))
}

fn weighted_average<'k>(
    dim: usize,
    items: impl IntoIterator<Item = (f64, Option<&'k [f64]>)>,
) -> DenseVector {
    let mut acc = vec![0.0; dim];
    let mut covered = 0usize;
    for (w, vec) in items {
        let Some(vec) = vec else { continue };
        covered += 1;
        for (a, v) in acc.iter_mut().zip(vec) {
            *a += w * v;
        }
    }
    if covered == 0 {
        return DenseVector::zeros(dim, true);
    }
    DenseVector { values: acc.into_iter().map(|a| a / covered as f64).collect(), empty: false }
}

/// TF-IDF weighted averages of word vectors. Embeddings are keyed by unstemmed
/// surface words; an index term's vector is the mean over the corpus surface
/// forms that stem to it.
pub struct WordSpace<'a> {
    ix: &'a Index,
    store: &'a EmbeddingStore,
    surface: TokenPipelineConfig,
    docs: Vec<SpaceVector>,
    term_vectors: HashMap<TermId, Vec<f64>>,
}

impl<'a> WordSpace<'a> {
    pub fn new(ix: &'a Index, store: &'a EmbeddingStore, texts: &dyn TextSource) -> Result<Self> {
        let surface = ix.analyzer().with_stem(false);
        let per_doc: Vec<(SpaceVector, BTreeSet<String>)> = (0..ix.n_docs() as DocNum)
            .into_par_iter()
            .map(|d| {
                let bag = surface.tokenize(require_text(texts, ix, d)?);
                let v = text_vector(&bag, store, ix);
                Ok((SpaceVector::Dense(v), bag.into_iter().collect()))
            })
            .collect::<Result<_>>()?;
        let mut vocab = BTreeSet::new();
        let mut docs = Vec::with_capacity(per_doc.len());
        for (v, words) in per_doc {
            docs.push(v);
            vocab.extend(words);
        }

        let mut sums: HashMap<TermId, (Vec<f64>, usize)> = HashMap::new();
        for word in &vocab {
            let (Some(vec), Some(t)) = (store.get(word), index_term(ix, word)) else { continue };
            let (acc, n) = sums.entry(t).or_insert_with(|| (vec![0.0; store.dim()], 0));
            for (a, v) in acc.iter_mut().zip(vec) {
                *a += v;
            }
            *n += 1;
        }
        let term_vectors = sums
            .into_iter()
            .map(|(t, (acc, n))| (t, acc.into_iter().map(|a| a / n as f64).collect()))
            .collect();
        Ok(Self { ix, store, surface, docs, term_vectors })
    }
}

impl Vectorizer for WordSpace<'_> {
    fn name(&self) -> &'static str {
        "glove"
    }

    fn index(&self) -> &Index {
        self.ix
    }

    fn query_vector(&self, query: &HeadingQuery) -> Result<SpaceVector> {
        let bag = self.surface.tokenize(&query.raw_text);
        Ok(SpaceVector::Dense(text_vector(&bag, self.store, self.ix)))
    }

    fn doc_vector(&self, doc: DocNum) -> Cow<'_, SpaceVector> {
        Cow::Borrowed(&self.docs[doc as usize])
    }

    fn terms_vector(&self, terms: &[(TermId, f64)]) -> Result<SpaceVector> {
        let items = terms.iter().map(|&(t, w)| {
            (w * tfidf_idf(self.ix, t), self.term_vectors.get(&t).map(Vec::as_slice))
        });
        Ok(SpaceVector::Dense(weighted_average(self.store.dim(), items)))
    }

    fn entities_vector(&self, _entities: &[(&str, f64)]) -> Result<SpaceVector> {
        Err(Error::SpaceMismatch("the word-embedding space has no entity coordinates".into()))
    }
}

/// TF-IDF weighted averages of linked-entity vectors.
pub struct EntitySpace<'a> {
    ix: &'a Index,
    store: &'a EmbeddingStore,
    linker: &'a dyn EntityLinker,
    stats: EntityStats,
    docs: Vec<SpaceVector>,
}

impl<'a> EntitySpace<'a> {
    /// Links every indexed paragraph. Link statistics come from those links
    /// unless `stats` overrides them.
    pub fn new(
        ix: &'a Index,
        store: &'a EmbeddingStore,
        linker: &'a dyn EntityLinker,
        texts: &dyn TextSource,
        stats: Option<EntityStats>,
    ) -> Result<Self> {
        let mentions: Vec<Vec<EntityMention>> = (0..ix.n_docs() as DocNum)
            .into_par_iter()
            .map(|d| Ok(linker.link(require_text(texts, ix, d)?)?))
            .collect::<Result<_>>()?;
        let stats =
            stats.unwrap_or_else(|| EntityStats::from_mentions(mentions.iter().map(Vec::as_slice)));
        let docs = mentions
            .par_iter()
            .map(|m| SpaceVector::Dense(entity_vector(m, store, &stats)))
            .collect();
        Ok(Self { ix, store, linker, stats, docs })
    }

    pub fn stats(&self) -> &EntityStats {
        &self.stats
    }
}

impl Vectorizer for EntitySpace<'_> {
    fn name(&self) -> &'static str {
        "entity"
    }

    fn index(&self) -> &Index {
        self.ix
    }

    fn query_vector(&self, query: &HeadingQuery) -> Result<SpaceVector> {
        let mentions = self.linker.link(&query.raw_text)?;
        Ok(SpaceVector::Dense(entity_vector(&mentions, self.store, &self.stats)))
    }

    fn doc_vector(&self, doc: DocNum) -> Cow<'_, SpaceVector> {
        Cow::Borrowed(&self.docs[doc as usize])
    }

    fn terms_vector(&self, _terms: &[(TermId, f64)]) -> Result<SpaceVector> {
        Err(Error::SpaceMismatch("the entity space has no term coordinates".into()))
    }

    fn entities_vector(&self, entities: &[(&str, f64)]) -> Result<SpaceVector> {
        let items = entities.iter().map(|&(e, w)| {
            (w * self.stats.idf(e).unwrap_or(0.0), self.store.get(e))
        });
        Ok(SpaceVector::Dense(weighted_average(self.store.dim(), items)))
    }
}

/// Cosine between a fixed query vector and each document's vector in a space.
pub struct SpaceScorer<'a> {
    space: &'a dyn Vectorizer,
    query: SpaceVector,
    pool: Vec<TermId>,
}

impl<'a> SpaceScorer<'a> {
    pub fn new(space: &'a dyn Vectorizer, query: SpaceVector, pool: Vec<TermId>) -> Self {
        Self { space, query, pool }
    }
}

impl DocScorer for SpaceScorer<'_> {
    fn pool_terms(&self) -> &[TermId] {
        &self.pool
    }

    fn score(&self, _ix: &Index, doc: DocNum) -> f64 {
        cosine(&self.query, &self.space.doc_vector(doc)).unwrap_or(0.0)
    }
}

/// The cheapest cosine scorer for a query vector: sparse vectors score
/// straight off the postings.
pub fn cosine_scorer<'a>(
    space: &'a dyn Vectorizer,
    query: SpaceVector,
    pool: Vec<TermId>,
) -> Box<dyn DocScorer + 'a> {
    match query {
        SpaceVector::Sparse(v) => Box::new(CosineScorer::new(v, Some(pool))),
        dense => Box::new(SpaceScorer::new(space, dense, pool)),
    }
}
