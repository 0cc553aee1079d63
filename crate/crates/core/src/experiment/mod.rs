//! Scoring methods and expansions wired together over one corpus: single
//! method runs, and the fused multi-feature pipeline.

mod pipeline;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

pub use pipeline::{run_pipeline, Ablation, FeatureRun, PipelineConfig, PipelineOutput};

use crate::corpus::{assign_folds, Corpus, FoldAssignment, HeadingQuery};
use crate::envgen::CandidateSet;
use crate::error::{Error, Result};
use crate::expansion::{
    build_heading_support, expand_entities, expand_rm3, rm1_entities, rm1_terms, rocchio_expand,
    ExpandedQuery, HeadingSupportIndex, DEFAULT_LAMBDA,
};
use crate::index::{rank_candidates, retrieve_topk, Bm25Params, Bm25Scorer, DocScorer, Index, Ranking};
use crate::semvec::{
    cosine_scorer, EmbeddingStore, EntityLinker, EntitySpace, EntityStats, TfidfSpace, Vectorizer,
    WordSpace,
};

/// Folds used to keep a query's own page out of its Rocchio support.
pub const SUPPORT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Bm25,
    TfidfCs,
    GloveCs,
    EntityCs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expansion {
    None,
    Rm1,
    EntRm1,
    Rocchio,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bm25, Method::TfidfCs, Method::GloveCs, Method::EntityCs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bm25 => "bm25",
            Method::TfidfCs => "tfidf-cs",
            Method::GloveCs => "glove-cs",
            Method::EntityCs => "entity-cs",
        }
    }

    /// Expansions this method can consume. Lexical BM25 takes term feedback
    /// only; the entity space takes entity or passage feedback.
    pub fn supports(self, expansion: Expansion) -> bool {
        use Expansion as E;
        match self {
            Method::Bm25 => matches!(expansion, E::None | E::Rm1),
            Method::TfidfCs | Method::GloveCs => matches!(expansion, E::None | E::Rm1 | E::Rocchio),
            Method::EntityCs => matches!(expansion, E::None | E::EntRm1 | E::Rocchio),
        }
    }
}

impl Expansion {
    pub fn as_str(self) -> &'static str {
        match self {
            Expansion::None => "none",
            Expansion::Rm1 => "rm1",
            Expansion::EntRm1 => "ent-rm1",
            Expansion::Rocchio => "rocchio",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?} (bm25, tfidf-cs, glove-cs, entity-cs)")))
    }
}

impl FromStr for Expansion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Expansion::None, Expansion::Rm1, Expansion::EntRm1, Expansion::Rocchio]
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown expansion {s:?} (none, rm1, ent-rm1, rocchio)")))
    }
}

/// A scoring method with its expansion, e.g. `tfidf-cs+rocchio`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureSpec {
    pub method: Method,
    pub expansion: Expansion,
}

impl FeatureSpec {
    pub fn new(method: Method, expansion: Expansion) -> Result<Self> {
        if !method.supports(expansion) {
            return Err(Error::InvalidArgument(format!("method {method} cannot use expansion {expansion}")));
        }
        Ok(Self { method, expansion })
    }

    pub fn name(&self) -> String {
        match self.expansion {
            Expansion::None => self.method.to_string(),
            e => format!("{}+{e}", self.method),
        }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, e) = s.split_once('+').unwrap_or((s, "none"));
        FeatureSpec::new(m.parse()?, e.parse()?)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub fb_entities: usize,
    pub rocchio_passages: usize,
    pub lambda: f64,
    pub mu: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self { fb_docs: 10, fb_terms: 10, fb_entities: 10, rocchio_passages: 5, lambda: DEFAULT_LAMBDA, mu: 1500.0 }
    }
}

/// Optional inputs for the embedding spaces.
#[derive(Default)]
pub struct Resources<'a> {
    pub word_embeddings: Option<&'a EmbeddingStore>,
    pub entity_embeddings: Option<&'a EmbeddingStore>,
    pub linker: Option<&'a dyn EntityLinker>,
    pub entity_stats: Option<EntityStats>,
}

/// A corpus, its index and every vector space the resources allow.
pub struct Experiment<'a> {
    corpus: &'a Corpus,
    ix: &'a Index,
    pub bm25: Bm25Params,
    pub params: ExpansionParams,
    tfidf: TfidfSpace<'a>,
    glove: Option<WordSpace<'a>>,
    entity: Option<EntitySpace<'a>>,
    linker: Option<&'a dyn EntityLinker>,
    folds: Option<FoldAssignment>,
    support: Vec<HeadingSupportIndex>,
}

impl<'a> Experiment<'a> {
    /// Builds the spaces the resources allow. Rocchio support is indexed per
    /// fold of a page-level split seeded by `seed`.
    pub fn new(
        corpus: &'a Corpus,
        ix: &'a Index,
        resources: Resources<'a>,
        bm25: Bm25Params,
        params: ExpansionParams,
        seed: u64,
    ) -> Result<Self> {
        let glove = resources.word_embeddings.map(|store| WordSpace::new(ix, store, corpus)).transpose()?;
        let entity = match (resources.entity_embeddings, resources.linker) {
            (Some(store), Some(linker)) => {
                Some(EntitySpace::new(ix, store, linker, corpus, resources.entity_stats)?)
            }
            (Some(_), None) => {
                return Err(Error::InvalidArgument("entity embeddings need a gazetteer to link with".into()))
            }
            _ => None,
        };
        let k = SUPPORT_FOLDS.min(corpus.pages.len());
        let (folds, support) = if k < 2 {
            warn!("fewer than two pages: Rocchio has no support and leaves queries unexpanded");
            (None, Vec::new())
        } else {
            let folds = assign_folds(corpus, k, seed)?;
            let support = (0..k).map(|f| build_heading_support(corpus, &folds, f)).collect::<Result<_>>()?;
            (Some(folds), support)
        };
        Ok(Self {
            corpus,
            ix,
            bm25,
            params,
            tfidf: TfidfSpace::new(ix),
            glove,
            entity,
            linker: resources.linker,
            folds,
            support,
        })
    }

    pub fn index(&self) -> &Index {
        self.ix
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    /// Checks that the method/expansion pair is valid and its resources are loaded.
    pub fn check(&self, spec: FeatureSpec) -> Result<()> {
        FeatureSpec::new(spec.method, spec.expansion)?;
        if spec.method == Method::GloveCs && self.glove.is_none() {
            return Err(Error::InvalidArgument("glove-cs needs word embeddings".into()));
        }
        let needs_entities = spec.method == Method::EntityCs || spec.expansion == Expansion::EntRm1;
        if needs_entities && self.entity.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{spec} needs entity embeddings and a gazetteer"
            )));
        }
        Ok(())
    }

    fn space(&self, method: Method) -> Result<&dyn Vectorizer> {
        match method {
            Method::Bm25 => Err(Error::InvalidArgument("bm25 has no vector space".into())),
            Method::TfidfCs => Ok(&self.tfidf),
            Method::GloveCs => {
                self.glove.as_ref().map(|s| s as &dyn Vectorizer).ok_or_else(|| {
                    Error::InvalidArgument("glove-cs needs word embeddings".into())
                })
            }
            Method::EntityCs => self
                .entity
                .as_ref()
                .map(|s| s as &dyn Vectorizer)
                .ok_or_else(|| Error::InvalidArgument("entity-cs needs entity embeddings".into())),
        }
    }

    fn support_for(&self, query: &HeadingQuery) -> Result<Option<&HeadingSupportIndex>> {
        let Some(folds) = &self.folds else { return Ok(None) };
        let fold = folds.fold_of(&query.page_id).ok_or_else(|| {
            Error::Integrity(format!("query {:?} belongs to no page of the corpus", query.query_id))
        })?;
        Ok(Some(&self.support[fold]))
    }

    pub fn expand(&self, spec: FeatureSpec, query: &HeadingQuery) -> Result<ExpandedQuery> {
        let p = &self.params;
        match spec.expansion {
            Expansion::None => Ok(ExpandedQuery::unexpanded(query)),
            Expansion::Rm1 => {
                let terms = rm1_terms(self.ix, query, p.fb_docs, p.fb_terms, p.mu)?;
                expand_rm3(query, terms, p.lambda)
            }
            Expansion::EntRm1 => {
                let linker = self
                    .linker
                    .ok_or_else(|| Error::InvalidArgument("ent-rm1 needs a gazetteer".into()))?;
                let ents = rm1_entities(self.ix, self.corpus, query, linker, p.fb_docs, p.fb_entities, p.mu)?;
                expand_entities(query, ents, p.lambda)
            }
            Expansion::Rocchio => match self.support_for(query)? {
                Some(support) => {
                    rocchio_expand(query, support, p.rocchio_passages, self.space(spec.method)?, p.lambda)
                }
                None => Ok(ExpandedQuery::unexpanded(query)),
            },
        }
    }

    pub fn scorer(&self, spec: FeatureSpec, query: &HeadingQuery) -> Result<Box<dyn DocScorer + '_>> {
        let eq = self.expand(spec, query)?;
        if spec.method == Method::Bm25 {
            return Ok(Box::new(if eq.is_expanded() {
                Bm25Scorer::new(self.ix, &eq.term_weights(self.ix)?, self.bm25)
            } else {
                Bm25Scorer::from_tokens(self.ix, &query.terms, self.bm25)
            }));
        }
        let space = self.space(spec.method)?;
        Ok(cosine_scorer(space, eq.vector(space)?, eq.pool_terms(self.ix)))
    }

    /// Ranks each query: only its candidates when `candidates` is given
    /// (queries without a candidate set are skipped), otherwise the top `k`
    /// of the full index. Rankings come back ordered by query id.
    pub fn run(
        &self,
        spec: FeatureSpec,
        queries: &[HeadingQuery],
        candidates: Option<&[CandidateSet]>,
        k: usize,
    ) -> Result<Vec<Ranking>> {
        self.check(spec)?;
        let by_query: Option<BTreeMap<&str, &CandidateSet>> =
            candidates.map(|sets| sets.iter().map(|s| (s.query_id.as_str(), s)).collect());
        if let Some(map) = &by_query {
            let known: std::collections::BTreeSet<&str> = queries.iter().map(|q| q.query_id.as_str()).collect();
            if let Some(stray) = map.keys().find(|q| !known.contains(*q)) {
                return Err(Error::Integrity(format!("candidate set for unknown query {stray:?}")));
            }
        }
        let mut rankings: Vec<Ranking> = queries
            .par_iter()
            .filter_map(|q| {
                let set = match &by_query {
                    Some(map) => Some(*map.get(q.query_id.as_str())?),
                    None => None,
                };
                Some(self.scorer(spec, q).and_then(|scorer| match set {
                    Some(set) => rank_candidates(self.ix, scorer.as_ref(), &q.query_id, &set.paragraph_ids),
                    None => Ok(retrieve_topk(self.ix, scorer.as_ref(), &q.query_id, k)),
                }))
            })
            .collect::<Result<_>>()?;
        rankings.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        Ok(rankings)
    }
}
