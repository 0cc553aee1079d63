//! Benchmark fixtures.

use outline_core::corpus::{build_all_queries, derive_qrels};
use outline_core::envgen::{generate_candidates, CandidateSet};
use outline_core::experiment::{ExpansionParams, Experiment, Resources};
use outline_core::index::build_index;
use outline_core::ltr::{assemble_features, FeatureVector};
use outline_core::synth::{generate, SynthConfig, SynthData};
use outline_core::{Bm25Params, HeadingQuery, Index, Qrels, Ranking, TokenPipelineConfig};

/// A synthetic collection with its index, queries, relevance and first-stage
/// candidates.
pub struct Fixture {
    pub data: SynthData,
    pub index: Index,
    pub queries: Vec<HeadingQuery>,
    pub qrels: Qrels,
    pub candidates: Vec<CandidateSet>,
}

impl Fixture {
    pub fn new(pages: usize) -> Self {
        let data = generate(&SynthConfig::with_pages(pages, 11)).expect("synthetic corpus");
        let index = build_index(&data.corpus.texts(), &TokenPipelineConfig::default()).expect("index");
        let queries = build_all_queries(&data.corpus, index.analyzer());
        let qrels = derive_qrels(&data.corpus);
        let candidates = queries
            .iter()
            .map(|q| generate_candidates(&index, q, 100, Bm25Params::default()).expect("candidates"))
            .collect();
        Fixture { data, index, queries, qrels, candidates }
    }

    pub fn experiment(&self) -> Experiment<'_> {
        let resources = Resources {
            word_embeddings: Some(&self.data.word_embeddings),
            ..Resources::default()
        };
        Experiment::new(&self.data.corpus, &self.index, resources, Bm25Params::default(), ExpansionParams::default(), 0)
            .expect("experiment")
    }

    /// Feature vectors for every candidate under the given per-feature runs.
    pub fn features(&self, runs: &[Vec<Ranking>]) -> Vec<FeatureVector> {
        self.candidates
            .iter()
            .flat_map(|set| {
                let per_run: Vec<Option<&Ranking>> =
                    runs.iter().map(|r| r.iter().find(|x| x.query_id == set.query_id)).collect();
                assemble_features(&per_run, &set.query_id)
            })
            .collect()
    }
}
