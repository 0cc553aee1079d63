//! Passage retrieval over outline-structured corpora.
//!
//! Queries are built from heading paths, paragraphs are ranked with BM25,
//! TF-IDF cosine or embedding cosine (optionally after relevance-model or
//! same-heading Rocchio expansion), per-method scores are fused with a
//! coordinate-ascent linear ranker, and runs are evaluated with MAP, R-Prec
//! and MRR.

pub mod corpus;
pub mod envgen;
pub mod error;
pub mod evaluation;
pub mod expansion;
pub mod experiment;
pub mod index;
pub mod ltr;
pub mod rng;
pub mod semvec;
pub mod synth;
pub mod textproc;

pub use corpus::{Corpus, HeadingQuery, Page, Paragraph, Qrels, Section, TextSource};
pub use error::{Error, Result};
pub use evaluation::{MetricsReport, RunFile};
pub use index::{Bm25Params, Index, Ranking, SparseVector};
pub use textproc::{Token, TokenPipelineConfig};
