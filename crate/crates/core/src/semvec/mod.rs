//! Dense text representations: TF-IDF weighted averages of word vectors and
//! of linked-entity vectors, plus the entity linker interface.

mod linker;
mod space;

pub use linker::{CachedLinker, EntityLinker, EntityMention, GazetteerLinker, LinkerError};
pub use space::{cosine_scorer, EntitySpace, SpaceScorer, TfidfSpace, Vectorizer, WordSpace};

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::index::{tfidf_idf, Index, SparseVector, TermId};
use crate::textproc::Token;

/// Key to fixed-length vector table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, table: HashMap::new() }
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector has {} values, store dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite embedding value".into()));
        }
        self.table.insert(key.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.table.get(key).map(Vec::as_slice)
    }

    /// Writes `key v1 ... v_dim` lines in ascending key order.
    pub fn write<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let mut keys: Vec<&String> = self.table.keys().collect();
        keys.sort_unstable();
        for k in keys {
            write!(out, "{k}")?;
            for v in &self.table[k] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Every vector multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let table = self
            .table
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|x| x * c).collect()))
            .collect();
        Self { dim: self.dim, table }
    }
}

/// Reads `key v1 ... v_dim` lines. The dimension comes from the first line;
/// later lines with a different count are an error.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingStore> {
    let mut store: Option<EmbeddingStore> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(key) = fields.next() else { continue };
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(lineno, format!("bad number: {e}")))?;
        if values.is_empty() {
            return Err(Error::parse(lineno, format!("no values for key {key:?}")));
        }
        let store = store.get_or_insert_with(|| EmbeddingStore::new(values.len()));
        if values.len() != store.dim {
            return Err(Error::parse(
                lineno,
                format!("expected {} values, found {}", store.dim, values.len()),
            ));
        }
        store.insert(key, values).map_err(|e| Error::parse(lineno, e.to_string()))?;
    }
    store.ok_or_else(|| Error::parse(0, "embedding file is empty"))
}

/// A dense vector; `empty` marks a text with no covered tokens or entities.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    pub values: Vec<f64>,
    pub empty: bool,
}

impl DenseVector {
    pub fn zeros(dim: usize, empty: bool) -> Self {
        Self { values: vec![0.0; dim], empty }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self { values: self.values.iter().map(|v| v / n).collect(), empty: self.empty }
    }

    /// `a·self + b·other`; empty only if both sides are.
    pub fn mix(&self, a: f64, other: &DenseVector, b: f64) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
            empty: self.empty && other.empty,
        })
    }

    /// Unweighted mean; `None` for an empty slice.
    pub fn centroid(vectors: &[DenseVector]) -> Result<Option<Self>> {
        let Some(first) = vectors.first() else { return Ok(None) };
        let mut acc = DenseVector::zeros(first.dim(), true);
        for v in vectors {
            check_dims(&acc, v)?;
            for (a, x) in acc.values.iter_mut().zip(&v.values) {
                *a += x / vectors.len() as f64;
            }
            acc.empty &= v.empty;
        }
        Ok(Some(acc))
    }
}

fn check_dims(a: &DenseVector, b: &DenseVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::SpaceMismatch(format!("dimensions {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// A vector in one of the supported spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceVector {
    Sparse(SparseVector),
    Dense(DenseVector),
}

impl SpaceVector {
    pub fn norm(&self) -> f64 {
        match self {
            SpaceVector::Sparse(v) => v.norm(),
            SpaceVector::Dense(v) => v.norm(),
        }
    }

    pub fn normalized(&self) -> Self {
        match self {
            SpaceVector::Sparse(v) => SpaceVector::Sparse(v.normalized()),
            SpaceVector::Dense(v) => SpaceVector::Dense(v.normalized()),
        }
    }

    /// `a·self + b·other` within one space.
    pub fn mix(&self, a: f64, other: &SpaceVector, b: f64) -> Result<Self> {
        match (self, other) {
            (SpaceVector::Sparse(x), SpaceVector::Sparse(y)) => Ok(SpaceVector::Sparse(x.mix(a, y, b))),
            (SpaceVector::Dense(x), SpaceVector::Dense(y)) => Ok(SpaceVector::Dense(x.mix(a, y, b)?)),
            _ => Err(Error::SpaceMismatch("sparse and dense vectors".into())),
        }
    }

    /// Unweighted mean of normalized vectors; `None` for an empty slice.
    pub fn centroid_of_normalized(vectors: &[SpaceVector]) -> Result<Option<Self>> {
        let Some(first) = vectors.first() else { return Ok(None) };
        match first {
            SpaceVector::Sparse(_) => {
                let parts = vectors
                    .iter()
                    .map(|v| match v {
                        SpaceVector::Sparse(s) => Ok(s.normalized()),
                        SpaceVector::Dense(_) => Err(Error::SpaceMismatch("sparse and dense vectors".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(SpaceVector::Sparse(SparseVector::centroid(&parts))))
            }
            SpaceVector::Dense(_) => {
                let parts = vectors
                    .iter()
                    .map(|v| match v {
                        SpaceVector::Dense(d) => Ok(d.normalized()),
                        SpaceVector::Sparse(_) => Err(Error::SpaceMismatch("sparse and dense vectors".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DenseVector::centroid(&parts)?.map(SpaceVector::Dense))
            }
        }
    }
}

/// `dot(a, b) / (|a| |b|)`, or 0 when either norm is 0.
pub fn cosine(a: &SpaceVector, b: &SpaceVector) -> Result<f64> {
    match (a, b) {
        (SpaceVector::Sparse(x), SpaceVector::Sparse(y)) => Ok(x.cosine(y)),
        (SpaceVector::Dense(x), SpaceVector::Dense(y)) => dense_cosine(x, y),
        _ => Err(Error::SpaceMismatch("sparse and dense vectors".into())),
    }
}

pub fn dense_cosine(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Index term carrying a bag token's corpus statistics. Unstemmed surface
/// forms are run through the index analyzer.
fn index_term(ix: &Index, token: &str) -> Option<TermId> {
    ix.term_id(token).or_else(|| ix.tokenize(token).first().and_then(|t| ix.term_id(t)))
}

fn log_tfidf(tf: usize, idf: f64) -> f64 {
    (1.0 + (tf as f64).ln()) * idf
}

/// `(1/|d|) Σ_{w ∈ d} tfidf(w) · vec(w)`, summing over token occurrences that
/// have a stored vector and dividing by their number. Tokens whose index term
/// is unknown still count toward `|d|` but add nothing.
pub fn text_vector(bag: &[Token], store: &EmbeddingStore, ix: &Index) -> DenseVector {
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in bag {
        *tf.entry(tok.as_str()).or_insert(0) += 1;
    }
    let mut acc = vec![0.0; store.dim()];
    let mut covered = 0usize;
    for (tok, count) in tf {
        let Some(vec) = store.get(tok) else { continue };
        covered += count;
        let Some(term) = index_term(ix, tok) else { continue };
        // every occurrence contributes the same weight
        let w = count as f64 * log_tfidf(count, tfidf_idf(ix, term));
        for (a, v) in acc.iter_mut().zip(vec) {
            *a += w * v;
        }
    }
    if covered == 0 {
        return DenseVector::zeros(store.dim(), true);
    }
    DenseVector { values: acc.into_iter().map(|a| a / covered as f64).collect(), empty: false }
}

/// Entity link document frequencies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityStats {
    pub link_doc_freq: HashMap<String, usize>,
    pub n_docs: usize,
}

impl EntityStats {
    /// Counts, for each entity, how many of the given texts link to it.
    pub fn from_mentions<'a>(docs: impl IntoIterator<Item = &'a [EntityMention]>) -> Self {
        let mut stats = EntityStats::default();
        for mentions in docs {
            stats.n_docs += 1;
            let mut distinct: Vec<&str> = mentions.iter().map(|m| m.entity_id.as_str()).collect();
            distinct.sort_unstable();
            distinct.dedup();
            for e in distinct {
                *stats.link_doc_freq.entry(e.to_string()).or_insert(0) += 1;
            }
        }
        stats
    }

    /// Reads `Ndocs<TAB>n` followed by `entityId<TAB>linkDocFreq` rows.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let n_docs = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::parse(1, "missing Ndocs header"));
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected Ndocs<TAB>n header"))?;
            if key != "Ndocs" {
                return Err(Error::parse(i + 1, "expected Ndocs<TAB>n header"));
            }
            break value.trim().parse::<usize>().map_err(|e| Error::parse(i + 1, e.to_string()))?;
        };
        let mut link_doc_freq = HashMap::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (entity, df) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected entityId<TAB>linkDocFreq"))?;
            let df: usize = df.trim().parse().map_err(|e| Error::parse(i + 1, format!("{e}")))?;
            if df > n_docs {
                return Err(Error::parse(i + 1, format!("linkDocFreq {df} exceeds Ndocs {n_docs}")));
            }
            link_doc_freq.insert(entity.to_string(), df);
        }
        Ok(Self { link_doc_freq, n_docs })
    }

    pub fn idf(&self, entity: &str) -> Option<f64> {
        match self.link_doc_freq.get(entity) {
            Some(&df) if df > 0 => Some((self.n_docs as f64 / df as f64).ln()),
            _ => None,
        }
    }
}

/// `(1/|{e ∈ d}|) Σ_e tfidf(e) · vec(e)` over distinct linked entities with a
/// stored vector.
pub fn entity_vector(
    mentions: &[EntityMention],
    store: &EmbeddingStore,
    stats: &EntityStats,
) -> DenseVector {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in mentions {
        *counts.entry(m.entity_id.as_str()).or_insert(0) += m.count;
    }
    let mut acc = vec![0.0; store.dim()];
    let mut distinct = 0usize;
    for (entity, count) in counts {
        let Some(vec) = store.get(entity) else { continue };
        distinct += 1;
        let Some(idf) = stats.idf(entity) else { continue };
        let w = log_tfidf(count, idf);
        for (a, v) in acc.iter_mut().zip(vec) {
            *a += w * v;
        }
    }
    if distinct == 0 {
        return DenseVector::zeros(store.dim(), true);
    }
    DenseVector { values: acc.into_iter().map(|a| a / distinct as f64).collect(), empty: false }
}
