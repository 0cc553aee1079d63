//! Linear learning to rank over per-method scores, trained by coordinate
//! ascent on training MAP.

mod cv;
mod model;

pub use cv::{cross_validate, CvResult, FoldModel};
pub use model::LinearModel;

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rand::Rng as _;
use rayon::prelude::*;

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::evaluation::RunFile;
use crate::index::Ranking;
use crate::rng;

/// Scores of one query–paragraph pair, one slot per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub query_id: String,
    pub paragraph_id: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaConfig {
    /// Random starting points, on top of one unit vector per feature.
    pub restarts: usize,
    pub iterations_per_restart: usize,
    pub step_sizes: Vec<f64>,
    pub seed: u64,
}

impl Default for CaConfig {
    fn default() -> Self {
        Self { restarts: 5, iterations_per_restart: 25, step_sizes: vec![1.0, 0.3, 0.1, 0.03], seed: 0 }
    }
}

impl CaConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("coordinate ascent needs at least one restart".into()));
        }
        if self.step_sizes.is_empty() || self.step_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("step sizes must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Per-query min-max normalization of each run, then one vector per
/// paragraph in any run (ascending paragraph id). A run with a single
/// distinct score maps to 0.5; a paragraph missing from a run gets 0.
pub fn assemble_features(runs: &[Option<&Ranking>], query_id: &str) -> Vec<FeatureVector> {
    let mut table: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (slot, run) in runs.iter().enumerate() {
        let Some(run) = run else { continue };
        let entries = run.entries();
        let (lo, hi) = entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.score), hi.max(e.score)));
        for e in entries {
            let v = if hi > lo { (e.score - lo) / (hi - lo) } else { 0.5 };
            table.entry(e.id.as_str()).or_insert_with(|| vec![0.0; runs.len()])[slot] = v;
        }
    }
    table
        .into_iter()
        .map(|(pid, features)| FeatureVector {
            query_id: query_id.to_string(),
            paragraph_id: pid.to_string(),
            features,
        })
        .collect()
}

/// Externally produced scores (for example a neural ranker's) in TREC run
/// format, usable as an extra feature column.
pub fn ingest_external_scores<R: BufRead>(reader: R) -> Result<Vec<Ranking>> {
    RunFile::read(reader)?.rankings()
}

/// One query's candidates in feature-major layout.
#[derive(Debug, Clone)]
pub(crate) struct QueryData {
    pub query_id: String,
    pub paragraph_ids: Vec<String>,
    /// `columns[f][i]`: feature `f` of candidate `i`.
    pub columns: Vec<Vec<f64>>,
    pub relevant: Vec<usize>,
    /// Relevant paragraphs in the qrels, retrieved or not.
    pub n_relevant: usize,
}

/// Groups vectors by query; candidates sorted by paragraph id so that index
/// order is the tie order.
pub(crate) fn group(features: &[FeatureVector], qrels: &Qrels) -> Result<Vec<QueryData>> {
    let arity = features.first().map_or(0, |f| f.features.len());
    let mut by_query: BTreeMap<&str, Vec<&FeatureVector>> = BTreeMap::new();
    for f in features {
        if f.features.len() != arity {
            return Err(Error::InvalidArgument(format!(
                "feature arity {} differs from {arity} at {}/{}",
                f.features.len(),
                f.query_id,
                f.paragraph_id
            )));
        }
        if f.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature at {}/{}",
                f.query_id, f.paragraph_id
            )));
        }
        by_query.entry(f.query_id.as_str()).or_default().push(f);
    }
    let mut out = Vec::with_capacity(by_query.len());
    for (qid, mut rows) in by_query {
        rows.sort_by(|a, b| a.paragraph_id.cmp(&b.paragraph_id));
        if rows.windows(2).any(|w| w[0].paragraph_id == w[1].paragraph_id) {
            return Err(Error::Integrity(format!("duplicate feature vector in query {qid:?}")));
        }
        let relevant_set = qrels.relevant(qid);
        let columns = (0..arity).map(|f| rows.iter().map(|r| r.features[f]).collect()).collect();
        let relevant = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| relevant_set.contains(r.paragraph_id.as_str()))
            .map(|(i, _)| i)
            .collect();
        out.push(QueryData {
            query_id: qid.to_string(),
            paragraph_ids: rows.iter().map(|r| r.paragraph_id.clone()).collect(),
            columns,
            relevant,
            n_relevant: relevant_set.len(),
        });
    }
    Ok(out)
}

impl QueryData {
    fn scores(&self, weights: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.paragraph_ids.len()];
        for (w, col) in weights.iter().zip(&self.columns) {
            if *w != 0.0 {
                for (acc, v) in s.iter_mut().zip(col) {
                    *acc += w * v;
                }
            }
        }
        s
    }
}

/// AP under the ranking by score descending, index ascending, computed from
/// the rank of each relevant candidate alone.
fn average_precision(scores: &[f64], relevant: &[usize], n_relevant: usize) -> f64 {
    if n_relevant == 0 {
        return 0.0;
    }
    let mut ranks: Vec<usize> = relevant
        .iter()
        .map(|&r| {
            let sr = scores[r];
            1 + scores
                .iter()
                .enumerate()
                .filter(|&(j, &sj)| sj > sr || (sj == sr && j < r))
                .count()
        })
        .collect();
    ranks.sort_unstable();
    let sum: f64 = ranks.iter().enumerate().map(|(i, &rank)| (i + 1) as f64 / rank as f64).sum();
    sum / n_relevant as f64
}

fn training_map(data: &[QueryData], weights: &[f64]) -> f64 {
    let total: f64 =
        data.iter().map(|q| average_precision(&q.scores(weights), &q.relevant, q.n_relevant)).sum();
    total / data.len() as f64
}

/// Training MAP as a function of one weight: every other feature's
/// contribution is summed once into `base`.
struct LineSearch<'a> {
    data: &'a [QueryData],
    feature: usize,
    base: Vec<Vec<f64>>,
}

impl<'a> LineSearch<'a> {
    fn new(data: &'a [QueryData], weights: &[f64], feature: usize) -> Self {
        let base = data
            .iter()
            .map(|q| {
                let mut s = vec![0.0; q.paragraph_ids.len()];
                for (k, (w, col)) in weights.iter().zip(&q.columns).enumerate() {
                    if k != feature && *w != 0.0 {
                        for (acc, v) in s.iter_mut().zip(col) {
                            *acc += w * v;
                        }
                    }
                }
                s
            })
            .collect();
        Self { data, feature, base }
    }

    fn map(&self, weight: f64) -> f64 {
        let mut total = 0.0;
        for (q, base) in self.data.iter().zip(&self.base) {
            if q.n_relevant == 0 {
                continue;
            }
            let col = &q.columns[self.feature];
            let score = |i: usize| base[i] + weight * col[i];
            let mut ranks: Vec<usize> = q
                .relevant
                .iter()
                .map(|&r| {
                    let sr = score(r);
                    1 + (0..base.len()).filter(|&j| {
                        let sj = score(j);
                        sj > sr || (sj == sr && j < r)
                    }).count()
                })
                .collect();
            ranks.sort_unstable();
            let sum: f64 = ranks.iter().enumerate().map(|(i, &rank)| (i + 1) as f64 / rank as f64).sum();
            total += sum / q.n_relevant as f64;
        }
        total / self.data.len() as f64
    }
}

/// Coordinate ascent from one starting point. Returns the final weights and
/// their training MAP.
fn ascend(data: &[QueryData], start: Vec<f64>, cfg: &CaConfig) -> (Vec<f64>, f64) {
    let mut w = start;
    let mut best = training_map(data, &w);
    for _ in 0..cfg.iterations_per_restart {
        let mut improved = false;
        for j in 0..w.len() {
            let current = w[j];
            let line = LineSearch::new(data, &w, j);
            let others_zero = w.iter().enumerate().all(|(k, x)| k == j || *x == 0.0);
            let mut best_here: Option<(f64, f64)> = None;
            for &s in &cfg.step_sizes {
                for cand in [current + s, current - s, current * (1.0 + s), current * (1.0 - s)] {
                    if cand == current || !cand.is_finite() || (cand == 0.0 && others_zero) {
                        continue;
                    }
                    let m = line.map(cand);
                    if m > best_here.map_or(best, |b| b.1) {
                        best_here = Some((cand, m));
                    }
                }
            }
            if let Some((cand, m)) = best_here {
                w[j] = cand;
                best = m;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let map = training_map(data, &w);
    (w, map)
}

/// Trains a linear model maximizing training MAP. Starting points are the
/// unit vector of every feature followed by `cfg.restarts` seeded random
/// vectors; the best result wins, earlier starts winning ties.
pub fn train_coordinate_ascent(
    features: &[FeatureVector],
    qrels: &Qrels,
    feature_names: &[String],
    cfg: &CaConfig,
) -> Result<LinearModel> {
    cfg.validate()?;
    let data: Vec<QueryData> = group(features, qrels)?.into_iter().filter(|q| q.n_relevant > 0).collect();
    train_grouped(&data, feature_names, cfg)
}

pub(crate) fn train_grouped(data: &[QueryData], feature_names: &[String], cfg: &CaConfig) -> Result<LinearModel> {
    cfg.validate()?;
    if data.iter().all(|q| q.n_relevant == 0) {
        return Err(Error::NoPositives);
    }
    let arity = feature_names.len();
    if arity == 0 || data.iter().any(|q| q.columns.len() != arity) {
        return Err(Error::InvalidArgument(format!("expected {arity} named features")));
    }
    let mut starts: Vec<Vec<f64>> = (0..arity)
        .map(|i| (0..arity).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = rng::derived(cfg.seed, "coordinate-ascent");
    for _ in 0..cfg.restarts {
        starts.push((0..arity).map(|_| rng.random_range(0.01..1.0)).collect());
    }
    let results: Vec<(Vec<f64>, f64)> =
        starts.into_par_iter().map(|s| ascend(data, s, cfg)).collect();
    let (weights, map) = results
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one start");
    LinearModel::new(feature_names.to_vec(), weights).map(|m| m.with_training_map(map))
}

/// Best training MAP of any single feature on its own.
pub fn single_feature_maps(features: &[FeatureVector], qrels: &Qrels) -> Result<Vec<f64>> {
    let data: Vec<QueryData> = group(features, qrels)?.into_iter().filter(|q| q.n_relevant > 0).collect();
    if data.is_empty() {
        return Err(Error::NoPositives);
    }
    let arity = data[0].columns.len();
    Ok((0..arity)
        .map(|i| {
            let unit: Vec<f64> = (0..arity).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
            training_map(&data, &unit)
        })
        .collect())
}

/// Queries in `features` with at least one qrels positive.
pub fn queries_with_positives(features: &[FeatureVector], qrels: &Qrels) -> BTreeSet<String> {
    features
        .iter()
        .filter(|f| !qrels.relevant(&f.query_id).is_empty())
        .map(|f| f.query_id.clone())
        .collect()
}
