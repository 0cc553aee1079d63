use std::collections::BTreeSet;
use std::io::Write;

use log::warn;

use super::{group, train_grouped, CaConfig, FeatureVector, LinearModel, QueryData};
use crate::corpus::{assign_ids, Qrels};
use crate::error::{Error, Result};
use crate::index::Ranking;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub fold: usize,
    pub model: LinearModel,
    pub train_queries: BTreeSet<String>,
    pub test_queries: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// One ranking per input query, ordered by query id.
    pub rankings: Vec<Ranking>,
    pub folds: Vec<FoldModel>,
}

impl CvResult {
    /// Tab-separated `fold, #train, #test, training MAP, weights...` rows.
    pub fn write_report<W: Write>(&self, mut out: W) -> Result<()> {
        let names = self.folds.first().map(|f| f.model.feature_names.join("\t")).unwrap_or_default();
        writeln!(out, "fold\ttrain_queries\ttest_queries\ttrain_map\t{names}")?;
        for f in &self.folds {
            let map = f.model.training_map().map_or("-".to_string(), |m| format!("{m:.6}"));
            let weights: Vec<String> = f.model.weights.iter().map(|w| format!("{:.6}", w + 0.0)).collect();
            writeln!(
                out,
                "{}\t{}\t{}\t{map}\t{}",
                f.fold,
                f.train_queries.len(),
                f.test_queries.len(),
                weights.join("\t")
            )?;
        }
        Ok(())
    }
}

/// `k`-fold cross-validation by query. Each fold's queries are ranked by a
/// model trained on the other folds' queries that have positives; a fold
/// whose training side has no positives falls back to uniform weights.
pub fn cross_validate(
    features: &[FeatureVector],
    qrels: &Qrels,
    feature_names: &[String],
    k: usize,
    cfg: &CaConfig,
) -> Result<CvResult> {
    let data = group(features, qrels)?;
    let mut ids: Vec<&str> = data.iter().map(|q| q.query_id.as_str()).collect();
    let assignment = assign_ids(&mut ids, k, rng::derive_seed(cfg.seed, "cv-folds"))?;

    let mut rankings = Vec::with_capacity(data.len());
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let in_fold = |q: &QueryData| assignment.fold_of(&q.query_id) == Some(fold);
        let test: Vec<&QueryData> = data.iter().filter(|q| in_fold(q)).collect();
        let train: Vec<QueryData> =
            data.iter().filter(|q| !in_fold(q) && q.n_relevant > 0).cloned().collect();
        let train_queries: BTreeSet<String> = train.iter().map(|q| q.query_id.clone()).collect();
        let test_queries: BTreeSet<String> = test.iter().map(|q| q.query_id.clone()).collect();
        if let Some(leak) = train_queries.intersection(&test_queries).next() {
            return Err(Error::Integrity(format!("query {leak:?} is in both training and test of fold {fold}")));
        }
        if test.iter().all(|q| q.n_relevant == 0) {
            warn!("fold {fold} has no relevant paragraphs; scored but not used for training");
        }
        let model = if train.is_empty() {
            warn!("fold {fold}: no training queries with positives, using uniform weights");
            LinearModel::uniform(feature_names.to_vec())?
        } else {
            train_grouped(&train, feature_names, cfg)?
        };
        for q in &test {
            let scores = q.scores(&model.weights);
            rankings.push(Ranking::new(
                q.query_id.clone(),
                q.paragraph_ids.iter().cloned().zip(scores).collect(),
            )?);
        }
        folds.push(FoldModel { fold, model, train_queries, test_queries });
    }
    rankings.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(CvResult { rankings, folds })
}
