use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{Expansion, Experiment, FeatureSpec, Method};
use crate::corpus::{HeadingQuery, Qrels};
use crate::envgen::{generate_candidates, write_candidates, CandidateSet, DEFAULT_CANDIDATES};
use crate::error::{Error, Result, StageContext};
use crate::evaluation::{evaluate_run, MetricsReport, RunFile};
use crate::index::Ranking;
use crate::ltr::{assemble_features, cross_validate, CaConfig, CvResult, FeatureVector};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// First-stage BM25 depth when no candidate file is given.
    pub candidates_k: usize,
    pub features: Vec<FeatureSpec>,
    pub ltr_folds: usize,
    pub ca: CaConfig,
    /// Features left out of a second, ablated fusion.
    pub without: Vec<String>,
}

impl PipelineConfig {
    /// Lexical features plus whichever embedding features the experiment
    /// has resources for.
    pub fn default_features(ex: &Experiment) -> Vec<FeatureSpec> {
        let mut out = vec![
            FeatureSpec { method: Method::Bm25, expansion: Expansion::None },
            FeatureSpec { method: Method::Bm25, expansion: Expansion::Rm1 },
            FeatureSpec { method: Method::TfidfCs, expansion: Expansion::None },
            FeatureSpec { method: Method::TfidfCs, expansion: Expansion::Rocchio },
        ];
        if ex.glove.is_some() {
            out.push(FeatureSpec { method: Method::GloveCs, expansion: Expansion::None });
            out.push(FeatureSpec { method: Method::GloveCs, expansion: Expansion::Rocchio });
        }
        if ex.entity.is_some() {
            out.push(FeatureSpec { method: Method::EntityCs, expansion: Expansion::None });
            out.push(FeatureSpec { method: Method::EntityCs, expansion: Expansion::EntRm1 });
        }
        out
    }

    pub fn with_features(features: Vec<FeatureSpec>) -> Self {
        Self { candidates_k: DEFAULT_CANDIDATES, features, ltr_folds: 5, ca: CaConfig::default(), without: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRun {
    pub name: String,
    pub rankings: Vec<Ranking>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ablation {
    pub removed: Vec<String>,
    pub feature_names: Vec<String>,
    pub cv: CvResult,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub candidates: Vec<CandidateSet>,
    pub features: Vec<FeatureRun>,
    pub cv: CvResult,
    pub fused_metrics: MetricsReport,
    pub ablation: Option<Ablation>,
}

impl PipelineOutput {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Writes candidates, every feature run, the fused run, the fold report
    /// and a metrics table into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("runs"))?;
        write_candidates(&self.candidates, BufWriter::new(File::create(dir.join("candidates.tsv"))?))?;
        for f in &self.features {
            let path = dir.join("runs").join(format!("{}.run", f.name));
            RunFile::from_rankings(&f.rankings, &f.name).write(BufWriter::new(File::create(path)?))?;
        }
        RunFile::from_rankings(&self.cv.rankings, "fused").write(BufWriter::new(File::create(dir.join("fused.run"))?))?;
        self.cv.write_report(BufWriter::new(File::create(dir.join("folds.tsv"))?))?;

        let mut out = BufWriter::new(File::create(dir.join("metrics.tsv"))?);
        writeln!(out, "run\tmap\tR-prec\tmrr\tnum_q")?;
        let mut row = |name: &str, m: &MetricsReport| {
            writeln!(out, "{name}\t{:.6}\t{:.6}\t{:.6}\t{}", m.map, m.r_prec, m.mrr, m.evaluated())
        };
        for f in &self.features {
            row(&f.name, &f.metrics)?;
        }
        row("fused", &self.fused_metrics)?;
        if let Some(a) = &self.ablation {
            let name = format!("fused-without-{}", a.removed.join("-"));
            row(&name, &a.metrics)?;
            RunFile::from_rankings(&a.cv.rankings, &name)
                .write(BufWriter::new(File::create(dir.join("fused-ablated.run"))?))?;
            a.cv.write_report(BufWriter::new(File::create(dir.join("folds-ablated.tsv"))?))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn fuse(
    candidates: &[CandidateSet],
    runs: &[&[Ranking]],
    names: &[String],
    qrels: &Qrels,
    cfg: &PipelineConfig,
) -> Result<(CvResult, MetricsReport)> {
    let lookup: Vec<BTreeMap<&str, &Ranking>> =
        runs.iter().map(|r| r.iter().map(|x| (x.query_id.as_str(), x)).collect()).collect();
    let features: Vec<FeatureVector> = candidates
        .iter()
        .flat_map(|set| {
            let per_run: Vec<Option<&Ranking>> =
                lookup.iter().map(|m| m.get(set.query_id.as_str()).copied()).collect();
            assemble_features(&per_run, &set.query_id)
        })
        .collect();
    let cv = cross_validate(&features, qrels, names, cfg.ltr_folds, &cfg.ca).stage("learning to rank")?;
    let metrics = evaluate_run(&RunFile::from_rankings(&cv.rankings, "fused"), qrels);
    Ok((cv, metrics))
}

/// Keeps only the candidates of each query, dropping queries without a set.
fn restrict(rankings: Vec<Ranking>, candidates: &[CandidateSet]) -> Result<Vec<Ranking>> {
    let allowed: BTreeMap<&str, BTreeSet<&str>> = candidates
        .iter()
        .map(|s| (s.query_id.as_str(), s.paragraph_ids.iter().map(String::as_str).collect()))
        .collect();
    rankings
        .into_iter()
        .filter_map(|r| {
            let keep = allowed.get(r.query_id.as_str())?;
            let scored = r.entries().iter().filter(|e| keep.contains(e.id.as_str())).map(|e| (e.id.clone(), e.score));
            Some(Ranking::new(r.query_id.clone(), scored.collect()))
        })
        .collect()
}

/// Candidates, per-feature reranking, feature assembly, cross-validated
/// coordinate-ascent fusion and evaluation; then optionally the same fusion
/// without some features. `external` runs join as extra named features.
pub fn run_pipeline(
    ex: &Experiment,
    queries: &[HeadingQuery],
    qrels: &Qrels,
    candidates: Option<Vec<CandidateSet>>,
    external: Vec<(String, Vec<Ranking>)>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    if cfg.features.is_empty() && external.is_empty() {
        return Err(Error::InvalidArgument("the pipeline needs at least one feature".into()));
    }
    let candidates = match candidates {
        Some(c) => c,
        None => queries
            .par_iter()
            .map(|q| generate_candidates(ex.index(), q, cfg.candidates_k, ex.bm25))
            .collect::<Result<Vec<_>>>()
            .stage("candidate generation")?,
    };

    let mut features = Vec::new();
    for spec in &cfg.features {
        let rankings = ex.run(*spec, queries, Some(&candidates), 0).stage("feature scoring")?;
        features.push((spec.name(), rankings));
    }
    for (name, rankings) in external {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad external feature name {name:?}")));
        }
        features.push((name, restrict(rankings, &candidates)?));
    }
    let names: Vec<String> = features.iter().map(|f| f.0.clone()).collect();
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(Error::InvalidArgument(format!("feature {:?} listed twice", dup.1)));
    }
    let features: Vec<FeatureRun> = features
        .into_iter()
        .map(|(name, rankings)| {
            let metrics = evaluate_run(&RunFile::from_rankings(&rankings, &name), qrels);
            FeatureRun { name, rankings, metrics }
        })
        .collect();

    let runs: Vec<&[Ranking]> = features.iter().map(|f| f.rankings.as_slice()).collect();
    let (cv, fused_metrics) = fuse(&candidates, &runs, &names, qrels, cfg)?;

    let ablation = if cfg.without.is_empty() {
        None
    } else {
        if let Some(unknown) = cfg.without.iter().find(|w| !names.contains(w)) {
            return Err(Error::InvalidArgument(format!(
                "cannot ablate unknown feature {unknown:?}; features are {}",
                names.join(", ")
            )));
        }
        let keep: Vec<usize> = (0..names.len()).filter(|&i| !cfg.without.contains(&names[i])).collect();
        if keep.is_empty() {
            return Err(Error::InvalidArgument("ablation removes every feature".into()));
        }
        let kept_names: Vec<String> = keep.iter().map(|&i| names[i].clone()).collect();
        let kept_runs: Vec<&[Ranking]> = keep.iter().map(|&i| runs[i]).collect();
        let (cv, metrics) = fuse(&candidates, &kept_runs, &kept_names, qrels, cfg).stage("ablation")?;
        Some(Ablation { removed: cfg.without.clone(), feature_names: kept_names, cv, metrics })
    };
    Ok(PipelineOutput { candidates, features, cv, fused_metrics, ablation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_all_queries, derive_qrels};
    use crate::experiment::{ExpansionParams, Resources};
    use crate::index::{build_index, Bm25Params};
    use crate::synth::{generate, SynthConfig};
    use crate::TokenPipelineConfig;

    #[test]
    fn oracle_feature_dominates_and_ablation_hurts() {
        let data = generate(&SynthConfig::with_pages(12, 2)).unwrap();
        let ix = build_index(&data.corpus.texts(), &TokenPipelineConfig::default()).unwrap();
        let ex = Experiment::new(&data.corpus, &ix, Resources::default(), Bm25Params::default(), ExpansionParams::default(), 0)
            .unwrap();
        let queries = build_all_queries(&data.corpus, ix.analyzer());
        let qrels = derive_qrels(&data.corpus);
        // An external feature that scores exactly the relevant paragraphs.
        let oracle: Vec<Ranking> = queries
            .iter()
            .map(|q| {
                let rel = qrels.relevant(&q.query_id);
                let scored = data.corpus.paragraphs.keys().map(|p| (p.clone(), if rel.contains(p.as_str()) { 1.0 } else { 0.0 })).collect();
                Ranking::new(q.query_id.clone(), scored).unwrap()
            })
            .collect();
        let mut cfg = PipelineConfig::with_features(vec!["bm25".parse().unwrap(), "tfidf-cs".parse().unwrap()]);
        cfg.candidates_k = 30;
        cfg.ca = CaConfig { restarts: 2, iterations_per_restart: 5, ..CaConfig::default() };
        cfg.without = vec!["oracle".into()];
        let out = run_pipeline(&ex, &queries, &qrels, None, vec![("oracle".into(), oracle)], &cfg).unwrap();
        let best = out.features.iter().map(|f| f.metrics.map).fold(0.0, f64::max);
        assert!(out.fused_metrics.map >= best - 1e-12, "{} < {best}", out.fused_metrics.map);
        let ablated = out.ablation.as_ref().unwrap();
        assert!(ablated.metrics.map < out.fused_metrics.map);
        assert!(out.candidates.iter().all(|c| c.len() <= 30));

        cfg.without = vec!["nope".into()];
        assert!(run_pipeline(&ex, &queries, &qrels, None, Vec::new(), &cfg).is_err());
    }
}
