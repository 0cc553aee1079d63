//! Binary-relevance ranking metrics, TREC run files and paired significance
//! testing.

mod run;
mod ttest;

pub use run::{RunFile, RunRow};
pub use ttest::{paired_t_test, TTestResult};

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::corpus::Qrels;
use crate::error::Result;

/// Mean over relevant items of precision at each relevant item's rank.
/// Relevant items never retrieved contribute zero. `None` if nothing is
/// relevant.
pub fn average_precision(ranked: &[&str], relevant: &BTreeSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranked.iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Fraction of the top `R = |relevant|` positions holding relevant items.
/// A ranking shorter than `R` counts its missing slots as misses.
pub fn r_precision(ranked: &[&str], relevant: &BTreeSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let r = relevant.len();
    let hits = ranked.iter().take(r).filter(|id| relevant.contains(*id)).count();
    Some(hits as f64 / r as f64)
}

pub fn reciprocal_rank(ranked: &[&str], relevant: &BTreeSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(
        ranked
            .iter()
            .position(|id| relevant.contains(id))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryMetrics {
    pub ap: f64,
    pub r_prec: f64,
    pub rr: f64,
}

pub fn query_metrics(ranked: &[&str], relevant: &BTreeSet<&str>) -> Option<QueryMetrics> {
    Some(QueryMetrics {
        ap: average_precision(ranked, relevant)?,
        r_prec: r_precision(ranked, relevant)?,
        rr: reciprocal_rank(ranked, relevant)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub map: f64,
    pub r_prec: f64,
    pub mrr: f64,
    /// Queries in the run or qrels without a single relevant paragraph.
    pub skipped_no_positives: usize,
    /// Evaluated queries absent from the run; they score zero.
    pub missing_from_run: usize,
}

impl MetricsReport {
    pub fn evaluated(&self) -> usize {
        self.per_query.len()
    }

    pub fn ap_by_query(&self) -> BTreeMap<String, f64> {
        self.per_query.iter().map(|(q, m)| (q.clone(), m.ap)).collect()
    }

    /// `metric<TAB>value` rows, then optionally `query<TAB>AP<TAB>RPrec<TAB>RR`
    /// rows after a `# per-query` marker.
    pub fn write<W: Write>(&self, mut out: W, per_query: bool) -> Result<()> {
        writeln!(out, "map\t{:.6}", self.map)?;
        writeln!(out, "R-prec\t{:.6}", self.r_prec)?;
        writeln!(out, "mrr\t{:.6}", self.mrr)?;
        writeln!(out, "num_q\t{}", self.evaluated())?;
        writeln!(out, "num_skipped_no_rel\t{}", self.skipped_no_positives)?;
        writeln!(out, "num_missing_from_run\t{}", self.missing_from_run)?;
        if per_query {
            writeln!(out, "# per-query")?;
            for (q, m) in &self.per_query {
                writeln!(out, "{q}\t{:.6}\t{:.6}\t{:.6}", m.ap, m.r_prec, m.rr)?;
            }
        }
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates each query that has at least one relevant paragraph in `qrels`.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels) -> MetricsReport {
    let ranked = run.ranked_ids();
    let mut all_queries: BTreeSet<&str> = qrels.query_ids().collect();
    all_queries.extend(ranked.keys().map(String::as_str));

    let mut per_query = BTreeMap::new();
    let mut skipped = 0;
    let mut missing = 0;
    for q in all_queries {
        let relevant = qrels.relevant(q);
        if relevant.is_empty() {
            skipped += 1;
            continue;
        }
        let ids: Vec<&str> = match ranked.get(q) {
            Some(list) => list.iter().map(String::as_str).collect(),
            None => {
                missing += 1;
                Vec::new()
            }
        };
        let m = query_metrics(&ids, &relevant).expect("non-empty relevant set");
        per_query.insert(q.to_string(), m);
    }
    MetricsReport {
        map: mean(per_query.values().map(|m| m.ap)),
        r_prec: mean(per_query.values().map(|m| m.r_prec)),
        mrr: mean(per_query.values().map(|m| m.rr)),
        per_query,
        skipped_no_positives: skipped,
        missing_from_run: missing,
    }
}
