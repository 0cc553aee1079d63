use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredParagraph {
    pub id: String,
    pub score: f64,
}

/// Scored paragraphs for one query, ordered by score descending and then by
/// paragraph id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    entries: Vec<ScoredParagraph>,
}

pub(crate) fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

impl Ranking {
    /// Sorts into ranking order. Duplicate ids and non-finite scores are
    /// rejected.
    pub fn new(query_id: impl Into<String>, scored: Vec<(String, f64)>) -> Result<Self> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(scored.len());
        for (id, score) in &scored {
            if !score.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite score for {id:?} in query {query_id:?}"
                )));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Integrity(format!(
                    "paragraph {id:?} appears twice in query {query_id:?}"
                )));
            }
        }
        let mut entries: Vec<ScoredParagraph> =
            // `+ 0.0` folds -0.0 into 0.0 so total_cmp treats them as equal.
            scored.into_iter().map(|(id, score)| ScoredParagraph { id, score: score + 0.0 }).collect();
        entries.sort_by(|a, b| rank_order(a.score, &a.id, b.score, &b.id));
        Ok(Ranking { query_id, entries })
    }

    /// Entries already sorted and validated by the caller.
    pub(crate) fn from_sorted(query_id: String, entries: Vec<ScoredParagraph>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].id, w[1].score, &w[1].id) == Ordering::Less));
        Ranking { query_id, entries }
    }

    pub fn empty(query_id: impl Into<String>) -> Self {
        Ranking { query_id: query_id.into(), entries: Vec::new() }
    }

    pub fn entries(&self) -> &[ScoredParagraph] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.score)
    }
}
