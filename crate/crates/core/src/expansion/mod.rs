//! Query expansion: relevance-model term and entity feedback, and Rocchio
//! expansion with paragraphs filed under the same heading in other articles.

mod rm;
mod rocchio;

pub use rm::{relevance_model, rm1_entities, rm1_terms, FeedbackDoc};
pub use rocchio::{build_heading_support, rocchio_expand, HeadingSupportIndex, SupportEntry};

use std::collections::BTreeMap;

use crate::corpus::HeadingQuery;
use crate::error::{Error, Result};
use crate::index::{Index, TermId};
use crate::semvec::{SpaceVector, Vectorizer};
use crate::textproc::Token;

pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTerm {
    pub term: Token,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEntity {
    pub entity_id: String,
    pub weight: f64,
}

/// What an expanded query adds to the original.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    None,
    Terms(Vec<WeightedTerm>),
    Entities(Vec<WeightedEntity>),
    /// Supporting paragraphs and the centroid of their normalized vectors.
    Passages { paragraph_ids: Vec<String>, centroid: SpaceVector },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedQuery {
    pub original: HeadingQuery,
    pub feedback: Feedback,
    /// Weight of the original query, `λ`.
    pub interpolation: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must be in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Original query terms plus relevance-model terms, mixed with `λ`.
pub fn expand_rm3(query: &HeadingQuery, terms: Vec<WeightedTerm>, lambda: f64) -> Result<ExpandedQuery> {
    check_lambda(lambda)?;
    Ok(ExpandedQuery { original: query.clone(), feedback: Feedback::Terms(terms), interpolation: lambda })
}

/// Original query plus relevance-model entities, mixed with `λ`.
pub fn expand_entities(
    query: &HeadingQuery,
    entities: Vec<WeightedEntity>,
    lambda: f64,
) -> Result<ExpandedQuery> {
    check_lambda(lambda)?;
    Ok(ExpandedQuery {
        original: query.clone(),
        feedback: Feedback::Entities(entities),
        interpolation: lambda,
    })
}

impl ExpandedQuery {
    pub fn unexpanded(query: &HeadingQuery) -> Self {
        Self { original: query.clone(), feedback: Feedback::None, interpolation: 1.0 }
    }

    pub fn is_expanded(&self) -> bool {
        match &self.feedback {
            Feedback::None => false,
            Feedback::Terms(t) => !t.is_empty(),
            Feedback::Entities(e) => !e.is_empty(),
            Feedback::Passages { paragraph_ids, .. } => !paragraph_ids.is_empty(),
        }
    }

    fn feedback_terms(&self, ix: &Index) -> Vec<(TermId, f64)> {
        match &self.feedback {
            Feedback::Terms(terms) => {
                terms.iter().filter_map(|w| ix.term_id(&w.term).map(|t| (t, w.weight))).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Per-term weights for a weighted lexical scorer: `λ` spread uniformly
    /// over original term occurrences plus `1 - λ` times each feedback weight.
    /// Zero-weight terms are left out.
    pub fn term_weights(&self, ix: &Index) -> Result<Vec<(TermId, f64)>> {
        if matches!(self.feedback, Feedback::Entities(_) | Feedback::Passages { .. }) {
            return Err(Error::SpaceMismatch(
                "entity and passage feedback cannot be turned into term weights".into(),
            ));
        }
        let lambda = self.interpolation;
        let mut weights: BTreeMap<TermId, f64> = BTreeMap::new();
        let n = self.original.terms.len() as f64;
        for tok in &self.original.terms {
            if let Some(t) = ix.term_id(tok) {
                *weights.entry(t).or_insert(0.0) += lambda / n;
            }
        }
        for (t, w) in self.feedback_terms(ix) {
            *weights.entry(t).or_insert(0.0) += (1.0 - lambda) * w;
        }
        Ok(weights.into_iter().filter(|&(_, w)| w > 0.0).collect())
    }

    /// Documents matching any of these terms form the full-index candidate
    /// pool: original query terms, plus feedback terms when they carry weight.
    pub fn pool_terms(&self, ix: &Index) -> Vec<TermId> {
        let mut pool: Vec<TermId> = self.original.terms.iter().filter_map(|t| ix.term_id(t)).collect();
        if self.interpolation < 1.0 {
            pool.extend(self.feedback_terms(ix).into_iter().map(|(t, _)| t));
        }
        pool.sort_unstable();
        pool.dedup();
        pool
    }

    /// `λ·norm(v(original)) + (1 - λ)·norm(v(feedback))` in the given space.
    /// Without usable feedback the original vector is returned unchanged.
    pub fn vector(&self, space: &dyn Vectorizer) -> Result<SpaceVector> {
        let base = space.query_vector(&self.original)?;
        let fb = match &self.feedback {
            Feedback::None => return Ok(base),
            Feedback::Terms(_) => space.terms_vector(&self.feedback_terms(space.index()))?,
            Feedback::Entities(entities) => {
                let pairs: Vec<(&str, f64)> =
                    entities.iter().map(|e| (e.entity_id.as_str(), e.weight)).collect();
                space.entities_vector(&pairs)?
            }
            Feedback::Passages { centroid, .. } => centroid.clone(),
        };
        if fb.norm() == 0.0 {
            return Ok(base);
        }
        let lambda = self.interpolation;
        base.normalized().mix(lambda, &fb.normalized(), 1.0 - lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::plain_index;
    use crate::semvec::TfidfSpace;

    fn query(terms: &str) -> HeadingQuery {
        HeadingQuery {
            query_id: "P/H".into(),
            page_id: "P".into(),
            heading: "H".into(),
            raw_text: terms.into(),
            terms: terms.split_whitespace().map(String::from).collect(),
        }
    }

    fn wt(term: &str, weight: f64) -> WeightedTerm {
        WeightedTerm { term: term.into(), weight }
    }

    #[test]
    fn rm3_weights_mix() {
        let ix = plain_index(&[("d1", "a b"), ("d2", "b c")]);
        let e = expand_rm3(&query("a b"), vec![wt("b", 0.75), wt("c", 0.25)], 0.5).unwrap();
        let w: BTreeMap<TermId, f64> = e.term_weights(&ix).unwrap().into_iter().collect();
        let id = |s| ix.term_id(s).unwrap();
        assert!((w[&id("a")] - 0.25).abs() < 1e-12);
        // shared term exceeds either component alone
        assert!((w[&id("b")] - (0.25 + 0.375)).abs() < 1e-12);
        assert!(w[&id("b")] > 0.5 * 0.75 && w[&id("b")] > w[&id("a")]);
        assert!((w[&id("c")] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn lambda_one_keeps_original_pool_and_vector() {
        let ix = plain_index(&[("d1", "a b"), ("d2", "b c"), ("d3", "d")]);
        let q = query("a");
        let e = expand_rm3(&q, vec![wt("c", 1.0)], 1.0).unwrap();
        assert_eq!(e.pool_terms(&ix), vec![ix.term_id("a").unwrap()]);
        let space = TfidfSpace::new(&ix);
        let plain = ExpandedQuery::unexpanded(&q).vector(&space).unwrap();
        assert_eq!(e.vector(&space).unwrap(), plain.normalized());
    }

    #[test]
    fn lambda_zero_is_feedback_only() {
        let ix = plain_index(&[("d1", "a b"), ("d2", "b c"), ("d3", "d")]);
        let e = expand_rm3(&query("a"), vec![wt("c", 1.0)], 0.0).unwrap();
        let w = e.term_weights(&ix).unwrap();
        assert_eq!(w, vec![(ix.term_id("c").unwrap(), 1.0)]);
    }

    #[test]
    fn bad_lambda() {
        assert!(expand_rm3(&query("a"), vec![], 1.5).is_err());
    }
}
