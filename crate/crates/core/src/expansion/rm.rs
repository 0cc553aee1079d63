use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use super::{WeightedEntity, WeightedTerm};
use crate::corpus::{HeadingQuery, TextSource};
use crate::error::{Error, Result};
use crate::index::{retrieve_topk, DocNum, Index, LmScorer, TermId};
use crate::semvec::EntityLinker;

/// A feedback paragraph and its query likelihood `P(q|d)`, normalized over the
/// feedback set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackDoc {
    pub doc: DocNum,
    pub p_query: f64,
}

fn check_counts(fb_docs: usize, fb_items: usize) -> Result<()> {
    if fb_docs == 0 || fb_items == 0 {
        return Err(Error::InvalidArgument("feedback document and term counts must be at least 1".into()));
    }
    Ok(())
}

/// Top `fb_docs` paragraphs by Dirichlet query likelihood, with
/// `P(q|d) = exp(score)` normalized to sum to one.
fn feedback_docs(ix: &Index, query: &HeadingQuery, fb_docs: usize, mu: f64) -> Result<Vec<FeedbackDoc>> {
    let scorer = LmScorer::from_tokens(ix, &query.terms, mu)?;
    let ranking = retrieve_topk(ix, &scorer, &query.query_id, fb_docs);
    let Some(max) = ranking.entries().first().map(|e| e.score) else {
        return Ok(Vec::new());
    };
    let raw: Vec<(DocNum, f64)> = ranking
        .entries()
        .iter()
        .map(|e| (ix.doc_num(&e.id).expect("ranked ids come from the index"), (e.score - max).exp()))
        .collect();
    let z: f64 = raw.iter().map(|r| r.1).sum();
    Ok(raw.into_iter().map(|(doc, p)| FeedbackDoc { doc, p_query: p / z }).collect())
}

/// Keeps the `n` heaviest items (ties by key) and rescales them to sum to one.
fn top_normalized<K: Ord + Clone>(weights: BTreeMap<K, f64>, n: usize) -> Vec<(K, f64)> {
    let mut items: Vec<(K, f64)> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    items.truncate(n);
    let z: f64 = items.iter().map(|i| i.1).sum();
    items.into_iter().map(|(k, w)| (k, w / z)).collect()
}

/// Relevance-model estimate `P(t|R) ∝ Σ_d P(t|d)·P(q|d)` with maximum-likelihood
/// `P(t|d) = tf / len`. Terms in `exclude` are never returned.
pub fn relevance_model(
    ix: &Index,
    feedback: &[FeedbackDoc],
    exclude: &BTreeSet<TermId>,
    fb_terms: usize,
) -> Vec<WeightedTerm> {
    let mut weights: BTreeMap<TermId, f64> = BTreeMap::new();
    for fd in feedback {
        let len = f64::from(ix.doc_len(fd.doc));
        if len == 0.0 {
            continue;
        }
        for &(t, tf) in ix.doc_terms(fd.doc) {
            if !exclude.contains(&t) {
                *weights.entry(t).or_insert(0.0) += f64::from(tf) / len * fd.p_query;
            }
        }
    }
    // term ids follow lexical order, so id ties break alphabetically
    top_normalized(weights, fb_terms)
        .into_iter()
        .map(|(t, weight)| WeightedTerm { term: ix.term(t).to_string(), weight })
        .collect()
}

/// RM1 expansion terms from the top `fb_docs` query-likelihood paragraphs,
/// excluding the query's own terms. Empty when nothing matches the query.
pub fn rm1_terms(
    ix: &Index,
    query: &HeadingQuery,
    fb_docs: usize,
    fb_terms: usize,
    mu: f64,
) -> Result<Vec<WeightedTerm>> {
    check_counts(fb_docs, fb_terms)?;
    let feedback = feedback_docs(ix, query, fb_docs, mu)?;
    let exclude: BTreeSet<TermId> = query.terms.iter().filter_map(|t| ix.term_id(t)).collect();
    Ok(relevance_model(ix, &feedback, &exclude, fb_terms))
}

/// Entity feedback: `weight(e) ∝ Σ_d freq(e, d)·P(q|d)` over the linked
/// feedback paragraphs, top `fb_entities` rescaled to sum to one. A paragraph
/// the linker fails on contributes nothing.
pub fn rm1_entities(
    ix: &Index,
    texts: &dyn TextSource,
    query: &HeadingQuery,
    linker: &dyn EntityLinker,
    fb_docs: usize,
    fb_entities: usize,
    mu: f64,
) -> Result<Vec<WeightedEntity>> {
    check_counts(fb_docs, fb_entities)?;
    let feedback = feedback_docs(ix, query, fb_docs, mu)?;
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for fd in &feedback {
        let id = ix.doc_id(fd.doc);
        let text = texts.paragraph_text(id).ok_or_else(|| Error::UnknownParagraph(id.to_string()))?;
        match linker.link(text) {
            Ok(mentions) => {
                for m in mentions {
                    *weights.entry(m.entity_id).or_insert(0.0) += m.count as f64 * fd.p_query;
                }
            }
            Err(e) => warn!("query {}: skipping feedback paragraph {id}: {e}", query.query_id),
        }
    }
    Ok(top_normalized(weights, fb_entities)
        .into_iter()
        .map(|(entity_id, weight)| WeightedEntity { entity_id, weight })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::plain_index;
    use crate::semvec::{EntityMention, GazetteerLinker, LinkerError};

    fn query(terms: &str) -> HeadingQuery {
        HeadingQuery {
            query_id: "P/H".into(),
            page_id: "P".into(),
            heading: "H".into(),
            raw_text: terms.into(),
            terms: terms.split_whitespace().map(String::from).collect(),
        }
    }

    #[test]
    fn single_document_model() {
        let ix = plain_index(&[("d1", "x x y")]);
        let fb = [FeedbackDoc { doc: 0, p_query: 1.0 }];
        let terms = relevance_model(&ix, &fb, &BTreeSet::new(), 10);
        assert_eq!(terms[0].term, "x");
        assert!((terms[0].weight - 2.0 / 3.0).abs() < 1e-12);
        assert!((terms[1].weight - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn query_terms_excluded() {
        let ix = plain_index(&[("d1", "q x x y"), ("d2", "z")]);
        let terms = rm1_terms(&ix, &query("q"), 1, 10, 1500.0).unwrap();
        let got: Vec<(&str, f64)> = terms.iter().map(|t| (t.term.as_str(), t.weight)).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, "x");
        assert!((got[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((got[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_matches() {
        let ix = plain_index(&[("d1", "a b")]);
        assert!(rm1_terms(&ix, &query("zzz"), 10, 10, 1500.0).unwrap().is_empty());
        assert!(rm1_terms(&ix, &query("a"), 0, 10, 1500.0).is_err());
    }

    #[test]
    fn feedback_truncates_and_sums_to_one() {
        let ix = plain_index(&[("d1", "q a b c d e"), ("d2", "q q f g"), ("d3", "h")]);
        let terms = rm1_terms(&ix, &query("q"), 10, 3, 1500.0).unwrap();
        assert_eq!(terms.len(), 3);
        assert!((terms.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(terms.windows(2).all(|w| w[0].weight >= w[1].weight));
    }

    #[test]
    fn entity_feedback_counts() {
        let ix = plain_index(&[("d1", "q paris paris london")]);
        let mut g = GazetteerLinker::new();
        g.insert("paris", "E");
        g.insert("london", "F");
        let texts = crate::index::tests::docs(&[("d1", "q paris paris london")]);
        let ents = rm1_entities(&ix, &texts, &query("q"), &g, 1, 10, 1500.0).unwrap();
        assert_eq!(ents[0].entity_id, "E");
        assert!((ents[0].weight - 2.0 / 3.0).abs() < 1e-12);
        assert!((ents[1].weight - 1.0 / 3.0).abs() < 1e-12);
    }

    struct Down;

    impl EntityLinker for Down {
        fn link(&self, _text: &str) -> std::result::Result<Vec<EntityMention>, LinkerError> {
            Err(LinkerError::Unavailable("offline".into()))
        }
    }

    #[test]
    fn linker_failure_is_not_fatal() {
        let ix = plain_index(&[("d1", "q a")]);
        let texts = crate::index::tests::docs(&[("d1", "q a")]);
        assert!(rm1_entities(&ix, &texts, &query("q"), &Down, 1, 10, 1500.0).unwrap().is_empty());
    }
}
