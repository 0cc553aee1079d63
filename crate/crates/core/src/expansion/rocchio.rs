use std::collections::BTreeMap;

use super::{check_lambda, ExpandedQuery, Feedback};
use crate::corpus::{Corpus, FoldAssignment, HeadingQuery};
use crate::error::{Error, Result};
use crate::semvec::{SpaceVector, Vectorizer};
use crate::textproc::heading_key;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SupportEntry {
    pub page_id: String,
    pub paragraph_id: String,
    pub fold: usize,
}

/// Normalized heading to the paragraphs filed under that heading in the
/// training folds, each list in ascending `(pageId, paragraphId)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingSupportIndex {
    held_out: usize,
    entries: BTreeMap<String, Vec<SupportEntry>>,
}

impl HeadingSupportIndex {
    pub fn held_out(&self) -> usize {
        self.held_out
    }

    pub fn lookup(&self, key: &str) -> &[SupportEntry] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Indexes every section heading of pages outside `held_out`. Headings that
/// normalize to nothing are skipped.
pub fn build_heading_support(
    corpus: &Corpus,
    folds: &FoldAssignment,
    held_out: usize,
) -> Result<HeadingSupportIndex> {
    if held_out >= folds.k {
        return Err(Error::InvalidArgument(format!(
            "held-out fold {held_out} outside 0..{}",
            folds.k
        )));
    }
    let mut entries: BTreeMap<String, Vec<SupportEntry>> = BTreeMap::new();
    for page in &corpus.pages {
        let fold = folds
            .fold_of(&page.id)
            .ok_or_else(|| Error::Integrity(format!("page {:?} has no fold", page.id)))?;
        if fold == held_out {
            continue;
        }
        for section in page.all_sections() {
            let key = heading_key(&section.heading);
            if key.is_empty() {
                continue;
            }
            let list = entries.entry(key).or_default();
            list.extend(section.paragraphs.iter().map(|pid| SupportEntry {
                page_id: page.id.clone(),
                paragraph_id: pid.clone(),
                fold,
            }));
        }
    }
    for list in entries.values_mut() {
        list.sort();
        list.dedup();
    }
    entries.retain(|_, list| !list.is_empty());
    Ok(HeadingSupportIndex { held_out, entries })
}

/// Expands the query with the centroid of up to `max_passages` paragraphs
/// filed under its (normalized) leaf heading in the training folds. Without
/// support the query comes back unexpanded.
pub fn rocchio_expand(
    query: &HeadingQuery,
    support: &HeadingSupportIndex,
    max_passages: usize,
    space: &dyn Vectorizer,
    lambda: f64,
) -> Result<ExpandedQuery> {
    if max_passages == 0 {
        return Err(Error::InvalidArgument("rocchio passage count must be at least 1".into()));
    }
    check_lambda(lambda)?;
    let chosen: Vec<&SupportEntry> =
        support.lookup(&heading_key(&query.heading)).iter().take(max_passages).collect();
    for e in &chosen {
        if e.fold == support.held_out() || e.page_id == query.page_id {
            return Err(Error::Integrity(format!(
                "support paragraph {:?} for query {:?} comes from the held-out fold",
                e.paragraph_id, query.query_id
            )));
        }
    }
    let vectors = chosen
        .iter()
        .map(|e| space.paragraph_vector(&e.paragraph_id).map(|v| v.into_owned()))
        .collect::<Result<Vec<SpaceVector>>>()?;
    let Some(centroid) = SpaceVector::centroid_of_normalized(&vectors)? else {
        return Ok(ExpandedQuery::unexpanded(query));
    };
    Ok(ExpandedQuery {
        original: query.clone(),
        feedback: Feedback::Passages {
            paragraph_ids: chosen.iter().map(|e| e.paragraph_id.clone()).collect(),
            centroid,
        },
        interpolation: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_queries, parse_corpus};
    use crate::index::build_index;
    use crate::semvec::{cosine, TfidfSpace};
    use crate::TokenPipelineConfig;

    const PAGES: &str = concat!(
        r#"{"id":"A","title":"Alpha","sections":[{"heading":"Demographics","paragraphs":[{"id":"a1","text":"census population growth"}]}]}"#,
        "\n",
        r#"{"id":"B","title":"Beta","sections":[{"heading":"Demographic","paragraphs":[{"id":"b1","text":"population ethnic census"},{"id":"b2","text":"religion census"}]}]}"#,
        "\n",
        r#"{"id":"C","title":"Gamma","sections":[{"heading":"History","paragraphs":[{"id":"c1","text":"war kingdom"}]}]}"#,
        "\n",
    );

    fn folds(pairs: &[(&str, usize)]) -> FoldAssignment {
        FoldAssignment { k: 2, mapping: pairs.iter().map(|(p, f)| (p.to_string(), *f)).collect() }
    }

    #[test]
    fn same_heading_pages_share_a_key() {
        let c = parse_corpus(PAGES.as_bytes()).unwrap();
        let s = build_heading_support(&c, &folds(&[("A", 1), ("B", 1), ("C", 0)]), 0).unwrap();
        let ids: Vec<&str> = s.lookup("demograph").iter().map(|e| e.paragraph_id.as_str()).collect();
        assert_eq!(ids, vec!["a1", "b1", "b2"]);
        assert!(s.lookup("histori").is_empty());
    }

    #[test]
    fn held_out_headings_absent() {
        let c = parse_corpus(PAGES.as_bytes()).unwrap();
        let s = build_heading_support(&c, &folds(&[("A", 0), ("B", 1), ("C", 0)]), 0).unwrap();
        assert!(s.lookup("histori").is_empty());
        assert_eq!(s.lookup("demograph").len(), 2);
    }

    #[test]
    fn expansion_takes_first_passages_and_raises_matching_candidate() {
        let c = parse_corpus(PAGES.as_bytes()).unwrap();
        let ix = build_index(&c.texts(), &TokenPipelineConfig::default()).unwrap();
        let s = build_heading_support(&c, &folds(&[("A", 0), ("B", 1), ("C", 1)]), 0).unwrap();
        let q = &build_queries(&c.pages[0], &TokenPipelineConfig::default())[0];
        let space = TfidfSpace::new(&ix);
        let e = rocchio_expand(q, &s, 1, &space, 0.5).unwrap();
        match &e.feedback {
            Feedback::Passages { paragraph_ids, .. } => assert_eq!(paragraph_ids, &vec!["b1".to_string()]),
            other => panic!("{other:?}"),
        }
        let plain = ExpandedQuery::unexpanded(q).vector(&space).unwrap();
        let expanded = e.vector(&space).unwrap();
        let b1 = space.paragraph_vector("b1").unwrap();
        assert!(cosine(&expanded, &b1).unwrap() > cosine(&plain, &b1).unwrap());
    }

    #[test]
    fn no_support_means_unexpanded() {
        let c = parse_corpus(PAGES.as_bytes()).unwrap();
        let ix = build_index(&c.texts(), &TokenPipelineConfig::default()).unwrap();
        let s = build_heading_support(&c, &folds(&[("A", 1), ("B", 1), ("C", 0)]), 0).unwrap();
        let q = &build_queries(&c.pages[2], &TokenPipelineConfig::default())[0];
        let e = rocchio_expand(q, &s, 5, &TfidfSpace::new(&ix), 0.5).unwrap();
        assert!(!e.is_expanded());
    }

    #[test]
    fn query_from_training_fold_is_rejected() {
        let c = parse_corpus(PAGES.as_bytes()).unwrap();
        let ix = build_index(&c.texts(), &TokenPipelineConfig::default()).unwrap();
        let s = build_heading_support(&c, &folds(&[("A", 1), ("B", 1), ("C", 0)]), 0).unwrap();
        let q = &build_queries(&c.pages[0], &TokenPipelineConfig::default())[0];
        assert!(matches!(
            rocchio_expand(q, &s, 5, &TfidfSpace::new(&ix), 0.5),
            Err(Error::Integrity(_))
        ));
    }
}
