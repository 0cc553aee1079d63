//! Candidate sets: the guaranteed-recall training and test environments, and
//! first-stage BM25 candidates over the whole collection.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use crate::corpus::{query_id, Corpus, HeadingQuery, Page, Section};
use crate::error::{Error, Result};
use crate::index::{retrieve_topk, Bm25Params, Bm25Scorer, Index};
use crate::rng;

pub const DEFAULT_CANDIDATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub neg_same_article: usize,
    pub neg_other_article: usize,
    pub seed: u64,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self { neg_same_article: 5, neg_other_article: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    TrueSection,
    SameArticle,
    OtherArticle,
    Retrieved,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::TrueSection => "true-section",
            Provenance::SameArticle => "same-article",
            Provenance::OtherArticle => "other-article",
            Provenance::Retrieved => "retrieved",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "true-section" => Provenance::TrueSection,
            "same-article" => Provenance::SameArticle,
            "other-article" => Provenance::OtherArticle,
            "retrieved" => Provenance::Retrieved,
            other => return Err(Error::InvalidArgument(format!("unknown provenance {other:?}"))),
        })
    }
}

/// Negatives that could not be drawn because a pool was too small.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Deficit {
    pub same_article: usize,
    pub other_article: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub query_id: String,
    pub paragraph_ids: Vec<String>,
    /// Parallel to `paragraph_ids`.
    pub provenance: Vec<Provenance>,
    pub deficit: Deficit,
}

impl CandidateSet {
    pub fn new(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            paragraph_ids: Vec::new(),
            provenance: Vec::new(),
            deficit: Deficit::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.paragraph_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraph_ids.is_empty()
    }

    pub fn count(&self, kind: Provenance) -> usize {
        self.provenance.iter().filter(|p| **p == kind).count()
    }

    fn push(&mut self, id: &str, kind: Provenance) {
        self.paragraph_ids.push(id.to_string());
        self.provenance.push(kind);
    }
}

/// Every paragraph attached to some page, deduplicated and sorted.
fn attached_paragraphs(corpus: &Corpus) -> Vec<&str> {
    let set: BTreeSet<&str> = corpus.pages.iter().flat_map(|p| p.paragraph_ids()).collect();
    set.into_iter().collect()
}

/// Uniform sample without replacement of `n` items of `pool` that are not in
/// `own`, or all of them if there are fewer.
fn sample_excluding<'a>(
    pool: &[&'a str],
    own: &BTreeSet<&str>,
    n: usize,
    rng: &mut rng::Rng,
) -> Vec<&'a str> {
    let own_in_pool = own.iter().filter(|id| pool.binary_search(id).is_ok()).count();
    let draw = (n + own_in_pool).min(pool.len());
    index::sample(rng, pool.len(), draw)
        .into_iter()
        .map(|i| pool[i])
        .filter(|id| !own.contains(id))
        .take(n)
        .collect()
}

fn sections_with_ids(page: &Page) -> Vec<(String, &Section)> {
    page.all_sections().into_iter().map(|s| (query_id(&page.id, &s.full_path()), s)).collect()
}

fn require_two_articles(corpus: &Corpus) -> Result<()> {
    if corpus.pages.len() < 2 {
        return Err(Error::InvalidArgument("an environment needs at least two articles".into()));
    }
    Ok(())
}

/// Per heading: its true paragraphs, then for each of them
/// `neg_same_article` paragraphs from other sections of the same article and
/// `neg_other_article` from other articles, sampled without replacement.
/// Shortfalls are recorded in the set's deficit. Output follows outline order.
pub fn build_train_env(corpus: &Corpus, spec: &EnvSpec) -> Result<Vec<CandidateSet>> {
    require_two_articles(corpus)?;
    let attached = attached_paragraphs(corpus);
    let work: Vec<(&Page, String, &Section)> = corpus
        .pages
        .iter()
        .flat_map(|p| sections_with_ids(p).into_iter().map(move |(q, s)| (p, q, s)))
        .collect();
    Ok(work
        .par_iter()
        .map(|(page, qid, section)| {
            let mut set = CandidateSet::new(qid.clone());
            let n_true = section.paragraphs.len();
            if n_true == 0 {
                return set;
            }
            let own: BTreeSet<&str> = page.paragraph_ids().into_iter().collect();
            let truth: BTreeSet<&str> = section.paragraphs.iter().map(String::as_str).collect();
            let same_pool: Vec<&str> = own.difference(&truth).copied().collect();
            let mut rng = rng::derived(spec.seed, &format!("train\u{0}{qid}"));

            for id in &section.paragraphs {
                set.push(id, Provenance::TrueSection);
            }
            let want_same = n_true * spec.neg_same_article;
            let same = sample_excluding(&same_pool, &BTreeSet::new(), want_same, &mut rng);
            set.deficit.same_article = want_same - same.len();
            for id in same {
                set.push(id, Provenance::SameArticle);
            }
            let want_other = n_true * spec.neg_other_article;
            let other = sample_excluding(&attached, &own, want_other, &mut rng);
            set.deficit.other_article = want_other - other.len();
            for id in other {
                set.push(id, Provenance::OtherArticle);
            }
            set
        })
        .collect())
}

/// Per heading: every paragraph of the article plus as many from other
/// articles, in a seeded random order.
pub fn build_test_env(corpus: &Corpus, seed: u64) -> Result<Vec<CandidateSet>> {
    require_two_articles(corpus)?;
    let attached = attached_paragraphs(corpus);
    let work: Vec<(&Page, String, &Section)> = corpus
        .pages
        .iter()
        .flat_map(|p| sections_with_ids(p).into_iter().map(move |(q, s)| (p, q, s)))
        .collect();
    Ok(work
        .par_iter()
        .map(|(page, qid, section)| {
            let mut rng = rng::derived(seed, &format!("test\u{0}{qid}"));
            let article = page.paragraph_ids();
            let own: BTreeSet<&str> = article.iter().copied().collect();
            let truth: BTreeSet<&str> = section.paragraphs.iter().map(String::as_str).collect();
            let mut rows: Vec<(&str, Provenance)> = own
                .iter()
                .map(|id| {
                    let kind = if truth.contains(id) { Provenance::TrueSection } else { Provenance::SameArticle };
                    (*id, kind)
                })
                .collect();
            let other = sample_excluding(&attached, &own, own.len(), &mut rng);
            let mut set = CandidateSet::new(qid.clone());
            set.deficit.other_article = own.len() - other.len();
            rows.extend(other.into_iter().map(|id| (id, Provenance::OtherArticle)));
            rows.shuffle(&mut rng);
            for (id, kind) in rows {
                set.push(id, kind);
            }
            set
        })
        .collect())
}

/// Top `k` paragraphs for the query under BM25, in rank order.
pub fn generate_candidates(
    ix: &Index,
    query: &HeadingQuery,
    k: usize,
    params: Bm25Params,
) -> Result<CandidateSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("candidate count must be at least 1".into()));
    }
    let scorer = Bm25Scorer::from_tokens(ix, &query.terms, params);
    let ranking = retrieve_topk(ix, &scorer, &query.query_id, k);
    let mut set = CandidateSet::new(query.query_id.clone());
    for e in ranking.entries() {
        set.push(&e.id, Provenance::Retrieved);
    }
    Ok(set)
}

/// `queryId<TAB>paragraphId<TAB>provenance` rows, sets in the given order.
pub fn write_candidates<W: Write>(sets: &[CandidateSet], mut out: W) -> Result<()> {
    for set in sets {
        for (id, kind) in set.paragraph_ids.iter().zip(&set.provenance) {
            writeln!(out, "{}\t{id}\t{kind}", set.query_id)?;
        }
    }
    Ok(())
}

/// Reads candidate rows back, keeping first-appearance query order and row
/// order within each query.
pub fn read_candidates<R: BufRead>(reader: R) -> Result<Vec<CandidateSet>> {
    let mut sets: Vec<CandidateSet> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(lineno, "expected queryId<TAB>paragraphId<TAB>provenance"));
        }
        let kind: Provenance = fields[2].parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let slot = *position.entry(fields[0].to_string()).or_insert_with(|| {
            sets.push(CandidateSet::new(fields[0]));
            sets.len() - 1
        });
        if !seen.entry(fields[0].to_string()).or_default().insert(fields[1].to_string()) {
            return Err(Error::parse(
                lineno,
                format!("duplicate candidate {:?} for query {:?}", fields[1], fields[0]),
            ));
        }
        sets[slot].push(fields[1], kind);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{derive_qrels, parse_corpus};

    fn page(id: &str, sections: &[(&str, usize)]) -> String {
        let secs: Vec<String> = sections
            .iter()
            .map(|(h, n)| {
                let paras: Vec<String> = (0..*n)
                    .map(|i| format!(r#"{{"id":"{id}-{h}-{i}","text":"text {id} {h} {i}"}}"#))
                    .collect();
                format!(r#"{{"heading":"{h}","paragraphs":[{}]}}"#, paras.join(","))
            })
            .collect();
        format!(r#"{{"id":"{id}","title":"{id}","sections":[{}]}}"#, secs.join(","))
    }

    fn corpus(pages: &[String]) -> Corpus {
        parse_corpus(pages.join("\n").as_bytes()).unwrap()
    }

    fn big() -> Corpus {
        corpus(&[
            page("A", &[("One", 2), ("Two", 6), ("Three", 6)]),
            page("B", &[("One", 8), ("Two", 8)]),
            page("C", &[("Solo", 12)]),
        ])
    }

    #[test]
    fn train_env_counts() {
        let c = big();
        let sets = build_train_env(&c, &EnvSpec::default()).unwrap();
        let a_one = &sets[0];
        assert_eq!(a_one.query_id, "A/One");
        assert_eq!(a_one.len(), 22);
        assert_eq!(a_one.count(Provenance::TrueSection), 2);
        assert_eq!(a_one.count(Provenance::SameArticle), 10);
        assert_eq!(a_one.count(Provenance::OtherArticle), 10);
        assert!(a_one.paragraph_ids[12..].iter().all(|p| !p.starts_with("A-")));
        let unique: BTreeSet<&String> = a_one.paragraph_ids.iter().collect();
        assert_eq!(unique.len(), a_one.len());
    }

    #[test]
    fn train_env_recall_and_deficit() {
        let c = big();
        let qrels = derive_qrels(&c);
        let sets = build_train_env(&c, &EnvSpec::default()).unwrap();
        for set in &sets {
            for p in qrels.relevant(&set.query_id) {
                assert!(set.paragraph_ids.iter().any(|x| x == p));
            }
        }
        let solo = sets.iter().find(|s| s.query_id == "C/Solo").unwrap();
        assert_eq!(solo.count(Provenance::SameArticle), 0);
        assert_eq!(solo.deficit.same_article, 60);
        assert_eq!(solo.count(Provenance::OtherArticle), 30);
        assert_eq!(solo.deficit.other_article, 30);
    }

    #[test]
    fn train_env_deterministic() {
        let c = big();
        let spec = EnvSpec { seed: 7, ..EnvSpec::default() };
        assert_eq!(build_train_env(&c, &spec).unwrap(), build_train_env(&c, &spec).unwrap());
        let other = EnvSpec { seed: 8, ..EnvSpec::default() };
        assert_ne!(build_train_env(&c, &spec).unwrap(), build_train_env(&c, &other).unwrap());
    }

    #[test]
    fn test_env_doubles_article() {
        let c = big();
        let sets = build_test_env(&c, 3).unwrap();
        let c_solo = sets.iter().find(|s| s.query_id == "C/Solo").unwrap();
        assert_eq!(c_solo.len(), 24);
        assert_eq!(c_solo.count(Provenance::TrueSection), 12);
        for s in sets.iter().filter(|s| s.query_id.starts_with("A/")) {
            assert_eq!(s.len(), 28);
        }
        assert_eq!(sets, build_test_env(&c, 3).unwrap());
    }

    #[test]
    fn single_article_rejected() {
        let c = corpus(&[page("A", &[("One", 2)])]);
        assert!(build_train_env(&c, &EnvSpec::default()).is_err());
    }

    #[test]
    fn candidate_file_round_trip() {
        let c = big();
        let sets = build_train_env(&c, &EnvSpec::default()).unwrap();
        let mut buf = Vec::new();
        write_candidates(&sets, &mut buf).unwrap();
        let back = read_candidates(buf.as_slice()).unwrap();
        let nonempty: Vec<&CandidateSet> = sets.iter().filter(|s| !s.is_empty()).collect();
        assert_eq!(back.len(), nonempty.len());
        for (a, b) in back.iter().zip(nonempty) {
            assert_eq!((&a.paragraph_ids, &a.provenance), (&b.paragraph_ids, &b.provenance));
        }
        assert!(read_candidates("q\ta\tretrieved\nq\ta\tretrieved\n".as_bytes()).is_err());
        assert!(read_candidates("q\ta\tbogus\n".as_bytes()).is_err());
    }
}
