//! Invariants checked over generated inputs.

use std::collections::{BTreeMap, BTreeSet};

use outline_core::corpus::{assign_folds, build_all_queries, derive_qrels, query_id, HeadingQuery};
use outline_core::envgen::{build_test_env, build_train_env, EnvSpec, Provenance};
use outline_core::evaluation::{average_precision, evaluate_run, r_precision, reciprocal_rank};
use outline_core::expansion::{expand_rm3, rm1_terms};
use outline_core::experiment::{ExpansionParams, Experiment, Resources};
use outline_core::index::{
    bm25_score, build_index, doc_tfidf_vector, retrieve_topk, Bm25Params, Bm25Scorer, Index, SparseVector,
};
use outline_core::ltr::{
    assemble_features, cross_validate, single_feature_maps, train_coordinate_ascent, CaConfig, LinearModel,
};
use outline_core::semvec::{dense_cosine, DenseVector};
use outline_core::synth::{generate, SynthConfig};
use outline_core::textproc::heading_key;
use outline_core::{Qrels, Ranking, RunFile, TokenPipelineConfig};
use proptest::prelude::*;

const WORDS: [&str; 8] = ["amber", "birch", "cedar", "delta", "ember", "fjord", "gorse", "heath"];

fn docs_strategy() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..WORDS.len(), 1..12), 2..10)
}

fn index_of(docs: &[Vec<usize>]) -> Index {
    let texts: BTreeMap<String, String> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (format!("d{i:02}"), d.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ")))
        .collect();
    build_index(&texts, &TokenPipelineConfig::plain()).unwrap()
}

fn tokens(words: &[usize]) -> Vec<String> {
    words.iter().map(|&w| WORDS[w].to_string()).collect()
}

fn heading_query(terms: Vec<String>) -> HeadingQuery {
    HeadingQuery {
        query_id: "q".into(),
        page_id: "p".into(),
        heading: terms.join(" "),
        raw_text: terms.join(" "),
        terms,
    }
}

fn sparse_strategy() -> impl Strategy<Value = SparseVector> {
    prop::collection::vec((0u32..20, -5.0f64..5.0), 0..10).prop_map(SparseVector::from_entries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tfidf_doc_vectors_are_unit_or_zero(docs in docs_strategy()) {
        let ix = index_of(&docs);
        for d in 0..ix.n_docs() {
            let n = doc_tfidf_vector(&ix, d as _).norm();
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9, "norm {n}");
        }
    }

    #[test]
    fn bm25_increases_with_tf_at_fixed_length(len in 2usize..20, a in 1usize..20, b in 0usize..20, others in docs_strategy()) {
        let (hi, lo) = (a.max(b).min(len), a.min(b).min(len));
        prop_assume!(hi > lo);
        // "amber" is the query; "heath" pads both documents to the same length.
        let doc = |tf: usize| [vec![0; tf], vec![7; len - tf]].concat();
        let mut docs = vec![doc(hi), doc(lo)];
        docs.extend(others);
        let ix = index_of(&docs);
        let q = tokens(&[0]);
        let s_hi = bm25_score(&ix, &q, "d00", Bm25Params::default()).unwrap();
        let s_lo = bm25_score(&ix, &q, "d01", Bm25Params::default()).unwrap();
        prop_assert!(s_hi > s_lo, "{s_hi} <= {s_lo}");
    }

    #[test]
    fn topk_matches_brute_force(docs in docs_strategy(), q in prop::collection::vec(0..WORDS.len(), 1..4), k in 1usize..12) {
        let ix = index_of(&docs);
        let q = tokens(&q);
        let got = retrieve_topk(&ix, &Bm25Scorer::from_tokens(&ix, &q, Bm25Params::default()), "q", k);
        let mut want: Vec<(String, f64)> = (0..docs.len())
            .map(|i| format!("d{i:02}"))
            .filter(|id| ix.tokenize(&index_text(&docs, id)).iter().any(|t| q.contains(t)))
            .map(|id| {
                let s = bm25_score(&ix, &q, &id, Bm25Params::default()).unwrap();
                (id, s)
            })
            .collect();
        want.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        want.truncate(k);
        let got: Vec<(String, f64)> = got.entries().iter().map(|e| (e.id.clone(), e.score)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn sparse_cosine_is_symmetric_bounded_and_scale_free(x in sparse_strategy(), y in sparse_strategy(), c in 0.01f64..100.0) {
        let xy = x.cosine(&y);
        prop_assert!((xy - y.cosine(&x)).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&xy));
        prop_assert!((x.scaled(c).cosine(&y) - xy).abs() < 1e-9);
    }

    #[test]
    fn dense_cosine_is_symmetric_bounded_and_scale_free(
        pair in (1usize..8).prop_flat_map(|d| (prop::collection::vec(-5.0f64..5.0, d), prop::collection::vec(-5.0f64..5.0, d))),
        c in 0.01f64..100.0,
    ) {
        let a = DenseVector { values: pair.0, empty: false };
        let b = DenseVector { values: pair.1, empty: false };
        let ab = dense_cosine(&a, &b).unwrap();
        prop_assert!((ab - dense_cosine(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        let scaled = DenseVector { values: a.values.iter().map(|v| v * c).collect(), empty: false };
        prop_assert!((dense_cosine(&scaled, &b).unwrap() - ab).abs() < 1e-9);
    }

    #[test]
    fn average_precision_bounds_and_promotion(rel in prop::collection::vec(any::<bool>(), 1..20), extra in 0usize..3, swap in any::<prop::sample::Index>()) {
        prop_assume!(rel.iter().any(|r| *r));
        let ids: Vec<String> = (0..rel.len()).map(|i| format!("p{i}")).collect();
        let mut relevant: BTreeSet<&str> = ids.iter().zip(&rel).filter(|(_, r)| **r).map(|(i, _)| i.as_str()).collect();
        // Relevant items that were never retrieved.
        let missing: Vec<String> = (0..extra).map(|i| format!("m{i}")).collect();
        relevant.extend(missing.iter().map(String::as_str));
        let ranked: Vec<&str> = ids.iter().map(String::as_str).collect();
        let ap = average_precision(&ranked, &relevant).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap));

        // Moving a relevant item above the irrelevant item before it never hurts.
        let i = swap.index(ranked.len());
        if i > 0 && relevant.contains(ranked[i]) && !relevant.contains(ranked[i - 1]) {
            let mut better = ranked.clone();
            better.swap(i - 1, i);
            prop_assert!(average_precision(&better, &relevant).unwrap() > ap);
        }

        // All relevant items first and none missing gives a perfect score.
        let mut sorted = ranked.clone();
        sorted.sort_by_key(|id| !relevant.contains(id));
        let perfect = average_precision(&sorted, &relevant).unwrap();
        prop_assert_eq!(perfect == 1.0, extra == 0);
    }

    #[test]
    fn ap_equals_rr_with_one_relevant(n in 1usize..30, pos in any::<prop::sample::Index>(), retrieved in any::<bool>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let ranked: Vec<&str> = ids.iter().map(String::as_str).collect();
        let target = if retrieved { ranked[pos.index(n)] } else { "absent" };
        let relevant = BTreeSet::from([target]);
        prop_assert_eq!(average_precision(&ranked, &relevant), reciprocal_rank(&ranked, &relevant));
    }

    #[test]
    fn rm1_weights_form_a_distribution(docs in docs_strategy(), q in prop::collection::vec(0..WORDS.len(), 1..3), fb_docs in 1usize..5, fb_terms in 1usize..5) {
        let ix = index_of(&docs);
        let query = heading_query(tokens(&q));
        let terms = rm1_terms(&ix, &query, fb_docs, fb_terms, 1500.0).unwrap();
        prop_assert!(terms.len() <= fb_terms);
        prop_assert!(terms.iter().all(|t| t.weight > 0.0 && !query.terms.contains(&t.term)));
        if !terms.is_empty() {
            let total: f64 = terms.iter().map(|t| t.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_one_keeps_the_original_ranking(docs in docs_strategy(), q in prop::collection::vec(0..WORDS.len(), 1..3)) {
        let ix = index_of(&docs);
        let query = heading_query(tokens(&q));
        let terms = rm1_terms(&ix, &query, 5, 5, 1500.0).unwrap();
        let expanded = expand_rm3(&query, terms, 1.0).unwrap();
        let weighted = Bm25Scorer::new(&ix, &expanded.term_weights(&ix).unwrap(), Bm25Params::default());
        let plain = Bm25Scorer::from_tokens(&ix, &query.terms, Bm25Params::default());
        let a = retrieve_topk(&ix, &weighted, "q", 100);
        let b = retrieve_topk(&ix, &plain, "q", 100);
        prop_assert_eq!(a.ids(), b.ids());
    }

    #[test]
    fn features_ignore_positive_affine_rescaling(scores in prop::collection::vec(-10.0f64..10.0, 1..15), a in 0.01f64..50.0, b in -50.0f64..50.0) {
        let run = |f: &dyn Fn(f64) -> f64| {
            Ranking::new("q", scores.iter().enumerate().map(|(i, s)| (format!("p{i}"), f(*s))).collect()).unwrap()
        };
        let base = run(&|s| s);
        let moved = run(&|s| a * s + b);
        let x = assemble_features(&[Some(&base)], "q");
        let y = assemble_features(&[Some(&moved)], "q");
        prop_assert_eq!(x.len(), y.len());
        for (u, v) in x.iter().zip(&y) {
            prop_assert!(u.features.iter().all(|f| (0.0..=1.0).contains(f)));
            prop_assert!((u.features[0] - v.features[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_model_ranking_ignores_weight_scale(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..15),
        w in prop::collection::vec(-1.0f64..1.0, 3),
        c in 0.01f64..100.0,
    ) {
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let vectors: Vec<_> = assemble_rows(&rows);
        let m1 = LinearModel::new(names.clone(), w.clone()).unwrap();
        let m2 = LinearModel::new(names, w.iter().map(|x| x * c).collect()).unwrap();
        let (r1, r2) = (m1.rank("q", &vectors).unwrap(), m2.rank("q", &vectors).unwrap());
        // Exact ties may round differently once scaled; compare scores up to scale.
        for (e1, e2) in r1.entries().iter().zip(r2.entries()) {
            prop_assert!((e1.score * c - e2.score).abs() < 1e-9 * (1.0 + e2.score.abs()));
        }
    }
}

fn index_text(docs: &[Vec<usize>], id: &str) -> String {
    let i: usize = id[1..].parse().unwrap();
    tokens(&docs[i]).join(" ")
}

fn assemble_rows(rows: &[Vec<f64>]) -> Vec<outline_core::ltr::FeatureVector> {
    rows.iter()
        .enumerate()
        .map(|(i, f)| outline_core::ltr::FeatureVector { query_id: "q".into(), paragraph_id: format!("p{i:02}"), features: f.clone() })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn folds_partition_pages(pages in 2usize..25, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= pages);
        let data = generate(&SynthConfig { max_sections: 2, min_sections: 1, distractors: 0, ..SynthConfig::with_pages(pages, 1) }).unwrap();
        let folds = assign_folds(&data.corpus, k, seed).unwrap();
        prop_assert_eq!(folds.mapping.len(), pages);
        prop_assert!(data.corpus.pages.iter().all(|p| folds.fold_of(&p.id).is_some_and(|f| f < k)));
        let sizes = folds.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(&folds, &assign_folds(&data.corpus, k, seed).unwrap());
    }

    #[test]
    fn train_env_keeps_truth_and_draws_the_right_negatives(pages in 2usize..6, same in 0usize..4, other in 0usize..4, seed in any::<u64>()) {
        let data = generate(&SynthConfig::with_pages(pages, 7)).unwrap();
        let spec = EnvSpec { neg_same_article: same, neg_other_article: other, seed };
        let env = build_train_env(&data.corpus, &spec).unwrap();
        prop_assert_eq!(&env, &build_train_env(&data.corpus, &spec).unwrap());
        let by_id: BTreeMap<&str, _> = env.iter().map(|s| (s.query_id.as_str(), s)).collect();
        for page in &data.corpus.pages {
            let own: BTreeSet<&str> = page.paragraph_ids().into_iter().collect();
            for section in page.all_sections() {
                let set = by_id[query_id(&page.id, &section.full_path()).as_str()];
                let n = section.paragraphs.len();
                let ids: BTreeSet<&str> = set.paragraph_ids.iter().map(String::as_str).collect();
                prop_assert_eq!(ids.len(), set.len(), "duplicate candidates");
                prop_assert_eq!(set.count(Provenance::TrueSection), n);
                prop_assert_eq!(set.count(Provenance::SameArticle) + set.deficit.same_article, n * same);
                prop_assert_eq!(set.count(Provenance::OtherArticle) + set.deficit.other_article, n * other);
                for (id, kind) in set.paragraph_ids.iter().zip(&set.provenance) {
                    let in_section = section.paragraphs.contains(id);
                    match kind {
                        Provenance::TrueSection => prop_assert!(in_section),
                        Provenance::SameArticle => prop_assert!(!in_section && own.contains(id.as_str())),
                        Provenance::OtherArticle => prop_assert!(!own.contains(id.as_str())),
                        Provenance::Retrieved => prop_assert!(false, "retrieved candidate in a training set"),
                    }
                }
            }
        }
    }
}

fn small_synth(pages: usize, seed: u64) -> outline_core::synth::SynthData {
    generate(&SynthConfig { dim: 8, ..SynthConfig::with_pages(pages, seed) }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn queries_and_qrels_follow_the_outline(pages in 1usize..6, seed in any::<u64>()) {
        let data = small_synth(pages, seed);
        let cfg = TokenPipelineConfig::default();
        let queries = build_all_queries(&data.corpus, &cfg);
        prop_assert_eq!(queries.len(), data.corpus.section_count());
        let qrels = derive_qrels(&data.corpus);
        prop_assert_eq!(&qrels, &derive_qrels(&data.corpus));
        for page in &data.corpus.pages {
            for section in page.all_sections() {
                let qid = query_id(&page.id, &section.full_path());
                let want: BTreeSet<&str> = section.paragraphs.iter().map(String::as_str).collect();
                prop_assert_eq!(qrels.relevant(&qid), want);
                if section.path.is_empty() {
                    let q = queries.iter().find(|q| q.query_id == qid).unwrap();
                    prop_assert_eq!(&q.raw_text, &format!("{} {}", section.heading, page.title));
                }
            }
        }
    }

    #[test]
    fn index_rebuilds_identically(pages in 1usize..4, seed in any::<u64>()) {
        let data = small_synth(pages, seed);
        let build = || {
            let mut bytes = Vec::new();
            build_index(&data.corpus.texts(), &TokenPipelineConfig::default()).unwrap().write(&mut bytes).unwrap();
            bytes
        };
        prop_assert_eq!(build(), build());
    }

    #[test]
    fn embedding_scale_keeps_glove_rankings(pages in 2usize..5, seed in any::<u64>(), c in 0.01f64..100.0) {
        let data = small_synth(pages, seed);
        let ix = build_index(&data.corpus.texts(), &TokenPipelineConfig::default()).unwrap();
        let queries = build_all_queries(&data.corpus, ix.analyzer());
        let scaled = data.word_embeddings.scaled(c);
        let run = |store| {
            let res = Resources { word_embeddings: Some(store), ..Resources::default() };
            let ex = Experiment::new(&data.corpus, &ix, res, Bm25Params::default(), ExpansionParams::default(), 0).unwrap();
            ex.run("glove-cs".parse().unwrap(), &queries, None, 20).unwrap()
        };
        let (a, b) = (run(&data.word_embeddings), run(&scaled));
        for (x, y) in a.iter().zip(&b) {
            // Scores agree to rounding, so only genuinely distinct scores must keep their order.
            for (e, f) in x.entries().iter().zip(y.entries()) {
                prop_assert!((e.score - f.score).abs() < 1e-9);
                prop_assert!(e.id == f.id || (x.score_of(&f.id).unwrap() - e.score).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fused_training_map_is_at_least_every_single_feature(pages in 2usize..5, seed in any::<u64>()) {
        let data = small_synth(pages, seed);
        let ix = build_index(&data.corpus.texts(), &TokenPipelineConfig::default()).unwrap();
        let queries = build_all_queries(&data.corpus, ix.analyzer());
        let qrels = derive_qrels(&data.corpus);
        let ex = Experiment::new(&data.corpus, &ix, Resources::default(), Bm25Params::default(), ExpansionParams::default(), 0).unwrap();
        let env = build_test_env(&data.corpus, seed).unwrap();
        let names: Vec<String> = ["bm25", "tfidf-cs", "bm25+rm1"].map(String::from).to_vec();
        let runs: Vec<Vec<Ranking>> =
            names.iter().map(|n| ex.run(n.parse().unwrap(), &queries, Some(&env), 0).unwrap()).collect();
        let features: Vec<_> = env
            .iter()
            .flat_map(|set| {
                let per_run: Vec<Option<&Ranking>> =
                    runs.iter().map(|r| r.iter().find(|x| x.query_id == set.query_id)).collect();
                assemble_features(&per_run, &set.query_id)
            })
            .collect();
        let cfg = CaConfig { restarts: 2, iterations_per_restart: 8, seed, ..CaConfig::default() };
        let model = train_coordinate_ascent(&features, &qrels, &names, &cfg).unwrap();
        let best = single_feature_maps(&features, &qrels).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!(model.training_map().unwrap() >= best - 1e-12);
        prop_assert_eq!(&model, &train_coordinate_ascent(&features, &qrels, &names, &cfg).unwrap());

        let cv = cross_validate(&features, &qrels, &names, 2, &cfg).unwrap();
        let mut tested = BTreeSet::new();
        for fold in &cv.folds {
            prop_assert!(fold.train_queries.is_disjoint(&fold.test_queries));
            for q in &fold.test_queries {
                prop_assert!(tested.insert(q.clone()), "query {} tested twice", q);
            }
        }
        let ranked: BTreeSet<String> = cv.rankings.iter().map(|r| r.query_id.clone()).collect();
        prop_assert_eq!(tested, ranked);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tokenizing_is_stable_and_stopword_free(words in prop::collection::vec("[A-Za-z]{1,9}|the|and|of|[0-9]{1,4}", 0..20), sep in "[ ,.;:!?'()-]{1,3}") {
        let text = words.join(&sep);
        let stemmed = TokenPipelineConfig::default();
        let out = stemmed.tokenize(&text);
        prop_assert_eq!(&out, &stemmed.tokenize(&text));
        prop_assert!(out.iter().all(|t| !stemmed.is_stopword(t)));

        let unstemmed = stemmed.with_stem(false);
        let once = unstemmed.tokenize(&text);
        prop_assert_eq!(&unstemmed.tokenize(&once.join(" ")), &once);
    }

    #[test]
    fn heading_keys_ignore_case_and_punctuation(words in prop::collection::vec("[a-z]{2,9}", 1..5), punct in "[,.;:!?()-]{0,2}") {
        let plain = words.join(" ");
        let noisy = format!("{}{punct}", words.iter().map(|w| w.to_uppercase()).collect::<Vec<_>>().join(&format!("{punct} ")));
        prop_assert_eq!(heading_key(&plain), heading_key(&noisy));
    }

    #[test]
    fn rm1_weights_descend(docs in docs_strategy(), q in prop::collection::vec(0..WORDS.len(), 1..3)) {
        let ix = index_of(&docs);
        let terms = rm1_terms(&ix, &heading_query(tokens(&q)), 5, 8, 1500.0).unwrap();
        prop_assert!(terms.windows(2).all(|w| w[0].weight >= w[1].weight));
    }

    #[test]
    fn shuffling_the_tail_keeps_ap(rel in prop::collection::vec(any::<bool>(), 1..20), tail in prop::collection::vec(any::<u8>(), 0..10)) {
        prop_assume!(rel.iter().any(|r| *r));
        let mut ids: Vec<String> = (0..rel.len()).map(|i| format!("p{i}")).collect();
        let relevant: BTreeSet<&str> = ids.iter().zip(&rel).filter(|(_, r)| **r).map(|(i, _)| i.as_str()).collect();
        let relevant: BTreeSet<String> = relevant.into_iter().map(String::from).collect();
        ids.extend((0..tail.len()).map(|i| format!("n{i}")));
        let rel_ref: BTreeSet<&str> = relevant.iter().map(String::as_str).collect();
        let ranked: Vec<&str> = ids.iter().map(String::as_str).collect();
        let ap = average_precision(&ranked, &rel_ref).unwrap();
        // Reorder everything after the last relevant item.
        let last = ranked.iter().rposition(|id| rel_ref.contains(id)).unwrap();
        let mut shuffled = ranked.clone();
        let mut keyed: Vec<(u8, &str)> = shuffled[last + 1..].iter().enumerate().map(|(i, id)| (tail.get(i).copied().unwrap_or(0), *id)).collect();
        keyed.sort();
        for (slot, (_, id)) in shuffled[last + 1..].iter_mut().zip(keyed) {
            *slot = id;
        }
        prop_assert_eq!(average_precision(&shuffled, &rel_ref).unwrap(), ap);
    }

    #[test]
    fn promotion_never_hurts_any_metric(rel in prop::collection::vec(any::<bool>(), 2..20), at in any::<prop::sample::Index>()) {
        let ids: Vec<String> = (0..rel.len()).map(|i| format!("p{i}")).collect();
        let relevant: BTreeSet<&str> = ids.iter().zip(&rel).filter(|(_, r)| **r).map(|(i, _)| i.as_str()).collect();
        prop_assume!(!relevant.is_empty());
        let ranked: Vec<&str> = ids.iter().map(String::as_str).collect();
        let i = at.index(ranked.len() - 1) + 1;
        prop_assume!(relevant.contains(ranked[i]) && !relevant.contains(ranked[i - 1]));
        let mut better = ranked.clone();
        better.swap(i - 1, i);
        for metric in [average_precision, r_precision, reciprocal_rank] {
            prop_assert!(metric(&better, &relevant).unwrap() >= metric(&ranked, &relevant).unwrap());
        }
    }

    #[test]
    fn run_level_metrics(perm in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..8), 1..8)) {
        // Query i ranks paragraphs in the given order; `true` marks relevance.
        let mut qrels = Qrels::new();
        let mut rankings = Vec::new();
        for (i, rels) in perm.iter().enumerate() {
            let qid = format!("q{i}");
            let scored = rels.iter().enumerate().map(|(j, _)| (format!("q{i}p{j}"), -(j as f64))).collect();
            for (j, r) in rels.iter().enumerate() {
                if *r {
                    qrels.insert(&qid, &format!("q{i}p{j}"), 1);
                }
            }
            rankings.push(Ranking::new(qid, scored).unwrap());
        }
        let report = evaluate_run(&RunFile::from_rankings(&rankings, "r"), &qrels);
        for m in [report.map, report.r_prec, report.mrr] {
            prop_assert!((0.0..=1.0).contains(&m));
        }
        let evaluated: Vec<&Vec<bool>> = perm.iter().filter(|r| r.iter().any(|x| *x)).collect();
        let perfect = evaluated.iter().all(|r| r.windows(2).all(|w| w[0] || !w[1]));
        if !evaluated.is_empty() {
            prop_assert_eq!(report.map == 1.0, perfect);
        }
        // Queries whose ranking holds no relevant item cap MRR.
        let with_hit = evaluated.len() as f64 / report.evaluated().max(1) as f64;
        prop_assert!(report.mrr <= with_hit + 1e-12);
    }
}
