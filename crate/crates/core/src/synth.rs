//! Deterministic synthetic corpora shaped like the benchmark test split:
//! pages of 8 to 15 sections drawn from a shared pool of common headings,
//! where sections under the same heading share a topic vocabulary. Also
//! produces matching word embeddings, entity embeddings and a gazetteer.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rand::Rng as _;

use crate::corpus::{Corpus, Page, Paragraph, Section};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::semvec::{EmbeddingStore, GazetteerLinker};
use crate::textproc::{porter, TokenPipelineConfig};

const COMMON_HEADINGS: &[&str] = &[
    "History", "Geography", "Demographics", "Economy", "Culture", "Education", "Transport",
    "Climate", "Politics", "Government", "Sports", "Religion", "Media", "Architecture",
    "Tourism", "Infrastructure", "Health", "Military", "Literature", "Music", "Cuisine", "Law",
    "Science", "Technology", "Agriculture", "Industry", "Energy", "Environment", "Wildlife",
    "Geology", "Etymology", "Languages", "Festivals", "Notable people", "Early life", "Career",
    "Personal life", "Legacy", "Awards", "Discography", "Filmography", "Reception", "Plot",
    "Production", "Background", "Aftermath", "Design", "Operations",
];

const CHILD_HEADINGS: &[&str] =
    &["Overview", "Early period", "Modern era", "Recent developments", "Criticism", "Statistics"];

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub pages: usize,
    pub min_sections: usize,
    pub max_sections: usize,
    pub max_paragraphs_per_section: usize,
    /// Standalone paragraphs attached to no page.
    pub distractors: usize,
    /// Probability that a top-level heading is unique to its page.
    pub rare_heading_rate: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pages: 200,
            min_sections: 8,
            max_sections: 15,
            max_paragraphs_per_section: 2,
            distractors: 200,
            rare_heading_rate: 0.1,
            dim: 32,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn with_pages(pages: usize, seed: u64) -> Self {
        Self { pages, distractors: pages, seed, ..Self::default() }
    }
}

pub struct SynthData {
    pub corpus: Corpus,
    /// Surface word to vector.
    pub word_embeddings: EmbeddingStore,
    /// Entity id to vector.
    pub entity_embeddings: EmbeddingStore,
    pub gazetteer: Vec<(String, String)>,
}

impl SynthData {
    pub fn linker(&self) -> GazetteerLinker {
        let mut g = GazetteerLinker::new();
        for (surface, entity) in &self.gazetteer {
            g.insert(surface, entity);
        }
        g
    }

    /// `surface<TAB>entityId` lines.
    pub fn write_gazetteer<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for (surface, entity) in &self.gazetteer {
            writeln!(out, "{surface}\t{entity}")?;
        }
        Ok(())
    }
}

/// Word and entity material for one topic (a heading) or one page.
struct Theme {
    words: Vec<String>,
    entities: Vec<(String, String)>,
    center: Vec<f64>,
    entity_center: Vec<f64>,
}

struct Words {
    rng: Rng,
    used_stems: HashSet<String>,
    pipeline: TokenPipelineConfig,
}

impl Words {
    fn fresh(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(CONSONANTS[self.rng.random_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[self.rng.random_range(0..VOWELS.len())] as char);
            }
            if self.rng.random_bool(0.4) {
                w.push(CONSONANTS[self.rng.random_range(0..CONSONANTS.len())] as char);
            }
            if self.pipeline.is_stopword(&w) {
                continue;
            }
            if self.used_stems.insert(porter::stem(&w)) {
                return w;
            }
        }
    }

    fn reserve(&mut self, text: &str) {
        for w in text.split_whitespace() {
            self.used_stems.insert(porter::stem(&w.to_lowercase()));
        }
    }
}

fn random_vector(rng: &mut Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0) * scale).collect()
}

fn around(rng: &mut Rng, center: &[f64], noise: f64) -> Vec<f64> {
    center.iter().map(|c| c + rng.random_range(-1.0..1.0) * noise).collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

struct Builder {
    cfg: SynthConfig,
    rng: Rng,
    words: Words,
    background: Vec<String>,
    topics: BTreeMap<String, Theme>,
    word_vecs: EmbeddingStore,
    entity_vecs: EmbeddingStore,
    gazetteer: Vec<(String, String)>,
    next_entity: usize,
    paragraphs: Vec<Paragraph>,
}

impl Builder {
    fn theme(&mut self, n_words: usize, n_entities: usize) -> Result<Theme> {
        let dim = self.cfg.dim;
        let center = random_vector(&mut self.rng, dim, 1.0);
        let entity_center = random_vector(&mut self.rng, dim, 1.0);
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            let w = self.words.fresh();
            let v = around(&mut self.rng, &center, 0.6);
            self.word_vecs.insert(w.clone(), v)?;
            words.push(w);
        }
        let mut entities = Vec::with_capacity(n_entities);
        for _ in 0..n_entities {
            let surface = format!("{} {}", self.words.fresh(), self.words.fresh());
            for w in surface.split(' ') {
                let v = around(&mut self.rng, &center, 0.6);
                self.word_vecs.insert(w, v)?;
            }
            let id = format!("ent{:05}", self.next_entity);
            self.next_entity += 1;
            let v = around(&mut self.rng, &entity_center, 0.4);
            self.entity_vecs.insert(id.clone(), v)?;
            self.gazetteer.push((surface.clone(), id.clone()));
            entities.push((surface, id));
        }
        Ok(Theme { words, entities, center, entity_center })
    }

    fn topic(&mut self, heading: &str) -> Result<()> {
        if self.topics.contains_key(heading) {
            return Ok(());
        }
        let t = self.theme(25, 3)?;
        for w in heading.split_whitespace() {
            let w = w.to_lowercase();
            if self.word_vecs.get(&w).is_none() {
                let v = around(&mut self.rng, &t.center, 0.3);
                self.word_vecs.insert(w, v)?;
            }
        }
        self.topics.insert(heading.to_string(), t);
        Ok(())
    }

    fn background_word(&mut self) -> &str {
        // Skewed toward the front of the list, roughly Zipfian.
        let u: f64 = self.rng.random();
        let i = ((u * u) * self.background.len() as f64) as usize;
        &self.background[i.min(self.background.len() - 1)]
    }

    fn paragraph(&mut self, id: String, heading: &str, page: &Theme, title: &str) {
        let len = self.rng.random_range(30..=60);
        let mut out: Vec<String> = Vec::with_capacity(len + 8);
        for _ in 0..len {
            let r: f64 = self.rng.random();
            let w = if r < 0.35 {
                let t = &self.topics[heading].words;
                t[self.rng.random_range(0..t.len())].clone()
            } else if r < 0.5 {
                page.words[self.rng.random_range(0..page.words.len())].clone()
            } else {
                self.background_word().to_string()
            };
            out.push(w);
        }
        let inject = |rng: &mut Rng, out: &mut Vec<String>, text: &str| {
            let at = rng.random_range(0..=out.len());
            out.insert(at, text.to_string());
        };
        if self.rng.random_bool(0.25) {
            inject(&mut self.rng, &mut out, &heading.to_lowercase());
        }
        if self.rng.random_bool(0.3) {
            inject(&mut self.rng, &mut out, title);
        }
        if self.rng.random_bool(0.5) {
            let ents = &self.topics[heading].entities;
            let surface = ents[self.rng.random_range(0..ents.len())].0.clone();
            inject(&mut self.rng, &mut out, &surface);
        }
        if self.rng.random_bool(0.3) {
            let surface = page.entities[0].0.clone();
            inject(&mut self.rng, &mut out, &surface);
        }
        let mut text = out.join(" ");
        text = capitalize(&text);
        text.push('.');
        self.paragraphs.push(Paragraph { id, text });
    }

    fn section(
        &mut self,
        page_id: &str,
        counter: &mut usize,
        heading: &str,
        path: Vec<String>,
        page: &Theme,
        title: &str,
    ) -> Section {
        let n = self.rng.random_range(1..=self.cfg.max_paragraphs_per_section);
        let mut paragraphs = Vec::with_capacity(n);
        for _ in 0..n {
            let id = format!("{page_id}-p{:02}", *counter);
            *counter += 1;
            self.paragraph(id.clone(), heading, page, title);
            paragraphs.push(id);
        }
        Section { heading: heading.to_string(), path, paragraphs, children: Vec::new() }
    }

    fn page(&mut self, index: usize) -> Result<Page> {
        let id = format!("page{index:04}");
        let title = format!("{} {}", capitalize(&self.words.fresh()), capitalize(&self.words.fresh()));
        let mut theme = self.theme(10, 0)?;
        // The page entity's surface is its title.
        let eid = format!("ent{:05}", self.next_entity);
        self.next_entity += 1;
        for w in title.split(' ') {
            let v = around(&mut self.rng, &theme.center, 0.3);
            self.word_vecs.insert(w.to_lowercase(), v)?;
        }
        let v = around(&mut self.rng, &theme.entity_center, 0.2);
        self.entity_vecs.insert(eid.clone(), v)?;
        self.gazetteer.push((title.to_lowercase(), eid.clone()));
        theme.entities.push((title.to_lowercase(), eid));

        let total = self.rng.random_range(self.cfg.min_sections..=self.cfg.max_sections);
        let top_max = total.min(COMMON_HEADINGS.len());
        let picks = sample(&mut self.rng, COMMON_HEADINGS.len(), top_max).into_vec();
        let mut sections: Vec<Section> = Vec::new();
        let mut counter = 0;
        let mut next_pick = 0;
        for _ in 0..total {
            let nest = sections
                .last()
                .is_some_and(|s| s.children.len() < 2 && self.rng.random_bool(0.15));
            if nest {
                let parent = sections.last().unwrap();
                let taken: HashSet<&str> = parent.children.iter().map(|c| c.heading.as_str()).collect();
                let free: Vec<&str> = CHILD_HEADINGS.iter().copied().filter(|h| !taken.contains(h)).collect();
                let heading = free[self.rng.random_range(0..free.len())];
                let path = vec![parent.heading.clone()];
                self.topic(heading)?;
                let child = self.section(&id, &mut counter, heading, path, &theme, &title);
                sections.last_mut().unwrap().children.push(child);
                continue;
            }
            let heading = if self.rng.random_bool(self.cfg.rare_heading_rate) {
                capitalize(&self.words.fresh())
            } else {
                next_pick += 1;
                COMMON_HEADINGS[picks[next_pick - 1]].to_string()
            };
            self.topic(&heading)?;
            sections.push(self.section(&id, &mut counter, &heading, Vec::new(), &theme, &title));
        }
        Ok(Page { id, title, sections })
    }
}

/// Generates a corpus and its side resources from `cfg.seed` alone.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.pages == 0 || cfg.min_sections == 0 || cfg.min_sections > cfg.max_sections {
        return Err(Error::InvalidArgument("synthetic corpus needs pages and 1 <= min <= max sections".into()));
    }
    if cfg.max_paragraphs_per_section == 0 || cfg.dim == 0 {
        return Err(Error::InvalidArgument("paragraphs per section and dimension must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.rare_heading_rate) {
        return Err(Error::InvalidArgument("rare heading rate must be in [0, 1]".into()));
    }
    let mut words = Words {
        rng: rng::derived(cfg.seed, "synth-words"),
        used_stems: HashSet::new(),
        pipeline: TokenPipelineConfig::default(),
    };
    for h in COMMON_HEADINGS.iter().chain(CHILD_HEADINGS) {
        words.reserve(h);
    }
    let background: Vec<String> = (0..400).map(|_| words.fresh()).collect();
    let mut b = Builder {
        cfg: cfg.clone(),
        rng: rng::derived(cfg.seed, "synth"),
        words,
        background,
        topics: BTreeMap::new(),
        word_vecs: EmbeddingStore::new(cfg.dim),
        entity_vecs: EmbeddingStore::new(cfg.dim),
        gazetteer: Vec::new(),
        next_entity: 0,
        paragraphs: Vec::new(),
    };
    for i in 0..b.background.len() {
        let v = random_vector(&mut b.rng, cfg.dim, 1.0);
        b.word_vecs.insert(b.background[i].clone(), v)?;
    }
    let pages = (0..cfg.pages).map(|i| b.page(i)).collect::<Result<Vec<_>>>()?;

    // Distractors borrow a random topic and a throwaway page theme.
    let topic_names: Vec<String> = b.topics.keys().cloned().collect();
    for i in 0..cfg.distractors {
        let heading = topic_names[b.rng.random_range(0..topic_names.len())].clone();
        let ghost = b.theme(10, 1)?;
        let title = ghost.entities[0].0.clone();
        b.paragraph(format!("extra{i:05}"), &heading, &ghost, &title);
    }
    let corpus = Corpus::from_parts(pages, b.paragraphs)?;
    Ok(SynthData { corpus, word_embeddings: b.word_vecs, entity_embeddings: b.entity_vecs, gazetteer: b.gazetteer })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig::with_pages(6, 3);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.gazetteer, b.gazetteer);
        let c = generate(&SynthConfig::with_pages(6, 4)).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn shape_follows_config() {
        let data = generate(&SynthConfig::with_pages(20, 1)).unwrap();
        let c = &data.corpus;
        assert_eq!(c.pages.len(), 20);
        for p in &c.pages {
            let n = p.all_sections().len();
            assert!((8..=15).contains(&n), "{n}");
        }
        let attached: usize = c.pages.iter().map(|p| p.paragraph_ids().len()).sum();
        assert_eq!(c.paragraphs.len(), attached + 20);
        let linker = data.linker();
        let title = c.pages[0].title.clone();
        assert_eq!(linker.link_text(&format!("about {title} today")).len(), 1);
    }

    #[test]
    fn words_are_embedded() {
        let data = generate(&SynthConfig::with_pages(3, 2)).unwrap();
        let first = data.corpus.paragraphs.values().next().unwrap();
        let w = first.text.split_whitespace().nth(1).unwrap().trim_end_matches('.').to_lowercase();
        assert!(data.word_embeddings.get(&w).is_some(), "{w}");
    }
}
