use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Mutex;

use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub entity_id: String,
    pub count: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LinkerError {
    /// The linker could not be reached. Distinct from a successful call that
    /// found nothing, which is an empty mention list.
    #[error("entity linker unavailable: {0}")]
    Unavailable(String),
}

pub trait EntityLinker: Send + Sync {
    fn link(&self, text: &str) -> Result<Vec<EntityMention>, LinkerError>;
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Exact-surface dictionary linker. Matching is case-insensitive over word
/// sequences, scanning left to right and taking the longest surface at each
/// position.
#[derive(Debug, Clone, Default)]
pub struct GazetteerLinker {
    surfaces: HashMap<Vec<String>, String>,
    max_words: usize,
}

impl GazetteerLinker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later entries for the same surface replace earlier ones.
    pub fn insert(&mut self, surface: &str, entity_id: &str) {
        let key = words(surface);
        if key.is_empty() {
            return;
        }
        self.max_words = self.max_words.max(key.len());
        self.surfaces.insert(key, entity_id.to_string());
    }

    /// Reads `surface<TAB>entityId` lines.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut g = GazetteerLinker::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (surface, entity) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected surface<TAB>entityId"))?;
            let entity = entity.trim();
            if entity.is_empty() || words(surface).is_empty() {
                return Err(Error::parse(i + 1, "empty surface or entity id"));
            }
            g.insert(surface, entity);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Mentions ordered by first occurrence.
    pub fn link_text(&self, text: &str) -> Vec<EntityMention> {
        let toks = words(text);
        let mut out: Vec<EntityMention> = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let longest = (1..=self.max_words.min(toks.len() - i))
                .rev()
                .find_map(|n| self.surfaces.get(&toks[i..i + n]).map(|e| (n, e)));
            match longest {
                Some((n, entity)) => {
                    match out.iter_mut().find(|m| &m.entity_id == entity) {
                        Some(m) => m.count += 1,
                        None => out.push(EntityMention { entity_id: entity.clone(), count: 1 }),
                    }
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}

impl EntityLinker for GazetteerLinker {
    fn link(&self, text: &str) -> Result<Vec<EntityMention>, LinkerError> {
        Ok(self.link_text(text))
    }
}

/// Memoizes successful results of another linker so repeated texts always
/// get the same answer. Failures are not cached.
pub struct CachedLinker<L> {
    inner: L,
    cache: Mutex<HashMap<String, Vec<EntityMention>>>,
}

impl<L: EntityLinker> CachedLinker<L> {
    pub fn new(inner: L) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("linker cache poisoned").len()
    }
}

impl<L: EntityLinker> EntityLinker for CachedLinker<L> {
    fn link(&self, text: &str) -> Result<Vec<EntityMention>, LinkerError> {
        if let Some(hit) = self.cache.lock().expect("linker cache poisoned").get(text) {
            return Ok(hit.clone());
        }
        // Held across the call so a remote backend sees one request at a time.
        let mut cache = self.cache.lock().expect("linker cache poisoned");
        let mentions = self.inner.link(text)?;
        cache.insert(text.to_string(), mentions.clone());
        Ok(mentions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn gaz(rows: &[(&str, &str)]) -> GazetteerLinker {
        let mut g = GazetteerLinker::new();
        for (s, e) in rows {
            g.insert(s, e);
        }
        g
    }

    #[test]
    fn exact_match() {
        let g = gaz(&[("new york city", "E1")]);
        assert_eq!(g.link_text("in New York City"), vec![EntityMention {
            entity_id: "E1".into(),
            count: 1
        }]);
    }

    #[test]
    fn longest_match_wins() {
        let g = gaz(&[("new york", "E_ny"), ("new york city", "E_nyc")]);
        let m = g.link_text("New York City, new york.");
        assert_eq!(m[0], EntityMention { entity_id: "E_nyc".into(), count: 1 });
        assert_eq!(m[1], EntityMention { entity_id: "E_ny".into(), count: 1 });
    }

    #[test]
    fn repeated_mentions_count() {
        let g = gaz(&[("paris", "P")]);
        assert_eq!(g.link_text("Paris and PARIS")[0].count, 2);
        assert!(g.link_text("nothing here").is_empty());
    }

    #[test]
    fn file_format() {
        let g = GazetteerLinker::read("new york\tE1\nparis\tE2\n".as_bytes()).unwrap();
        assert_eq!(g.len(), 2);
        assert!(GazetteerLinker::read("no tab here\n".as_bytes()).is_err());
    }

    struct Flaky {
        calls: AtomicUsize,
    }

    impl EntityLinker for Flaky {
        fn link(&self, text: &str) -> Result<Vec<EntityMention>, LinkerError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if text == "down" {
                return Err(LinkerError::Unavailable("timeout".into()));
            }
            Ok(vec![EntityMention { entity_id: format!("call{n}"), count: 1 }])
        }
    }

    #[test]
    fn cache_makes_reruns_deterministic() {
        let linker = CachedLinker::new(Flaky { calls: AtomicUsize::new(0) });
        let a = linker.link("text").unwrap();
        let b = linker.link("text").unwrap();
        assert_eq!(a, b);
        assert!(matches!(linker.link("down"), Err(LinkerError::Unavailable(_))));
        assert_eq!(linker.cached(), 1);
    }
}
