use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// Page-level k-way partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub mapping: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, page_id: &str) -> Option<usize> {
        self.mapping.get(page_id).copied()
    }

    pub fn pages_in(&self, fold: usize) -> Vec<&str> {
        self.mapping.iter().filter(|(_, f)| **f == fold).map(|(p, _)| p.as_str()).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for f in self.mapping.values() {
            sizes[*f] += 1;
        }
        sizes
    }
}

/// Shuffles pages under `seed` and deals them round-robin into `k` folds, so
/// fold sizes differ by at most one.
pub fn assign_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    let mut ids: Vec<&str> = corpus.pages.iter().map(|p| p.id.as_str()).collect();
    assign_ids(&mut ids, k, seed)
}

pub(crate) fn assign_ids(ids: &mut [&str], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be at least 2, got {k}")));
    }
    if k > ids.len() {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} exceeds item count {}",
            ids.len()
        )));
    }
    ids.sort_unstable();
    ids.shuffle(&mut rng::from_seed(seed));
    let mapping = ids.iter().enumerate().map(|(i, id)| (id.to_string(), i % k)).collect();
    Ok(FoldAssignment { k, mapping })
}
