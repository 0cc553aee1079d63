use std::collections::BTreeMap;

use super::TermId;

/// Term-weight vector over the index vocabulary, entries sorted by term id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(TermId, f64)>,
}

impl SparseVector {
    /// Zero weights are dropped; duplicate term ids are summed.
    pub fn from_entries(entries: impl IntoIterator<Item = (TermId, f64)>) -> Self {
        let mut map: BTreeMap<TermId, f64> = BTreeMap::new();
        for (t, w) in entries {
            *map.entry(t).or_insert(0.0) += w;
        }
        Self { entries: map.into_iter().filter(|(_, w)| *w != 0.0).collect() }
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, term: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn terms(&self) -> Vec<TermId> {
        self.entries.iter().map(|&(t, _)| t).collect()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Unit-length copy; the empty/zero vector stays as it is.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / n)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_entries(self.entries.iter().map(|&(t, w)| (t, w * c)))
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `a·self + b·other`.
    pub fn mix(&self, a: f64, other: &SparseVector, b: f64) -> Self {
        Self::from_entries(
            self.entries
                .iter()
                .map(|&(t, w)| (t, a * w))
                .chain(other.entries.iter().map(|&(t, w)| (t, b * w))),
        )
    }

    /// Unweighted mean of the given vectors.
    pub fn centroid(vectors: &[SparseVector]) -> Self {
        if vectors.is_empty() {
            return Self::default();
        }
        let c = 1.0 / vectors.len() as f64;
        Self::from_entries(vectors.iter().flat_map(|v| v.entries.iter().map(move |&(t, w)| (t, w * c))))
    }

    /// Cosine similarity; 0 when either side has zero norm.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        self.dot(other) / (na * nb)
    }
}
