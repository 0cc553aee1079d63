use std::io::{BufRead, Write};

use super::FeatureVector;
use crate::error::{Error, Result};
use crate::index::Ranking;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    training_map: Option<f64>,
}

impl LinearModel {
    pub fn new(feature_names: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if feature_names.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} feature names for {} weights",
                feature_names.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("weights must be finite and not all zero".into()));
        }
        if let Some(bad) = feature_names.iter().find(|n| n.is_empty() || n.contains(char::is_whitespace)) {
            return Err(Error::InvalidArgument(format!("bad feature name {bad:?}")));
        }
        Ok(Self { feature_names, weights, training_map: None })
    }

    /// Equal weight on every feature.
    pub fn uniform(feature_names: Vec<String>) -> Result<Self> {
        let n = feature_names.len();
        Self::new(feature_names, vec![1.0; n])
    }

    pub(crate) fn with_training_map(mut self, map: f64) -> Self {
        self.training_map = Some(map);
        self
    }

    /// Training MAP reached by the optimizer, when the model was trained here.
    pub fn training_map(&self) -> Option<f64> {
        self.training_map
    }

    pub fn score(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, f)| w * f).sum()
    }

    /// Ranks one query's vectors by model score.
    pub fn rank(&self, query_id: &str, vectors: &[FeatureVector]) -> Result<Ranking> {
        Ranking::new(
            query_id,
            vectors.iter().map(|v| (v.paragraph_id.clone(), self.score(&v.features))).collect(),
        )
    }

    /// `# <name> <name> ...` header, then one weight per line.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.feature_names.join(" "))?;
        for w in &self.weights {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let names: Vec<String> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(1, "expected '# <feature names>' header"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let mut weights = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            weights.push(
                line.trim().parse::<f64>().map_err(|e| Error::parse(i + 2, format!("bad weight: {e}")))?,
            );
        }
        Self::new(names, weights)
    }
}
