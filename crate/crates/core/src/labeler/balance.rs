use std::collections::BTreeMap;

use crate::corpus::{Corpus, Document, Label};

use super::LabelerError;

/// Per-label loss weights. Labels never seen in the source corpus weigh
/// `absent`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub weights: BTreeMap<Label, f64>,
    pub absent: f64,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights {
            weights: BTreeMap::new(),
            absent: 1.0,
        }
    }

    pub fn get(&self, label: &Label) -> f64 {
        self.weights.get(label).copied().unwrap_or(self.absent)
    }

    /// Weights aligned with a label alphabet.
    pub fn for_alphabet(&self, labels: &[Label]) -> Vec<f64> {
        labels.iter().map(|l| self.get(l)).collect()
    }
}

/// Balanced inverse-frequency weights `N / (K * n_c)` over the `K` labels
/// present, normalized to mean 1, then clamped to `[clamp_min, clamp_max]`.
pub fn class_weights(corpus: &Corpus, clamp_min: f64, clamp_max: f64) -> Result<ClassWeights, LabelerError> {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for seg in corpus.segments() {
        for tok in seg.tokens() {
            *counts.entry(tok.label.clone()).or_insert(0) += 1;
        }
    }
    let n: usize = counts.values().sum();
    if n == 0 {
        return Err(LabelerError::EmptyCorpus);
    }
    let k = counts.len() as f64;
    let raw: BTreeMap<Label, f64> = counts
        .into_iter()
        .map(|(l, c)| (l, n as f64 / (k * c as f64)))
        .collect();
    let mean = raw.values().sum::<f64>() / k;
    Ok(ClassWeights {
        weights: raw
            .into_iter()
            .map(|(l, w)| (l, (w / mean).clamp(clamp_min, clamp_max)))
            .collect(),
        absent: clamp_max,
    })
}

/// Repeats every segment holding a non-`O` label `factor` times in place.
pub fn oversample(corpus: &Corpus, factor: usize) -> Result<Corpus, LabelerError> {
    if factor < 1 {
        return Err(LabelerError::InvalidConfig("oversampling factor must be at least 1".into()));
    }
    let docs = corpus
        .documents()
        .iter()
        .map(|d| Document {
            id: d.id.clone(),
            metadata: d.metadata.clone(),
            segments: d
                .segments
                .iter()
                .flat_map(|s| {
                    let times = if s.has_entity() { factor } else { 1 };
                    std::iter::repeat_n(s.clone(), times)
                })
                .collect(),
        })
        .collect();
    Ok(Corpus::new(docs).expect("document ids unchanged"))
}
