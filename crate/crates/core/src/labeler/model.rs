use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{sort_entity_types, Corpus, EntityType, Label, Segment};

use super::features::{extract_all, FeatureTemplateSet};
use super::LabelerError;

pub const MODEL_MAGIC: &[u8; 6] = b"NATCRF";
pub const MODEL_VERSION: u32 = 1;

/// Linear-chain CRF parameters.
///
/// All weights live in one flat vector laid out as
/// `[transition K*K | start K | end K | emission F*K]`, where `K` is the
/// number of labels and `F` the number of known features. New features are
/// appended at the end, so existing ids and offsets never move.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<Label>,
    templates: FeatureTemplateSet,
    features: Vec<String>,
    feature_index: HashMap<String, u32>,
    weights: Vec<f64>,
}

/// A segment mapped onto a model's feature and label ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSegment {
    pub features: Vec<Vec<u32>>,
    pub gold: Vec<usize>,
}

impl EncodedSegment {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// `O`, then `B-`/`I-` pairs for each type (canonical order first).
pub fn label_alphabet(types: &[EntityType]) -> Vec<Label> {
    let mut types = types.to_vec();
    sort_entity_types(&mut types);
    types.dedup();
    let mut labels = vec![Label::Outside];
    for t in types {
        labels.push(Label::Begin(t.clone()));
        labels.push(Label::Inside(t));
    }
    labels
}

pub fn corpus_types(corpus: &Corpus) -> Vec<EntityType> {
    let mut types: Vec<EntityType> = corpus
        .segments()
        .flat_map(|s| s.tokens().iter().filter_map(|t| t.label.entity_type().cloned()))
        .collect();
    sort_entity_types(&mut types);
    types.dedup();
    types
}

impl CrfModel {
    /// Zero-weight model with the given labels and no features.
    pub fn new(labels: Vec<Label>, templates: FeatureTemplateSet) -> Result<Self, LabelerError> {
        check_alphabet(&labels)?;
        let k = labels.len();
        Ok(CrfModel {
            labels,
            templates,
            features: Vec::new(),
            feature_index: HashMap::new(),
            weights: vec![0.0; k * k + 2 * k],
        })
    }

    pub fn for_types(types: &[EntityType], templates: FeatureTemplateSet) -> Self {
        CrfModel::new(label_alphabet(types), templates).expect("alphabet is well formed")
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn templates(&self) -> &FeatureTemplateSet {
        &self.templates
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, feature: &str) -> Option<u32> {
        self.feature_index.get(feature).copied()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn transition_offset(&self, from: usize, to: usize) -> usize {
        from * self.labels.len() + to
    }

    pub fn start_offset(&self, label: usize) -> usize {
        let k = self.labels.len();
        k * k + label
    }

    pub fn end_offset(&self, label: usize) -> usize {
        let k = self.labels.len();
        k * k + k + label
    }

    pub fn emission_offset(&self, feature: u32, label: usize) -> usize {
        let k = self.labels.len();
        k * k + 2 * k + feature as usize * k + label
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.weights[self.transition_offset(from, to)]
    }

    pub fn start(&self, label: usize) -> f64 {
        self.weights[self.start_offset(label)]
    }

    pub fn end(&self, label: usize) -> f64 {
        self.weights[self.end_offset(label)]
    }

    pub fn emission(&self, feature: u32, label: usize) -> f64 {
        self.weights[self.emission_offset(feature, label)]
    }

    /// Adds a feature with zero weights; returns its id.
    pub fn add_feature(&mut self, feature: &str) -> u32 {
        if let Some(&id) = self.feature_index.get(feature) {
            return id;
        }
        let id = self.features.len() as u32;
        self.features.push(feature.to_string());
        self.feature_index.insert(feature.to_string(), id);
        self.weights.extend(std::iter::repeat_n(0.0, self.labels.len()));
        id
    }

    /// Adds every feature of the corpus in first-seen order.
    pub fn extend_vocabulary(&mut self, corpus: &Corpus) {
        for seg in corpus.segments() {
            for feats in extract_all(seg, &self.templates) {
                for f in feats {
                    self.add_feature(&f);
                }
            }
        }
    }

    /// Adds labels for unseen entity types, appended after the existing
    /// ones. Existing weights keep their values.
    pub fn extend_labels(&mut self, types: &[EntityType]) {
        let mut new_labels = self.labels.clone();
        let mut types = types.to_vec();
        sort_entity_types(&mut types);
        for t in types {
            for l in [Label::Begin(t.clone()), Label::Inside(t)] {
                if !new_labels.contains(&l) {
                    new_labels.push(l);
                }
            }
        }
        if new_labels.len() == self.labels.len() {
            return;
        }
        let grown = CrfModel {
            labels: new_labels,
            templates: self.templates.clone(),
            features: self.features.clone(),
            feature_index: self.feature_index.clone(),
            weights: Vec::new(),
        };
        let old = std::mem::replace(self, grown);
        let (k_old, k) = (old.labels.len(), self.labels.len());
        self.weights = vec![0.0; k * k + 2 * k + self.features.len() * k];
        for i in 0..k_old {
            for j in 0..k_old {
                let o = self.transition_offset(i, j);
                self.weights[o] = old.transition(i, j);
            }
            let o = self.start_offset(i);
            self.weights[o] = old.start(i);
            let o = self.end_offset(i);
            self.weights[o] = old.end(i);
            for f in 0..self.features.len() as u32 {
                let o = self.emission_offset(f, i);
                self.weights[o] = old.emission(f, i);
            }
        }
    }

    /// Maps a segment onto feature ids (unknown features dropped) and gold
    /// label ids. Fails if a gold label is outside the alphabet.
    pub fn encode(&self, segment: &Segment) -> Result<EncodedSegment, LabelerError> {
        let features = self.encode_features(segment);
        let gold = segment
            .tokens()
            .iter()
            .map(|t| {
                self.label_index(&t.label)
                    .ok_or_else(|| LabelerError::UnknownLabel(t.label.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EncodedSegment { features, gold })
    }

    pub fn encode_features(&self, segment: &Segment) -> Vec<Vec<u32>> {
        extract_all(segment, &self.templates)
            .into_iter()
            .map(|fs| fs.iter().filter_map(|f| self.feature_id(f)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        out.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        for l in &self.labels {
            put_str(&mut out, &l.to_string());
        }
        put_str(&mut out, &self.templates.to_string());
        out.extend_from_slice(&(self.features.len() as u32).to_le_bytes());
        for f in &self.features {
            put_str(&mut out, f);
        }
        out.extend_from_slice(&(self.weights.len() as u64).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LabelerError> {
        let corrupt = |why: &str| LabelerError::CorruptModel(why.to_string());
        if bytes.len() < MODEL_MAGIC.len() + 8 || &bytes[..6] != MODEL_MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let version = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(LabelerError::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(corrupt("checksum mismatch"));
        }
        let mut r = Reader { buf: body, pos: 10 };
        let n_labels = r.u32()? as usize;
        let labels = (0..n_labels)
            .map(|_| r.string()?.parse::<Label>().map_err(|_| corrupt("bad label")))
            .collect::<Result<Vec<_>, _>>()?;
        let templates: FeatureTemplateSet = r.string()?.parse()?;
        let n_features = r.u32()? as usize;
        let mut features = Vec::with_capacity(n_features);
        let mut feature_index = HashMap::with_capacity(n_features);
        for i in 0..n_features {
            let f = r.string()?;
            feature_index.insert(f.clone(), i as u32);
            features.push(f);
        }
        if feature_index.len() != features.len() {
            return Err(corrupt("duplicate feature"));
        }
        let n_weights = r.u64()? as usize;
        let k = labels.len();
        if n_weights != k * k + 2 * k + n_features * k {
            return Err(corrupt("weight count does not match labels and features"));
        }
        let mut weights = Vec::with_capacity(n_weights);
        for _ in 0..n_weights {
            weights.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
        }
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        check_alphabet(&labels).map_err(|_| corrupt("malformed label alphabet"))?;
        Ok(CrfModel {
            labels,
            templates,
            features,
            feature_index,
            weights,
        })
    }
}

fn check_alphabet(labels: &[Label]) -> Result<(), LabelerError> {
    let bad = |why: String| Err(LabelerError::InvalidAlphabet(why));
    if labels.first() != Some(&Label::Outside) {
        return bad("label 0 must be O".into());
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return bad(format!("duplicate label {l}"));
        }
        if let Some(t) = l.entity_type() {
            let pair = [Label::Begin(t.clone()), Label::Inside(t.clone())];
            if !pair.iter().all(|p| labels.contains(p)) {
                return bad(format!("type {t} needs both B- and I- labels"));
            }
        } else if i > 0 {
            return bad("O must appear once".into());
        }
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], LabelerError> {
        if self.pos + n > self.buf.len() {
            return Err(LabelerError::CorruptModel("truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, LabelerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, LabelerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String, LabelerError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| LabelerError::CorruptModel("invalid utf-8".into()))
    }
}

pub fn save_model(model: &CrfModel, path: &Path) -> Result<(), LabelerError> {
    crate::io::write_atomic(path, &model.to_bytes()).map_err(LabelerError::Io)
}

pub fn load_model(path: &Path) -> Result<CrfModel, LabelerError> {
    let bytes = std::fs::read(path).map_err(|e| LabelerError::Io(format!("{}: {e}", path.display())))?;
    CrfModel::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types(names: &[&str]) -> Vec<EntityType> {
        names.iter().map(|n| EntityType::new(n).unwrap()).collect()
    }

    fn sample() -> CrfModel {
        let mut m = CrfModel::for_types(&types(&["SKILL", "JOB_TITLE"]), FeatureTemplateSet::default());
        m.add_feature("lower=a");
        m.add_feature("bias");
        for (i, w) in m.weights_mut().iter_mut().enumerate() {
            *w = (i as f64 * 0.37).sin();
        }
        m
    }

    #[test]
    fn alphabet_order() {
        let labels = label_alphabet(&types(&["SKILL", "JOB_TITLE", "ZETA"]));
        let names: Vec<String> = labels.iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            ["O", "B-JOB_TITLE", "I-JOB_TITLE", "B-SKILL", "I-SKILL", "B-ZETA", "I-ZETA"]
        );
    }

    #[test]
    fn rejects_bad_alphabets() {
        let t = EntityType::new("SKILL").unwrap();
        assert!(CrfModel::new(vec![Label::Begin(t.clone()), Label::Outside, Label::Inside(t.clone())], FeatureTemplateSet::default()).is_err());
        assert!(CrfModel::new(vec![Label::Outside, Label::Begin(t)], FeatureTemplateSet::default()).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let m = sample();
        let back = CrfModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.feature_id("bias"), Some(1));
    }

    #[test]
    fn wrong_magic_is_corrupt() {
        let mut b = sample().to_bytes();
        b[0] = b'X';
        assert!(matches!(CrfModel::from_bytes(&b), Err(LabelerError::CorruptModel(_))));
    }

    #[test]
    fn version_mismatch_names_both() {
        let mut b = sample().to_bytes();
        b[6..10].copy_from_slice(&999u32.to_le_bytes());
        let err = CrfModel::from_bytes(&b).unwrap_err();
        assert_eq!(err, LabelerError::VersionMismatch { found: 999, expected: 1 });
        let msg = err.to_string();
        assert!(msg.contains("999") && msg.contains('1'), "{msg}");
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let mut b = sample().to_bytes();
        let mid = b.len() / 2;
        b[mid] ^= 0x40;
        assert!(matches!(CrfModel::from_bytes(&b), Err(LabelerError::CorruptModel(_))));
        let b = sample().to_bytes();
        assert!(CrfModel::from_bytes(&b[..b.len() - 3]).is_err());
    }

    #[test]
    fn extend_labels_keeps_weights() {
        let m = sample();
        let mut e = m.clone();
        e.extend_labels(&types(&["ACTIVITY"]));
        assert_eq!(e.num_labels(), m.num_labels() + 2);
        for i in 0..m.num_labels() {
            assert_eq!(e.start(i), m.start(i));
            assert_eq!(e.emission(1, i), m.emission(1, i));
            for j in 0..m.num_labels() {
                assert_eq!(e.transition(i, j), m.transition(i, j));
            }
        }
        assert_eq!(e.labels()[..m.num_labels()], m.labels()[..]);
    }
}
