//! Exact inference for the linear-chain CRF: log-space forward/backward,
//! Viterbi decoding, and the class-weighted negative log-likelihood.

use crate::corpus::{repair_labels, Label, Segment};

use super::model::{CrfModel, EncodedSegment};

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `T x K` emission scores, row-major.
pub fn emission_scores(model: &CrfModel, features: &[Vec<u32>]) -> Vec<f64> {
    let k = model.num_labels();
    let mut out = vec![0.0; features.len() * k];
    let w = model.weights();
    for (t, feats) in features.iter().enumerate() {
        let row = &mut out[t * k..(t + 1) * k];
        for &f in feats {
            let base = model.emission_offset(f, 0);
            for (r, wv) in row.iter_mut().zip(&w[base..base + k]) {
                *r += wv;
            }
        }
    }
    out
}

/// Unnormalized score of one label path.
pub fn sequence_score(model: &CrfModel, features: &[Vec<u32>], labels: &[usize]) -> f64 {
    let k = model.num_labels();
    let em = emission_scores(model, features);
    let t_len = labels.len();
    let mut s = 0.0;
    for (t, &y) in labels.iter().enumerate() {
        s += em[t * k + y];
        s += if t == 0 {
            model.start(y)
        } else {
            model.transition(labels[t - 1], y)
        };
    }
    if t_len > 0 {
        s += model.end(labels[t_len - 1]);
    }
    s
}

struct Lattice {
    k: usize,
    emissions: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_z: f64,
}

fn forward_backward(model: &CrfModel, features: &[Vec<u32>]) -> Lattice {
    let k = model.num_labels();
    let t_len = features.len();
    let em = emission_scores(model, features);
    let mut alpha = vec![0.0; t_len * k];
    let mut beta = vec![0.0; t_len * k];
    for j in 0..k {
        alpha[j] = model.start(j) + em[j];
    }
    for t in 1..t_len {
        for j in 0..k {
            let prev = &alpha[(t - 1) * k..t * k];
            alpha[t * k + j] = em[t * k + j]
                + log_sum_exp((0..k).map(|i| prev[i] + model.transition(i, j)));
        }
    }
    let last = (t_len - 1) * k;
    for i in 0..k {
        beta[last + i] = model.end(i);
    }
    for t in (0..t_len - 1).rev() {
        for i in 0..k {
            let v = log_sum_exp(
                (0..k).map(|j| model.transition(i, j) + em[(t + 1) * k + j] + beta[(t + 1) * k + j]),
            );
            beta[t * k + i] = v;
        }
    }
    let log_z = log_sum_exp((0..k).map(|j| alpha[last + j] + model.end(j)));
    Lattice {
        k,
        emissions: em,
        alpha,
        beta,
        log_z,
    }
}

/// Log partition function `log Z(x)` via the forward algorithm.
pub fn log_partition(model: &CrfModel, features: &[Vec<u32>]) -> f64 {
    if features.is_empty() {
        return 0.0;
    }
    forward_backward(model, features).log_z
}

/// Gradient of the data term, split into a dense part over transition,
/// start and end weights and per-position emission rows.
#[derive(Debug, Clone)]
pub struct SparseGradient {
    /// Dense over the first `K*K + 2K` weights.
    pub dense: Vec<f64>,
    /// `(feature ids, K deltas)` per position; every listed feature gets the row.
    pub rows: Vec<(Vec<u32>, Vec<f64>)>,
}

impl SparseGradient {
    /// Adds `scale * self` into a full-length gradient vector.
    pub fn add_to(&self, model: &CrfModel, out: &mut [f64], scale: f64) {
        let k = model.num_labels();
        for (o, g) in out.iter_mut().zip(&self.dense) {
            *o += scale * g;
        }
        for (feats, row) in &self.rows {
            for &f in feats {
                let base = model.emission_offset(f, 0);
                for (o, g) in out[base..base + k].iter_mut().zip(row) {
                    *o += scale * g;
                }
            }
        }
    }
}

/// Mean class weight over the gold labels of a segment.
pub fn segment_weight(gold: &[usize], class_weights: &[f64]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    gold.iter().map(|&y| class_weights[y]).sum::<f64>() / gold.len() as f64
}

/// Class-weighted negative log-likelihood without the L2 term, and its
/// gradient. The whole sequence term `log Z - score(gold)` is scaled by the
/// mean class weight of the gold labels, so the loss stays bounded below by
/// zero and reduces to plain likelihood under unit weights.
pub fn data_loss_and_gradient(
    model: &CrfModel,
    seg: &EncodedSegment,
    class_weights: &[f64],
) -> (f64, SparseGradient) {
    let k = model.num_labels();
    let t_len = seg.len();
    let lat = forward_backward(model, &seg.features);
    let Lattice {
        emissions: em,
        alpha,
        beta,
        log_z,
        ..
    } = &lat;
    debug_assert_eq!(lat.k, k);
    let c = segment_weight(&seg.gold, class_weights);

    let mut dense = vec![0.0; k * k + 2 * k];
    let mut rows = Vec::with_capacity(t_len);
    let mut gold_score = 0.0;

    for t in 0..t_len {
        let mut row: Vec<f64> = (0..k)
            .map(|j| c * (alpha[t * k + j] + beta[t * k + j] - log_z).exp())
            .collect();
        let y = seg.gold[t];
        row[y] -= c;
        gold_score += em[t * k + y];
        if t == 0 {
            for j in 0..k {
                dense[model.start_offset(j)] += c * (alpha[j] + beta[j] - log_z).exp();
            }
            dense[model.start_offset(y)] -= c;
            gold_score += model.start(y);
        } else {
            for i in 0..k {
                for j in 0..k {
                    let p = (alpha[(t - 1) * k + i]
                        + model.transition(i, j)
                        + em[t * k + j]
                        + beta[t * k + j]
                        - log_z)
                        .exp();
                    dense[model.transition_offset(i, j)] += c * p;
                }
            }
            let prev = seg.gold[t - 1];
            dense[model.transition_offset(prev, y)] -= c;
            gold_score += model.transition(prev, y);
        }
        if t + 1 == t_len {
            for j in 0..k {
                dense[model.end_offset(j)] += c * (alpha[t * k + j] + beta[t * k + j] - log_z).exp();
            }
            dense[model.end_offset(y)] -= c;
            gold_score += model.end(y);
        }
        rows.push((seg.features[t].clone(), row));
    }
    (c * (log_z - gold_score), SparseGradient { dense, rows })
}

/// Loss `c * (log Z - gold score) + l2/2 * |w|^2` and its full gradient.
pub fn nll_and_gradient(
    model: &CrfModel,
    seg: &EncodedSegment,
    class_weights: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let (data, sparse) = data_loss_and_gradient(model, seg, class_weights);
    let w = model.weights();
    let mut grad: Vec<f64> = w.iter().map(|x| l2 * x).collect();
    sparse.add_to(model, &mut grad, 1.0);
    let reg = 0.5 * l2 * w.iter().map(|x| x * x).sum::<f64>();
    (data + reg, grad)
}

/// Convenience wrapper over a labeled segment.
pub fn segment_nll_and_gradient(
    model: &CrfModel,
    segment: &Segment,
    class_weights: &[f64],
    l2: f64,
) -> Result<(f64, Vec<f64>), super::LabelerError> {
    let enc = model.encode(segment)?;
    Ok(nll_and_gradient(model, &enc, class_weights, l2))
}

/// Highest-scoring label path and its score. Backpointer ties go to the
/// lowest label index.
pub fn viterbi_path(model: &CrfModel, features: &[Vec<u32>]) -> (Vec<usize>, f64) {
    let k = model.num_labels();
    let t_len = features.len();
    if t_len == 0 {
        return (Vec::new(), 0.0);
    }
    let em = emission_scores(model, features);
    let mut delta = vec![0.0; t_len * k];
    let mut back = vec![0usize; t_len * k];
    for j in 0..k {
        delta[j] = model.start(j) + em[j];
    }
    for t in 1..t_len {
        for j in 0..k {
            let mut best_i = 0;
            let mut best = f64::NEG_INFINITY;
            for i in 0..k {
                let s = delta[(t - 1) * k + i] + model.transition(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            delta[t * k + j] = best + em[t * k + j];
            back[t * k + j] = best_i;
        }
    }
    let last = (t_len - 1) * k;
    let mut best_j = 0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..k {
        let s = delta[last + j] + model.end(j);
        if s > best {
            best = s;
            best_j = j;
        }
    }
    let mut path = vec![0; t_len];
    path[t_len - 1] = best_j;
    for t in (1..t_len).rev() {
        path[t - 1] = back[t * k + path[t]];
    }
    (path, best)
}

/// Decodes a segment and returns BIO-repaired labels.
pub fn viterbi(model: &CrfModel, segment: &Segment) -> Vec<Label> {
    let feats = model.encode_features(segment);
    let (path, _) = viterbi_path(model, &feats);
    let mut labels: Vec<Label> = path.into_iter().map(|i| model.labels()[i].clone()).collect();
    repair_labels(&mut labels);
    labels
}

/// Relabels every segment with Viterbi output.
pub fn tag_corpus(model: &CrfModel, corpus: &crate::corpus::Corpus) -> crate::corpus::Corpus {
    corpus.map_segments(|_, _, s| s.relabel(viterbi(model, s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType;
    use crate::labeler::FeatureTemplateSet;

    fn zero_model() -> CrfModel {
        let types = vec![EntityType::new("SKILL").unwrap()];
        let mut m = CrfModel::for_types(&types, FeatureTemplateSet::default());
        m.add_feature("bias");
        m
    }

    #[test]
    fn zero_weights_give_uniform_loss() {
        let m = zero_model();
        let seg = EncodedSegment {
            features: vec![vec![0]; 4],
            gold: vec![0, 1, 2, 0],
        };
        let (loss, _) = nll_and_gradient(&m, &seg, &[1.0; 3], 0.0);
        assert!((loss - 4.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn weighted_loss_is_bounded_and_linear() {
        let mut m = zero_model();
        let seg = EncodedSegment {
            features: vec![vec![0]; 3],
            gold: vec![1, 2, 0],
        };
        let e = m.emission_offset(0, 1);
        m.weights_mut()[e] = 50.0;
        let cw = [0.2, 5.0, 5.0];
        let (l1, g1) = nll_and_gradient(&m, &seg, &cw, 0.0);
        assert!(l1 >= 0.0);
        let cw2: Vec<f64> = cw.iter().map(|c| 2.0 * c).collect();
        let (l2, g2) = nll_and_gradient(&m, &seg, &cw2, 0.0);
        assert!((l2 - 2.0 * l1).abs() < 1e-9);
        assert!(g1.iter().zip(&g2).all(|(a, b)| (2.0 * a - b).abs() < 1e-9));
        assert!((segment_weight(&seg.gold, &cw) - 10.2 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_decode_to_outside() {
        let m = zero_model();
        let seg = Segment::from_pairs(&[("a", "O"), ("b", "B-SKILL"), ("c", "O")]).unwrap();
        assert!(viterbi(&m, &seg).iter().all(Label::is_outside));
    }

    #[test]
    fn single_token_picks_best_unary() {
        let mut m = zero_model();
        let s = m.start_offset(2);
        m.weights_mut()[s] = 0.5;
        let e = m.end_offset(1);
        m.weights_mut()[e] = 0.4;
        let (path, score) = viterbi_path(&m, &[vec![0]]);
        assert_eq!(path, vec![2]);
        assert!((score - 0.5).abs() < 1e-15);
        // I-SKILL alone is repaired to B-SKILL.
        let seg = Segment::from_pairs(&[("a", "O")]).unwrap();
        assert_eq!(viterbi(&m, &seg), vec![Label::Begin(EntityType::new("SKILL").unwrap())]);
    }
}
