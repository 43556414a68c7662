//! Independent oracles and random generators shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use natner::corpus::{Corpus, Document, EntityType, Label, Segment, Token};
use natner::labeler::{CrfModel, EncodedSegment, FeatureTemplateSet};
use rand::Rng;

/// Spans of a label-string sequence after the I->B repair rule, found by
/// testing every `(start, end)` pair.
pub fn oracle_spans(labels: &[String]) -> BTreeSet<(String, usize, usize)> {
    let mut fixed: Vec<(char, String)> = Vec::new();
    for l in labels {
        let (tag, ty) = match l.split_once('-') {
            Some((t, ty)) => (t.chars().next().unwrap(), ty.to_string()),
            None => ('O', String::new()),
        };
        let continues = matches!(fixed.last(), Some((p, pty)) if *p != 'O' && *pty == ty);
        let tag = if tag == 'I' && !continues { 'B' } else { tag };
        fixed.push((tag, ty));
    }
    let n = fixed.len();
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..=n {
            let (t0, ty) = &fixed[i];
            if *t0 != 'B' {
                continue;
            }
            let inner = fixed[i + 1..j].iter().all(|(t, y)| *t == 'I' && y == ty);
            let closed = j == n || !(fixed[j].0 == 'I' && fixed[j].1 == *ty);
            if inner && closed {
                out.insert((ty.clone(), i, j));
            }
        }
    }
    out
}

/// `(tp, fp, fn)` per type plus the micro total, from set matching.
pub fn oracle_counts(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
) -> (BTreeMap<String, (usize, usize, usize)>, (usize, usize, usize)) {
    let mut g = BTreeSet::new();
    let mut p = BTreeSet::new();
    for (s, (gl, pl)) in gold.iter().zip(pred).enumerate() {
        g.extend(oracle_spans(gl).into_iter().map(|(t, a, b)| (t, s, a, b)));
        p.extend(oracle_spans(pl).into_iter().map(|(t, a, b)| (t, s, a, b)));
    }
    let mut per: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for x in p.iter() {
        let e = per.entry(x.0.clone()).or_default();
        if g.contains(x) {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    for x in g.iter().filter(|x| !p.contains(*x)) {
        per.entry(x.0.clone()).or_default().2 += 1;
    }
    let micro = per
        .values()
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    (per, micro)
}

pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

pub fn label_strings(c: &Corpus) -> Vec<Vec<String>> {
    c.segments()
        .map(|s| s.labels().iter().map(|l| l.to_string()).collect())
        .collect()
}

/// Plain two-row edit distance over chars.
pub fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

const TYPES: [&str; 3] = ["SKILL", "SUBJECT", "JOB_TITLE"];

pub fn random_label(rng: &mut impl Rng, types: usize) -> Label {
    let r = rng.random_range(0..1 + 2 * types);
    if r == 0 {
        return Label::Outside;
    }
    let t = EntityType::new(TYPES[(r - 1) / 2]).unwrap();
    if r % 2 == 1 {
        Label::Begin(t)
    } else {
        Label::Inside(t)
    }
}

/// Arbitrary (possibly BIO-invalid) label sequence.
pub fn random_labels(rng: &mut impl Rng, len: usize, types: usize) -> Vec<Label> {
    (0..len).map(|_| random_label(rng, types)).collect()
}

/// Random label sequence that is already BIO-valid.
pub fn random_valid_labels(rng: &mut impl Rng, len: usize, types: usize) -> Vec<Label> {
    let mut out: Vec<Label> = Vec::with_capacity(len);
    for _ in 0..len {
        let mut l = random_label(rng, types);
        if let Label::Inside(t) = &l {
            let ok = matches!(out.last(), Some(Label::Begin(p)) | Some(Label::Inside(p)) if p == t);
            if !ok {
                l = Label::Begin(t.clone());
            }
        }
        out.push(l);
    }
    out
}

const ALPHABET: &[char] = &[
    'a', 'b', 'e', 'l', 'o', 'r', 's', 'ä', 'ß', 'Z', '0', '7', ',', '.', '-', '\'', ';', '"', '€', '字',
];

pub fn random_word(rng: &mut impl Rng, max_len: usize) -> String {
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

pub fn segment(words: &[String], labels: Vec<Label>) -> Segment {
    Segment::new(
        words
            .iter()
            .zip(labels)
            .map(|(w, l)| Token::new(w.clone(), l).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Corpus of up to `max_docs` documents with random words and valid labels.
pub fn random_corpus(rng: &mut impl Rng, max_docs: usize, max_segs: usize, max_len: usize) -> Corpus {
    let docs = (0..rng.random_range(1..=max_docs))
        .map(|d| {
            let segs = (0..rng.random_range(0..=max_segs))
                .map(|_| {
                    let n = rng.random_range(1..=max_len);
                    let words: Vec<String> = (0..n).map(|_| random_word(rng, 8)).collect();
                    segment(&words, random_valid_labels(rng, n, 3))
                })
                .collect();
            let id = if d == 0 && rng.random_bool(0.3) {
                String::new()
            } else {
                format!("doc {d} {}", random_word(rng, 4))
            };
            Document::new(id, segs)
        })
        .collect();
    Corpus::new(docs).unwrap()
}

/// Model with `types` entity types, `n_features` named features and
/// uniform random weights in `[-scale, scale]`.
pub fn random_model(rng: &mut impl Rng, types: usize, n_features: usize, scale: f64) -> CrfModel {
    let tys: Vec<EntityType> = TYPES[..types].iter().map(|t| EntityType::new(t).unwrap()).collect();
    let mut m = CrfModel::for_types(&tys, FeatureTemplateSet::default());
    for f in 0..n_features {
        m.add_feature(&format!("f{f}"));
    }
    for w in m.weights_mut() {
        *w = rng.random_range(-scale..=scale);
    }
    m
}

pub fn random_encoded(rng: &mut impl Rng, model: &CrfModel, len: usize) -> EncodedSegment {
    let n_feat = model.features().len() as u32;
    let k = model.num_labels();
    let features = (0..len)
        .map(|_| {
            let mut f: Vec<u32> = (0..n_feat).filter(|_| rng.random_bool(0.5)).collect();
            f.dedup();
            f
        })
        .collect();
    let gold = (0..len).map(|_| rng.random_range(0..k)).collect();
    EncodedSegment { features, gold }
}

/// Score of one path, read straight from the flat weight layout
/// `[transitions K*K | start K | end K | emissions F*K]`.
pub fn path_score(model: &CrfModel, feats: &[Vec<u32>], path: &[usize]) -> f64 {
    let k = model.num_labels();
    let w = model.weights();
    let mut s = 0.0;
    for (t, &y) in path.iter().enumerate() {
        for &f in &feats[t] {
            s += w[k * k + 2 * k + f as usize * k + y];
        }
        s += if t == 0 { w[k * k + y] } else { w[path[t - 1] * k + y] };
    }
    if let Some(&last) = path.last() {
        s += w[k * k + k + last];
    }
    s
}

/// Exhaustive `(max score, argmax path, log Z)` over all `K^T` paths.
pub fn brute_force(model: &CrfModel, feats: &[Vec<u32>]) -> (f64, Vec<usize>, f64) {
    let k = model.num_labels();
    let t = feats.len();
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    let mut scores = Vec::new();
    let mut path = vec![0usize; t];
    loop {
        let s = path_score(model, feats, &path);
        scores.push(s);
        if s > best {
            best = s;
            arg = path.clone();
        }
        let mut i = t;
        loop {
            if i == 0 {
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z = m + scores.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
                return (best, arg, z);
            }
            i -= 1;
            path[i] += 1;
            if path[i] < k {
                break;
            }
            path[i] = 0;
        }
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
