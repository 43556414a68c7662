use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{validate_bio, Corpus, Segment};
use crate::eval::{entity_prf, EpochRecord};

use super::balance::{class_weights, oversample, ClassWeights};
use super::crf::{data_loss_and_gradient, viterbi_path};
use super::features::FeatureTemplateSet;
use super::model::{corpus_types, CrfModel, EncodedSegment};
use super::schedule::lr_at;
use super::LabelerError;

/// Training hyperparameters: 10% warm-up, 25 epochs, patience 5. The
/// target rate is sized for SGD on a CRF rather than a transformer (`2e-5`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub target_lr: f64,
    pub warmup_fraction: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub l2: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub class_weighting: bool,
    pub oversample: bool,
    pub oversample_factor: usize,
    pub seed: u64,
    pub batch_size: usize,
    /// Replaces the warm-up/decay schedule with a fixed rate (diagnostics).
    pub constant_lr: Option<f64>,
    #[serde(skip)]
    pub templates: FeatureTemplateSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target_lr: 0.1,
            warmup_fraction: 0.10,
            max_epochs: 25,
            patience: 5,
            l2: 1e-4,
            clamp_min: 0.1,
            clamp_max: 10.0,
            class_weighting: true,
            oversample: true,
            oversample_factor: 3,
            seed: 0,
            batch_size: 8,
            constant_lr: None,
            templates: FeatureTemplateSet::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LabelerError> {
        let bad = |s: &str| Err(LabelerError::InvalidConfig(s.to_string()));
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return bad("warmup_fraction must lie in (0, 1)");
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return bad("need 0 < max_epochs and patience < max_epochs");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.target_lr > 0.0 && self.target_lr.is_finite()) {
            return bad("target_lr must be positive");
        }
        if self.constant_lr.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return bad("constant_lr must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        if !(self.clamp_min > 0.0 && self.clamp_min <= self.clamp_max && self.clamp_max.is_finite()) {
            return bad("need 0 < clamp_min <= clamp_max");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.oversample_factor == 0 {
            return bad("oversample_factor must be at least 1");
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        match self.constant_lr {
            Some(r) => r,
            None => lr_at(step, total_steps, self.warmup_fraction, self.target_lr),
        }
    }
}

/// Tracks the best validation score and the number of epochs since it
/// last improved. Only a strict increase counts as progress.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records an epoch score; true if it is a new best.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        if score > self.best {
            self.best = score;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRun {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_score: f64,
}

/// Runs `epoch_fn(state, 1), epoch_fn(state, 2), ...` until `max_epochs`
/// or until the returned score has not improved for `patience` consecutive
/// epochs. `on_best` fires whenever an epoch sets a new best.
pub fn run_epochs<S, E>(
    max_epochs: usize,
    patience: usize,
    state: &mut S,
    mut epoch_fn: impl FnMut(&mut S, usize) -> Result<f64, E>,
    mut on_best: impl FnMut(&mut S, usize),
) -> Result<EpochRun, E> {
    let mut stop = EarlyStopping::new(patience);
    let mut run = 0;
    for epoch in 1..=max_epochs {
        let score = epoch_fn(state, epoch)?;
        run = epoch;
        if stop.observe(epoch, score) {
            on_best(state, epoch);
        }
        if stop.should_stop() {
            break;
        }
    }
    Ok(EpochRun {
        epochs_run: run,
        best_epoch: stop.best_epoch(),
        best_score: stop.best(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CrfModel,
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Segments seen per epoch after oversampling.
    pub train_segments: usize,
}

fn check_bio(corpus: &Corpus, which: &str) -> Result<(), LabelerError> {
    for (i, seg) in corpus.segments().enumerate() {
        if let Some(v) = validate_bio(seg).first() {
            return Err(LabelerError::InvalidInput(format!(
                "{which} segment {i}: token {} is {}",
                v.index, v.reason
            )));
        }
    }
    Ok(())
}

/// Builds the starting model: `init` extended with new labels and features,
/// or a fresh zero model.
pub fn prepare_model(train: &Corpus, val: &Corpus, config: &TrainConfig, init: Option<&CrfModel>) -> CrfModel {
    let mut types = corpus_types(train);
    types.extend(corpus_types(val));
    let mut model = match init {
        Some(m) => {
            let mut m = m.clone();
            m.extend_labels(&types);
            m
        }
        None => CrfModel::for_types(&types, config.templates.clone()),
    };
    model.extend_vocabulary(train);
    model
}

pub fn decode_f1(model: &CrfModel, val: &Corpus, val_feats: &[Vec<Vec<u32>>]) -> Result<crate::eval::EvalReport, LabelerError> {
    let mut i = 0;
    let pred = val.map_segments(|_, _, s| {
        let (path, _) = viterbi_path(model, &val_feats[i]);
        i += 1;
        let mut labels: Vec<_> = path.into_iter().map(|j| model.labels()[j].clone()).collect();
        crate::corpus::repair_labels(&mut labels);
        s.relabel(labels)
    });
    Ok(entity_prf(val, &pred)?)
}

/// Mini-batch SGD on the class-weighted CRF likelihood with L2 decay,
/// validated with entity-level F1 after every epoch. Returns the weights of
/// the best epoch (earliest on ties).
pub fn train(
    train: &Corpus,
    val: &Corpus,
    config: &TrainConfig,
    init: Option<&CrfModel>,
) -> Result<TrainOutcome, LabelerError> {
    config.validate()?;
    if train.token_count() == 0 {
        return Err(LabelerError::EmptyCorpus);
    }
    check_bio(train, "train")?;
    check_bio(val, "validation")?;
    if val.entity_total() == 0 {
        return Err(LabelerError::NoValidationEntities);
    }

    let model = prepare_model(train, val, config, init);
    let weights = if config.class_weighting {
        class_weights(train, config.clamp_min, config.clamp_max)?
    } else {
        ClassWeights::uniform()
    };
    let cw = weights.for_alphabet(model.labels());

    let sampled = if config.oversample {
        oversample(train, config.oversample_factor)?
    } else {
        train.clone()
    };
    let encoded: Vec<EncodedSegment> = sampled
        .segments()
        .map(|s| model.encode(s))
        .collect::<Result<_, _>>()?;
    let val_feats: Vec<Vec<Vec<u32>>> = val.segments().map(|s| model.encode_features(s)).collect();

    let n = encoded.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.max_epochs;

    struct State {
        model: CrfModel,
        best_weights: Vec<f64>,
        records: Vec<EpochRecord>,
        order: Vec<usize>,
        grad: Vec<f64>,
        step: usize,
    }
    let mut st = State {
        best_weights: model.weights().to_vec(),
        grad: vec![0.0; model.weights().len()],
        model,
        records: Vec::new(),
        order: (0..n).collect(),
        step: 0,
    };

    let run = run_epochs(
        config.max_epochs,
        config.patience,
        &mut st,
        |st, epoch| -> Result<f64, LabelerError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(epoch as u64);
            st.order.sort_unstable();
            st.order.shuffle(&mut rng);

            let mut loss_sum = 0.0;
            for bi in 0..steps_per_epoch {
                let batch = &st.order[bi * config.batch_size..((bi + 1) * config.batch_size).min(n)];
                let lr = config.lr_at(st.step, total_steps);
                st.step += 1;
                st.grad.iter_mut().for_each(|g| *g = 0.0);
                let mut batch_loss = 0.0;
                for &i in batch {
                    let (l, g) = data_loss_and_gradient(&st.model, &encoded[i], &cw);
                    batch_loss += l;
                    g.add_to(&st.model, &mut st.grad, 1.0 / batch.len() as f64);
                }
                let w = st.model.weights_mut();
                let reg = 0.5 * config.l2 * w.iter().map(|x| x * x).sum::<f64>();
                loss_sum += batch_loss / batch.len() as f64 + reg;
                let decay = 1.0 - lr * config.l2;
                for (wi, gi) in w.iter_mut().zip(&st.grad) {
                    *wi = *wi * decay - lr * gi;
                }
            }
            if !st.model.is_finite() {
                return Err(LabelerError::NonFinite);
            }
            let report = decode_f1(&st.model, val, &val_feats)?;
            let rec = EpochRecord {
                epoch,
                train_loss: loss_sum / steps_per_epoch as f64,
                val_precision: report.precision(),
                val_recall: report.recall(),
                val_f1: report.f1(),
            };
            log::info!(
                "epoch {epoch}: loss {:.6} P {:.4} R {:.4} F1 {:.4}",
                rec.train_loss,
                rec.val_precision,
                rec.val_recall,
                rec.val_f1
            );
            st.records.push(rec);
            Ok(rec.val_f1)
        },
        |st, _| st.best_weights.copy_from_slice(st.model.weights()),
    )?;

    let State {
        mut model,
        best_weights,
        records,
        ..
    } = st;
    model.weights_mut().copy_from_slice(&best_weights);
    Ok(TrainOutcome {
        model,
        records,
        best_epoch: run.best_epoch,
        train_segments: n,
    })
}

/// Full-data loss (mean weighted NLL plus the L2 term) for diagnostics.
pub fn corpus_loss(model: &CrfModel, corpus: &Corpus, class_weights: &[f64], l2: f64) -> Result<f64, LabelerError> {
    let segs: Vec<&Segment> = corpus.segments().collect();
    if segs.is_empty() {
        return Err(LabelerError::EmptyCorpus);
    }
    let mut total = 0.0;
    for s in &segs {
        let enc = model.encode(s)?;
        total += data_loss_and_gradient(model, &enc, class_weights).0;
    }
    let reg = 0.5 * l2 * model.weights().iter().map(|x| x * x).sum::<f64>();
    Ok(total / segs.len() as f64 + reg)
}
