use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{
    apply_assignment, parse_conll, stratified_assignment, Corpus, Segment,
};
use crate::eval::{entity_prf, EpochRecord, EvalReport};
use crate::io::{read_text, write_atomic};
use crate::labeler::{tag_corpus, train, CrfModel, TrainConfig, TrainOutcome};
use crate::noise::{check_parallel, inject_noise, load_error_table, make_artificial, ErrorTable};

use super::config::{ExperimentConfig, ExperimentSettings, ValidationMode};
use super::gazetteer::load_gazetteers;
use super::PipelineError;

/// Offsets added to the master seed for each derived random stream.
pub const SEED_NOISY_TRAIN: u64 = 1;
pub const SEED_NOISY_VAL: u64 = 2;
pub const SEED_NOISY_TEST: u64 = 3;
pub const SEED_ARTIFICIAL: u64 = 4;
pub const SEED_PRETRAIN_HOLDOUT: u64 = 5;

/// Full-scale scores of a transformer setup, kept for comparison only.
pub const REFERENCE_ARTIFICIAL_F1: f64 = 0.779;
pub const REFERENCE_JOB_TITLE_F1: f64 = 0.879;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Noisy,
    Clean,
    Artificial,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Noisy, Variant::Clean, Variant::Artificial];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Noisy => "noisy",
            Variant::Clean => "clean",
            Variant::Artificial => "artificial",
        }
    }

    /// Whether this variant early-stops on the noisy validation partition.
    pub fn validates_on_noisy(self, mode: ValidationMode) -> bool {
        match mode {
            ValidationMode::Matched => self != Variant::Clean,
            ValidationMode::Noisy => true,
            ValidationMode::Clean => false,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (noisy|clean|artificial)"))
    }
}

fn stage<E: fmt::Display>(name: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage: name,
        message: e.to_string(),
    }
}

/// Splits off a validation holdout of at most 10% of segments and at most
/// `max_tokens` tokens. Corpora under ten segments validate on themselves.
pub fn pretrain_holdout(corpus: &Corpus, max_tokens: usize, seed: u64) -> (Corpus, Corpus) {
    let segs: Vec<&Segment> = corpus.segments().collect();
    let n = segs.len();
    if n < 10 {
        return (corpus.clone(), corpus.clone());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = vec![false; n];
    let (mut count, mut tokens) = (0, 0);
    for &i in &order {
        if count == n / 10 || tokens + segs[i].len() > max_tokens {
            break;
        }
        held[i] = true;
        count += 1;
        tokens += segs[i].len();
    }
    if count == 0 {
        return (corpus.clone(), corpus.clone());
    }
    let assignment: Vec<usize> = held.iter().map(|&h| if h { 2 } else { 0 }).collect();
    let [train, _, val] = apply_assignment(corpus, &assignment);
    (train, val)
}

/// Trains the intermediate model on O-free gazetteer data with
/// oversampling off and uniform class weights.
pub fn pretrain(
    gazetteer_corpus: &Corpus,
    config: &TrainConfig,
    max_val_tokens: usize,
) -> Result<TrainOutcome, PipelineError> {
    let o_count = gazetteer_corpus
        .segments()
        .flat_map(|s| s.tokens())
        .filter(|t| t.label.is_outside())
        .count();
    if o_count > 0 {
        return Err(PipelineError::OLabelsInPretraining(o_count));
    }
    let cfg = TrainConfig {
        oversample: false,
        class_weighting: false,
        ..config.clone()
    };
    let (tr, val) = pretrain_holdout(gazetteer_corpus, max_val_tokens, cfg.seed.wrapping_add(SEED_PRETRAIN_HOLDOUT));
    Ok(train(&tr, &val, &cfg, None)?)
}

/// Builds the training corpus of one variant.
pub fn variant_corpus(
    variant: Variant,
    clean_train: &Corpus,
    noisy_train: &Corpus,
    table: &ErrorTable,
    seed: u64,
    lambda: f64,
) -> Result<Corpus, PipelineError> {
    check_parallel(noisy_train, clean_train)?;
    Ok(match variant {
        Variant::Noisy => noisy_train.clone(),
        Variant::Clean => clean_train.clone(),
        Variant::Artificial => make_artificial(clean_train, table, seed, lambda)?,
    })
}

/// Fine-tunes one variant from `init`. `seed` drives the artificial copy's
/// noise; the training config carries its own shuffling seed.
#[allow(clippy::too_many_arguments)]
pub fn finetune_variant(
    variant: Variant,
    clean_train: &Corpus,
    noisy_train: &Corpus,
    table: &ErrorTable,
    val: &Corpus,
    init: Option<&CrfModel>,
    config: &TrainConfig,
    seed: u64,
    lambda: f64,
) -> Result<(Corpus, TrainOutcome), PipelineError> {
    let data = variant_corpus(variant, clean_train, noisy_train, table, seed, lambda)?;
    log::info!("{variant}: {} training segments, {} tokens", data.segment_count(), data.token_count());
    let outcome = train(&data, val, config, init)?;
    Ok((data, outcome))
}

/// In-memory experiment inputs.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub clean: Corpus,
    pub noisy: Option<Corpus>,
    pub table: ErrorTable,
    pub gazetteer_corpus: Option<Corpus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSizes {
    pub segments: usize,
    pub tokens: usize,
    pub entities: usize,
}

impl PartitionSizes {
    pub fn of(c: &Corpus) -> Self {
        PartitionSizes {
            segments: c.segment_count(),
            tokens: c.token_count(),
            entities: c.entity_total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PretrainSummary {
    pub data: PartitionSizes,
    pub best_epoch: usize,
    pub curve: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub training_data: PartitionSizes,
    pub best_epoch: usize,
    pub test: EvalReport,
    pub curve: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceScores {
    pub note: &'static str,
    pub artificial_f1: f64,
    pub job_title_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub lambda: f64,
    pub ratios: [f64; 3],
    pub validation: ValidationMode,
    pub noise_source: &'static str,
    pub split: [PartitionSizes; 3],
    pub pretrain: Option<PretrainSummary>,
    pub variants: Vec<VariantResult>,
    pub reference: ReferenceScores,
}

impl ExperimentReport {
    pub fn variant(&self, v: Variant) -> &VariantResult {
        self.variants
            .iter()
            .find(|r| r.variant == v)
            .expect("every variant is reported")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("model,precision,recall,f1\n");
        for r in &self.variants {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                r.variant,
                r.test.precision(),
                r.test.recall(),
                r.test.f1()
            ));
        }
        out
    }

    pub fn data_amount_csv(&self) -> String {
        let mut out = String::from("model,entities,tokens\n");
        for r in &self.variants {
            out.push_str(&format!("{},{},{}\n", r.variant, r.training_data.entities, r.training_data.tokens));
        }
        out
    }

    /// File name and contents of every bundle member, in write order.
    pub fn bundle(&self) -> Vec<(&'static str, String)> {
        let art = &self.variant(Variant::Artificial).test;
        vec![
            ("report.json", self.to_json()),
            ("accuracy.csv", self.accuracy_csv()),
            ("accuracy_entities.csv", art.per_entity_csv()),
            ("confusion.csv", art.confusion.to_csv()),
            ("data_amount.csv", self.data_amount_csv()),
        ]
    }

    /// Renders everything first, then writes each file atomically.
    pub fn write_bundle(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in self.bundle() {
            write_atomic(&dir.join(name), body.as_bytes()).map_err(PipelineError::Io)?;
        }
        Ok(())
    }
}

/// Clean and noisy partitions `[train, test, val]`.
#[derive(Debug, Clone)]
pub struct Partitions {
    pub clean: [Corpus; 3],
    pub noisy: [Corpus; 3],
}

/// Splits the clean corpus and produces the parallel noisy partitions,
/// either by splitting a supplied noisy corpus the same way or by injecting
/// noise with per-partition seeds.
pub fn build_partitions(data: &ExperimentData, s: &ExperimentSettings) -> Result<Partitions, PipelineError> {
    let assignment = stratified_assignment(&data.clean, s.ratios, s.seed).map_err(stage("split"))?;
    let clean = apply_assignment(&data.clean, &assignment);
    let noisy = match &data.noisy {
        Some(n) => {
            check_parallel(n, &data.clean).map_err(stage("noisy corpus"))?;
            apply_assignment(n, &assignment)
        }
        None => {
            let offsets = [SEED_NOISY_TRAIN, SEED_NOISY_TEST, SEED_NOISY_VAL];
            let mut out: Vec<Corpus> = Vec::with_capacity(3);
            for (part, off) in clean.iter().zip(offsets) {
                out.push(inject_noise(part, &data.table, s.seed.wrapping_add(off), s.lambda).map_err(stage("inject"))?);
            }
            out.try_into().expect("three partitions")
        }
    };
    Ok(Partitions { clean, noisy })
}

/// Runs split, noise, pretraining, the three fine-tunings, and evaluation on
/// the shared noisy test partition.
pub fn run_experiment_with(data: &ExperimentData, s: &ExperimentSettings) -> Result<ExperimentReport, PipelineError> {
    s.validate()?;
    let parts = build_partitions(data, s)?;
    let [clean_train, _, clean_val] = &parts.clean;
    let [noisy_train, noisy_test, noisy_val] = &parts.noisy;

    let mut cfg = s.train.clone();
    cfg.seed = s.seed;

    let pre = match &data.gazetteer_corpus {
        Some(g) => Some(pretrain(g, &cfg, s.pretrain_val_tokens).map_err(stage("pretrain"))?),
        None => None,
    };
    let init = pre.as_ref().map(|p| &p.model);

    let results: Vec<Result<VariantResult, PipelineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = Variant::ALL
            .into_iter()
            .map(|v| {
                let cfg = &cfg;
                scope.spawn(move || -> Result<VariantResult, PipelineError> {
                    let val = if v.validates_on_noisy(s.validation) { noisy_val } else { clean_val };
                    let (train_data, outcome) = finetune_variant(
                        v,
                        clean_train,
                        noisy_train,
                        &data.table,
                        val,
                        init,
                        cfg,
                        s.seed.wrapping_add(SEED_ARTIFICIAL),
                        s.lambda,
                    )
                    .map_err(|e| PipelineError::Stage {
                        stage: "finetune",
                        message: format!("{v}: {e}"),
                    })?;
                    let pred = tag_corpus(&outcome.model, noisy_test);
                    let test = entity_prf(noisy_test, &pred).map_err(stage("evaluate"))?;
                    Ok(VariantResult {
                        variant: v,
                        training_data: PartitionSizes::of(&train_data),
                        best_epoch: outcome.best_epoch,
                        test,
                        curve: outcome.records,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant thread panicked"))
            .collect()
    });
    let variants = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    Ok(ExperimentReport {
        seed: s.seed,
        lambda: s.lambda,
        ratios: s.ratios.as_array(),
        validation: s.validation,
        noise_source: if data.noisy.is_some() { "supplied" } else { "injected" },
        split: parts.clean.each_ref().map(PartitionSizes::of),
        pretrain: pre.map(|p| PretrainSummary {
            data: PartitionSizes::of(data.gazetteer_corpus.as_ref().expect("pretrained")),
            best_epoch: p.best_epoch,
            curve: p.records,
        }),
        variants,
        reference: ReferenceScores {
            note: "transformer results at full scale; not expected from this backbone",
            artificial_f1: REFERENCE_ARTIFICIAL_F1,
            job_title_f1: REFERENCE_JOB_TITLE_F1,
        },
    })
}

/// Loads every input named in the config.
pub fn load_experiment_data(config: &ExperimentConfig) -> Result<ExperimentData, PipelineError> {
    config.check_paths()?;
    let read_corpus = |p: &Path| -> Result<Corpus, PipelineError> {
        let text = read_text(p).map_err(PipelineError::Io)?;
        parse_conll(&text).map_err(|e| PipelineError::Stage {
            stage: "load",
            message: format!("{}: {e}", p.display()),
        })
    };
    let clean = read_corpus(&config.clean_corpus)?;
    let noisy = config.noisy_corpus.as_deref().map(read_corpus).transpose()?;
    let table = match &config.error_table {
        Some(p) => load_error_table(&read_text(p).map_err(PipelineError::Io)?).map_err(stage("load"))?,
        None => ErrorTable::bundled(),
    };
    let gazetteer_corpus = if config.gazetteers.is_empty() {
        None
    } else {
        let files: Vec<_> = config.gazetteers.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        Some(load_gazetteers(&files)?.corpus)
    };
    Ok(ExperimentData {
        clean,
        noisy,
        table,
        gazetteer_corpus,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    config.settings.validate()?;
    let data = load_experiment_data(config)?;
    run_experiment_with(&data, &config.settings)
}

/// True when no segment of `a` appears (same tokens and labels) in `b`.
pub fn segments_disjoint(a: &Corpus, b: &Corpus) -> bool {
    let set: std::collections::HashSet<&Segment> = b.segments().collect();
    a.segments().all(|s| !set.contains(s))
}
