//! Command-line front end. Every command reads inputs and validates flags
//! before writing anything, and every output file is written atomically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    entity_counts, entity_counts_csv, parse_conll, sort_entity_types, stratified_split, write_conll,
    Corpus, EntityType, SplitRatios,
};
use crate::eval::{entity_prf, epoch_curve_csv};
use crate::io::{read_text, write_atomic};
use crate::labeler::{load_model, save_model, tag_corpus, LabelerError};
use crate::noise::{
    analyze_errors, inject_noise, load_error_table, make_artificial, save_error_table, ErrorTable,
};
use crate::pipeline::{
    finetune_variant, load_gazetteers, pretrain, run_experiment, synth, ExperimentConfig,
    ExperimentSettings, PipelineError, ValidationMode, Variant,
};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unusable input files (exit 2).
    Input(String),
    /// A defect or numerical failure inside the toolkit (exit 1).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Labeler(LabelerError::NonFinite) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        PipelineError::from(e).into()
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "natner", version, about = "Noise-aware named entity recognition toolkit")]
pub struct Cli {
    /// Log progress (epoch lines) to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align parallel noisy/clean corpora and write the error table.
    AnalyzeErrors {
        noisy: PathBuf,
        clean: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inject table-driven noise into a clean corpus.
    Inject {
        clean: PathBuf,
        /// Error table CSV [default: bundled table]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability of a table edit versus a uniform fallback edit.
        #[arg(long, default_value_t = 0.8)]
        lambda: f64,
        /// Emit the clean segments followed by their noised copies.
        #[arg(long)]
        double: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified segment-level split into train/test/val files.
    Split {
        corpus: PathBuf,
        /// train,test,val fractions
        #[arg(long, default_value = "0.7,0.2,0.1")]
        ratios: SplitRatios,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-type entity counts.
    Counts {
        corpus: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the intermediate model on O-free gazetteer data.
    Pretrain {
        /// TYPE=path, repeatable
        #[arg(long = "gazetteer", value_name = "TYPE=PATH", required = true)]
        gazetteers: Vec<String>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
        /// Epoch curve CSV
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Fine-tune one variant.
    Train {
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        clean_train: PathBuf,
        /// Parallel noisy training corpus (required for the noisy variant)
        #[arg(long)]
        noisy_train: Option<PathBuf>,
        #[arg(long)]
        val: PathBuf,
        /// Error table for the artificial variant [default: bundled table]
        #[arg(long)]
        table: Option<PathBuf>,
        /// Warm-start model
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Score predictions against gold, or tag gold with --model first.
    Evaluate {
        gold: PathBuf,
        pred: Option<PathBuf>,
        #[arg(long, conflicts_with = "pred")]
        model: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label a corpus with a trained model.
    Tag {
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full three-variant experiment and write the report bundle.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic corpus, gazetteers and an experiment config.
    Synth {
        #[arg(long, default_value_t = 400)]
        segments: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Training flags. Unset flags fall back to the config file, then to the
/// built-in defaults shown.
#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// key = value settings file
    #[arg(long = "settings")]
    pub settings: Option<PathBuf>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Table-edit probability [default: 0.8]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Split fractions train,test,val [default: 0.7,0.2,0.1]
    #[arg(long)]
    pub ratios: Option<String>,
    /// Maximum epochs [default: 25]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience in epochs [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Warm-up fraction of all steps [default: 0.10]
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Peak learning rate [default: 0.1]
    #[arg(long)]
    pub target_lr: Option<f64>,
    /// L2 strength [default: 0.0001]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Mini-batch size [default: 8]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// matched | noisy | clean [default: matched]
    #[arg(long)]
    pub validation: Option<ValidationMode>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        put("seed", self.seed.map(|x| x.to_string()));
        put("lambda", self.lambda.map(|x| x.to_string()));
        put("ratios", self.ratios.clone());
        put("epochs", self.epochs.map(|x| x.to_string()));
        put("patience", self.patience.map(|x| x.to_string()));
        put("warmup", self.warmup.map(|x| x.to_string()));
        put("target_lr", self.target_lr.map(|x| x.to_string()));
        put("l2", self.l2.map(|x| x.to_string()));
        put("batch_size", self.batch_size.map(|x| x.to_string()));
        put("validation", self.validation.map(|x| x.to_string()));
        v
    }

    /// Defaults, then the settings file, then explicit flags.
    fn apply(&self, base: ExperimentSettings) -> Result<ExperimentSettings, CliError> {
        let mut s = base;
        if let Some(p) = &self.settings {
            let text = read_text(p).map_err(CliError::Input)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Input(format!("{}:{}: expected key = value", p.display(), i + 1)))?;
                let known = s
                    .set(k.trim(), v.trim())
                    .map_err(|e| CliError::Input(format!("{}:{}: {e}", p.display(), i + 1)))?;
                if !known {
                    return Err(CliError::Input(format!("{}:{}: unknown key {:?}", p.display(), i + 1, k.trim())));
                }
            }
        }
        for (k, v) in self.overrides() {
            s.set(k, &v).map_err(CliError::Input)?;
        }
        s.validate()?;
        s.train.seed = s.seed;
        Ok(s)
    }
}

fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = read_text(path).map_err(CliError::Input)?;
    parse_conll(&text).map_err(input(&path.display().to_string()))
}

fn read_table(path: Option<&Path>) -> Result<ErrorTable, CliError> {
    match path {
        None => Ok(ErrorTable::bundled()),
        Some(p) => {
            let text = read_text(p).map_err(CliError::Input)?;
            load_error_table(&text).map_err(input(&p.display().to_string()))
        }
    }
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(input(&dir.display().to_string()))?;
    }
    write_atomic(path, body.as_bytes()).map_err(CliError::Input)
}

fn parse_gazetteer_flags(flags: &[String]) -> Result<Vec<(String, PathBuf)>, CliError> {
    flags
        .iter()
        .map(|f| {
            f.split_once('=')
                .map(|(t, p)| (t.to_string(), PathBuf::from(p)))
                .ok_or_else(|| CliError::Input(format!("--gazetteer expects TYPE=PATH, got {f:?}")))
        })
        .collect()
}

/// Per-part entity distribution: each type's share of its total count.
pub fn split_summary(parts: &[(&str, &Corpus)]) -> String {
    let counts: Vec<BTreeMap<EntityType, usize>> = parts.iter().map(|(_, c)| entity_counts(c)).collect();
    let mut types: Vec<EntityType> = counts.iter().flat_map(|c| c.keys().cloned()).collect();
    sort_entity_types(&mut types);
    types.dedup();
    let mut out = String::new();
    let _ = write!(out, "{:<18}", "type");
    for (name, c) in parts {
        let _ = write!(out, " {:>16}", format!("{name} ({})", c.segment_count()));
    }
    out.push('\n');
    for t in &types {
        let total: usize = counts.iter().map(|c| c.get(t).copied().unwrap_or(0)).sum();
        let _ = write!(out, "{:<18}", t.as_str());
        for c in &counts {
            let n = c.get(t).copied().unwrap_or(0);
            let pct = if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
            let _ = write!(out, " {:>16}", format!("{n} ({pct:.1}%)"));
        }
        out.push('\n');
    }
    out
}

const SYNTH_CONFIG: &str = "\
# Synthetic experiment. Paths are relative to this file.
clean_corpus = corpus.conll
# error_table = table.csv
# noisy_corpus = noisy.conll
gazetteer.JOB_TITLE = gazetteers/JOB_TITLE.txt
gazetteer.JOB_TITLE_GROUP = gazetteers/JOB_TITLE_GROUP.txt
gazetteer.SKILL = gazetteers/SKILL.txt
gazetteer.SUBJECT = gazetteers/SUBJECT.txt
gazetteer.ACTIVITY = gazetteers/ACTIVITY.txt
seed = 0
lambda = 0.8
ratios = 0.7,0.2,0.1
validation = matched
epochs = 25
patience = 5
warmup = 0.1
";

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::AnalyzeErrors { noisy, clean, out } => {
            let n = read_corpus(&noisy)?;
            let c = read_corpus(&clean)?;
            let table = analyze_errors(&n, &c).map_err(input("analyze-errors"))?;
            write(&out, &save_error_table(&table))?;
            println!("{} distinct errors, {} occurrences", table.entries().len(), table.total());
        }
        Command::Inject {
            clean,
            table,
            seed,
            lambda,
            double,
            out,
        } => {
            let c = read_corpus(&clean)?;
            let t = read_table(table.as_deref())?;
            let result = if double {
                make_artificial(&c, &t, seed, lambda)
            } else {
                inject_noise(&c, &t, seed, lambda)
            }
            .map_err(input("inject"))?;
            write(&out, &write_conll(&result))?;
            println!("{} segments written", result.segment_count());
        }
        Command::Split {
            corpus,
            ratios,
            seed,
            out,
        } => {
            ratios.validate().map_err(input("--ratios"))?;
            let c = read_corpus(&corpus)?;
            let (train, test, val) = stratified_split(&c, ratios, seed).map_err(input("split"))?;
            let bodies = [write_conll(&train), write_conll(&test), write_conll(&val)];
            std::fs::create_dir_all(&out).map_err(input(&out.display().to_string()))?;
            for (name, body) in ["train.conll", "test.conll", "val.conll"].iter().zip(&bodies) {
                write(&out.join(name), body)?;
            }
            print!("{}", split_summary(&[("train", &train), ("test", &test), ("val", &val)]));
        }
        Command::Counts { corpus, out } => {
            let csv = entity_counts_csv(&entity_counts(&read_corpus(&corpus)?));
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Pretrain {
            gazetteers,
            train,
            out,
            curves,
        } => {
            let s = train.apply(ExperimentSettings::default())?;
            let files = parse_gazetteer_flags(&gazetteers)?;
            let loaded = load_gazetteers(&files)?;
            if loaded.skipped_lines > 0 {
                eprintln!("warning: skipped {} blank gazetteer lines", loaded.skipped_lines);
            }
            let outcome = pretrain(&loaded.corpus, &s.train, s.pretrain_val_tokens)?;
            let curve = epoch_curve_csv(&outcome.records).map_err(|e| CliError::Internal(e.to_string()))?;
            save_model(&outcome.model, &out)?;
            if let Some(p) = curves {
                write(&p, &curve)?;
            }
            println!(
                "pretrained on {} segments, best epoch {}",
                loaded.corpus.segment_count(),
                outcome.best_epoch
            );
        }
        Command::Train {
            variant,
            clean_train,
            noisy_train,
            val,
            table,
            init,
            train,
            out,
            curves,
        } => {
            let s = train.apply(ExperimentSettings::default())?;
            let clean = read_corpus(&clean_train)?;
            let noisy = match (&noisy_train, variant) {
                (Some(p), _) => read_corpus(p)?,
                (None, Variant::Noisy) => {
                    return Err(CliError::Input("--noisy-train is required for the noisy variant".into()))
                }
                (None, _) => clean.clone(),
            };
            let val = read_corpus(&val)?;
            let t = read_table(table.as_deref())?;
            let init = init.as_deref().map(load_model).transpose()?;
            let (data, outcome) = finetune_variant(
                variant,
                &clean,
                &noisy,
                &t,
                &val,
                init.as_ref(),
                &s.train,
                s.seed.wrapping_add(crate::pipeline::SEED_ARTIFICIAL),
                s.lambda,
            )?;
            println!(
                "{variant}: trained on {} segments ({} tokens; clean train has {}), best epoch {}",
                data.segment_count(),
                data.token_count(),
                clean.segment_count(),
                outcome.best_epoch
            );
            let curve = epoch_curve_csv(&outcome.records).map_err(|e| CliError::Internal(e.to_string()))?;
            save_model(&outcome.model, &out)?;
            if let Some(p) = curves {
                write(&p, &curve)?;
            }
        }
        Command::Evaluate { gold, pred, model, out } => {
            let g = read_corpus(&gold)?;
            let p = match (pred, model) {
                (Some(p), None) => read_corpus(&p)?,
                (None, Some(m)) => tag_corpus(&load_model(&m)?, &g),
                _ => return Err(CliError::Input("give either a prediction file or --model".into())),
            };
            let report = entity_prf(&g, &p).map_err(input("evaluate"))?;
            if let Some(o) = out {
                let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
                write(&o, &(json + "\n"))?;
            }
            println!(
                "precision {:.4} recall {:.4} f1 {:.4}",
                report.precision(),
                report.recall(),
                report.f1()
            );
        }
        Command::Tag { corpus, model, out } => {
            let c = read_corpus(&corpus)?;
            let m = load_model(&model)?;
            write(&out, &write_conll(&tag_corpus(&m, &c)))?;
        }
        Command::Experiment { config, train, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.settings = train.apply(cfg.settings)?;
            let report = run_experiment(&cfg)?;
            report.write_bundle(&out)?;
            for r in &report.variants {
                println!(
                    "{:<10} P {:.4} R {:.4} F1 {:.4}",
                    r.variant.as_str(),
                    r.test.precision(),
                    r.test.recall(),
                    r.test.f1()
                );
            }
        }
        Command::Synth { segments, seed, out } => {
            if segments == 0 {
                return Err(CliError::Input("--segments must be positive".into()));
            }
            let gaz = synth::builtin_gazetteers();
            let corpus = synth::synthetic_corpus(&gaz, segments, seed);
            write(&out.join("corpus.conll"), &write_conll(&corpus))?;
            for g in &gaz {
                let body: String = g.phrases().iter().map(|p| format!("{p}\n")).collect();
                write(&out.join("gazetteers").join(format!("{}.txt", g.entity_type)), &body)?;
            }
            write(&out.join("experiment.cfg"), SYNTH_CONFIG)?;
            println!("{} segments written", corpus.segment_count());
        }
    }
    Ok(())
}
