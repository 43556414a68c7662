use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::SplitRatios;
use crate::labeler::TrainConfig;
use crate::noise::DEFAULT_TABLE_BIAS;

use super::PipelineError;

/// Which validation partition each variant uses for early stopping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// Noisy val for the noisy and artificial variants, clean val for clean.
    #[default]
    Matched,
    Noisy,
    Clean,
}

impl FromStr for ValidationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "matched" => Ok(Self::Matched),
            "noisy" => Ok(Self::Noisy),
            "clean" => Ok(Self::Clean),
            _ => Err(format!("unknown validation mode {s:?} (matched|noisy|clean)")),
        }
    }
}

impl fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Matched => "matched",
            Self::Noisy => "noisy",
            Self::Clean => "clean",
        })
    }
}

/// Every experiment knob that is not a file path.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub ratios: SplitRatios,
    pub seed: u64,
    pub lambda: f64,
    pub validation: ValidationMode,
    pub pretrain_val_tokens: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            ratios: SplitRatios::default(),
            seed: 0,
            lambda: DEFAULT_TABLE_BIAS,
            validation: ValidationMode::Matched,
            pretrain_val_tokens: 10_000,
            train: TrainConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

impl ExperimentSettings {
    /// Applies one `key = value` setting. Returns `Ok(false)` for keys this
    /// struct does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let t = &mut self.train;
        match key {
            "ratios" => self.ratios = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "validation" => self.validation = parse(key, value)?,
            "pretrain_val_tokens" => self.pretrain_val_tokens = parse(key, value)?,
            "target_lr" => t.target_lr = parse(key, value)?,
            "warmup" => t.warmup_fraction = parse(key, value)?,
            "epochs" => t.max_epochs = parse(key, value)?,
            "patience" => t.patience = parse(key, value)?,
            "l2" => t.l2 = parse(key, value)?,
            "clamp_min" => t.clamp_min = parse(key, value)?,
            "clamp_max" => t.clamp_max = parse(key, value)?,
            "class_weighting" => t.class_weighting = parse(key, value)?,
            "oversample" => t.oversample = parse(key, value)?,
            "oversample_factor" => t.oversample_factor = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "templates" => t.templates = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.ratios
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(PipelineError::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        self.train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Parsed experiment file: input paths plus settings. Relative paths are
/// resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub clean_corpus: PathBuf,
    /// Real noisy counterpart of `clean_corpus`; replaces injection.
    pub noisy_corpus: Option<PathBuf>,
    /// Falls back to the bundled table.
    pub error_table: Option<PathBuf>,
    pub gazetteers: BTreeMap<String, PathBuf>,
    pub settings: ExperimentSettings,
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg = ExperimentConfig::default();
        let mut have_clean = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| PipelineError::ConfigLine { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base_dir.join(value);
            match key {
                "clean_corpus" => {
                    cfg.clean_corpus = path();
                    have_clean = true;
                }
                "noisy_corpus" => cfg.noisy_corpus = Some(path()),
                "error_table" => cfg.error_table = Some(path()),
                _ => {
                    if let Some(ty) = key.strip_prefix("gazetteer.") {
                        cfg.gazetteers.insert(ty.to_string(), path());
                    } else if !cfg.settings.set(key, value).map_err(err)? {
                        return Err(err(format!("unknown key {key:?}")));
                    }
                }
            }
        }
        if !have_clean {
            return Err(PipelineError::Config("missing clean_corpus".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = crate::io::read_text(path).map_err(PipelineError::Io)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Fails on the first referenced file that does not exist.
    pub fn check_paths(&self) -> Result<(), PipelineError> {
        let mut all: Vec<&PathBuf> = vec![&self.clean_corpus];
        all.extend(self.noisy_corpus.iter());
        all.extend(self.error_table.iter());
        all.extend(self.gazetteers.values());
        for p in all {
            if !p.is_file() {
                return Err(PipelineError::Io(format!("{}: file not found", p.display())));
            }
        }
        Ok(())
    }
}
