//! Experiment configuration: one JSON document with corpus, encoder,
//! training, and evaluation sections.
//!
//! Every field has a typed schema and a recorded default; unknown fields are
//! rejected. Semantic violations are reported with their dotted field path.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::corpus::{NoiseSpec, SplitFractions, TemplateSet};
use dialogic_core::encoder::{Architecture, EncoderConfig};
use dialogic_core::loss::{LossConfig, PairingMode};
use dialogic_core::taxonomy::{CategoryLabel, CATEGORY_COUNT};
use dialogic_core::trainer::TrainConfig;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "DIALOGIC_OUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    pub encoder: EncoderSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output_dir: PathBuf::from("out"),
            corpus: CorpusSection::default(),
            encoder: EncoderSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    pub n_per_class: usize,
    pub templates: TemplatesSection,
    pub noise: NoiseSection,
    pub split_fractions: SplitSection,
    pub rng_seed: u64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            n_per_class: 400,
            templates: TemplatesSection::default(),
            noise: NoiseSection::default(),
            split_fractions: SplitSection::default(),
            rng_seed: 2024,
        }
    }
}

/// Template source: the built-in classroom set, a JSON file, or inline.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TemplatesSection {
    pub path: Option<PathBuf>,
    pub inline: Option<TemplatesFile>,
}

/// On-disk template format: template lists keyed by category name plus
/// shared slot-filler lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatesFile {
    pub per_class: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub slots: BTreeMap<String, Vec<String>>,
}

impl TemplatesFile {
    pub fn into_template_set(self) -> Result<TemplateSet> {
        let mut per_class: Vec<Vec<String>> = vec![Vec::new(); CATEGORY_COUNT];
        for (name, templates) in self.per_class {
            let label = CategoryLabel::from_name(&name, "corpus.templates").with_context(|| {
                format!("corpus.templates.per_class: unknown category {name:?}")
            })?;
            per_class[label.id()] = templates;
        }
        TemplateSet::new(per_class, self.slots.into_iter().collect()).context("corpus.templates")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub target_cer: f64,
    pub substitution_weight: f64,
    pub deletion_weight: f64,
    pub insertion_weight: f64,
    pub rng_seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            target_cer: 0.1136,
            substitution_weight: 0.6,
            deletion_weight: 0.2,
            insertion_weight: 0.2,
            rng_seed: 7,
        }
    }
}

impl NoiseSection {
    pub fn to_spec(&self) -> NoiseSpec {
        NoiseSpec {
            target_cer: self.target_cer,
            substitution_weight: self.substitution_weight,
            deletion_weight: self.deletion_weight,
            insertion_weight: self.insertion_weight,
            rng_seed: self.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.25,
            validation: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSection {
    pub architecture: String,
    pub embed_dim: usize,
    pub max_seq_len: usize,
    pub rng_seed: u64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection {
            architecture: "tiny-reference".into(),
            embed_dim: 8,
            max_seq_len: 32,
            rng_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub gamma: f64,
    pub margin: f64,
    pub pairing_mode: String,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    pub early_stop_patience: usize,
    pub pool_capacity: usize,
    pub pool_clear_per_step: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            gamma: 0.5,
            margin: 1.0,
            pairing_mode: "hard".into(),
            batch_size: 32,
            epochs: 30,
            learning_rate: 0.05,
            rng_seed: 11,
            early_stop_patience: 6,
            pool_capacity: 512,
            pool_clear_per_step: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub n_per_side: usize,
    pub rng_seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            n_per_side: 120,
            rng_seed: 17,
        }
    }
}

/// The three preset run modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Plain cross-entropy fine-tuning.
    Baseline,
    /// Contrastive partners drawn from all differing-label examples.
    All,
    /// Contrastive partners drawn from the hard-example pool.
    Hard,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::All => "all",
            Mode::Hard => "hard",
        }
    }
}

impl ExperimentConfig {
    /// Loads and validates a configuration file. Schema errors carry the
    /// dotted path of the offending field; referenced paths must resolve at
    /// load time.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut deserializer = serde_json::Deserializer::from_str(&raw);
        let config: ExperimentConfig = serde_path_to_error::deserialize(&mut deserializer)
            .map_err(|e| anyhow::anyhow!("config schema error at {}: {}", e.path(), e.inner()))?;
        config.validate()?;
        if let Some(templates) = &config.corpus.templates.path {
            let config_dir = path.parent().unwrap_or_else(|| Path::new("."));
            let resolved = if templates.is_absolute() {
                templates.clone()
            } else {
                config_dir.join(templates)
            };
            if !resolved.is_file() {
                bail!(
                    "corpus.templates.path: {} does not exist",
                    resolved.display()
                );
            }
        }
        Ok(config)
    }

    /// Semantic validation with dotted field paths in every message.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.n_per_class == 0 {
            bail!("corpus.n_per_class must be at least 1");
        }
        self.corpus
            .noise
            .to_spec()
            .validate()
            .map_err(|e| anyhow::anyhow!("corpus.{e}"))?;
        self.split_fractions()
            .validate()
            .map_err(|e| anyhow::anyhow!("corpus.split_fractions: {e}"))?;
        if self.corpus.templates.path.is_some() && self.corpus.templates.inline.is_some() {
            bail!("corpus.templates: path and inline are mutually exclusive");
        }
        Architecture::parse(&self.encoder.architecture)
            .map_err(|e| anyhow::anyhow!("encoder.architecture: {e}"))?;
        if self.encoder.embed_dim == 0 {
            bail!("encoder.embed_dim must be at least 1");
        }
        if self.encoder.max_seq_len < 2 {
            bail!("encoder.max_seq_len must be at least 2");
        }
        PairingMode::parse(&self.train.pairing_mode)
            .map_err(|e| anyhow::anyhow!("train.pairing_mode: {e}"))?;
        self.loss_config(None)
            .map_err(|e| anyhow::anyhow!("train: {e}"))?;
        if self.eval.n_per_side == 0 {
            bail!("eval.n_per_side must be at least 1");
        }
        Ok(())
    }

    /// Resolves the output directory, honoring the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn split_fractions(&self) -> SplitFractions {
        SplitFractions {
            train: self.corpus.split_fractions.train,
            validation: self.corpus.split_fractions.validation,
        }
    }

    /// Builds the template set from the configured source.
    pub fn template_set(&self, config_dir: &Path) -> Result<TemplateSet> {
        if let Some(inline) = &self.corpus.templates.inline {
            return inline.clone().into_template_set();
        }
        if let Some(path) = &self.corpus.templates.path {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                config_dir.join(path)
            };
            let raw = fs::read_to_string(&resolved).with_context(|| {
                format!("corpus.templates.path: reading {}", resolved.display())
            })?;
            let file: TemplatesFile = serde_json::from_str(&raw).with_context(|| {
                format!("corpus.templates.path: parsing {}", resolved.display())
            })?;
            return file.into_template_set();
        }
        Ok(TemplateSet::builtin())
    }

    /// The loss configuration, optionally specialized by a preset mode.
    pub fn loss_config(&self, mode: Option<Mode>) -> Result<LossConfig> {
        let cfg = match mode {
            Some(Mode::Baseline) => LossConfig {
                gamma: 1.0,
                margin: self.train.margin,
                pairing_mode: PairingMode::None,
            },
            Some(Mode::All) => LossConfig {
                gamma: self.capped_gamma("all")?,
                margin: self.train.margin,
                pairing_mode: PairingMode::RandomAll,
            },
            Some(Mode::Hard) => LossConfig {
                gamma: self.capped_gamma("hard")?,
                margin: self.train.margin,
                pairing_mode: PairingMode::Hard,
            },
            None => LossConfig {
                gamma: self.train.gamma,
                margin: self.train.margin,
                pairing_mode: PairingMode::parse(&self.train.pairing_mode)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn capped_gamma(&self, mode: &str) -> Result<f64> {
        if self.train.gamma >= 1.0 {
            bail!(
                "train.gamma must be below 1 for mode {mode} (the contrastive task needs weight)"
            );
        }
        Ok(self.train.gamma)
    }

    /// Assembles the full training configuration for a preset mode.
    /// `vocab_size` is derived from the data by the trainer.
    pub fn train_config(&self, mode: Option<Mode>) -> Result<TrainConfig> {
        let config = TrainConfig {
            loss: self.loss_config(mode)?,
            encoder: EncoderConfig {
                vocab_size: 2,
                embed_dim: self.encoder.embed_dim,
                max_seq_len: self.encoder.max_seq_len,
                n_classes: CATEGORY_COUNT,
                architecture: Architecture::parse(&self.encoder.architecture)?,
                rng_seed: self.encoder.rng_seed,
            },
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            rng_seed: self.train.rng_seed,
            early_stop_patience: self.train.early_stop_patience,
            pool_capacity: self.train.pool_capacity,
            pool_clear_per_step: self.train.pool_clear_per_step,
        };
        config.validate()?;
        Ok(config)
    }

    /// Stable fingerprint of the parsed configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        crate::fingerprint(canonical.as_bytes())
    }
}
