//! The three commands: corpus synthesis, training, and evaluation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::corpus::{generate_synthetic_corpus, Dataset, Split};
use dialogic_core::encoder::SentenceEncoder;
use dialogic_core::eval::{build_binary_sets, evaluate_model, MetricsReport, RunMeta};
use dialogic_core::taxonomy::CATEGORY_COUNT;
use dialogic_core::trainer::train;

use crate::checkpoint::{checkpoint_id, load_checkpoint, save_checkpoint};
use crate::config::{ExperimentConfig, Mode};
use crate::dataset::{load_dataset, write_dataset};
use crate::logfile::write_log;
use crate::report::{render_table, write_report};

/// Files produced by `synth`.
#[derive(Debug)]
pub struct SynthOutput {
    pub dataset_paths: [PathBuf; 3],
    pub manifest_path: PathBuf,
    pub realized_cer: f64,
}

/// Synthesis provenance; `created_unix` is the only timestamp any command
/// writes.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub n_per_class: usize,
    pub corpus_seed: u64,
    pub noise_seed: u64,
    pub target_cer: f64,
    pub realized_cer: f64,
    pub clean_chars: usize,
    pub edit_distance: usize,
    pub train_count: usize,
    pub validation_count: usize,
    pub test_count: usize,
    pub created_unix: u64,
}

/// Generates the synthetic corpus and writes one JSONL file per split plus
/// a manifest recording seeds and the realized character error rate.
pub fn cmd_synth(config_path: &Path) -> Result<SynthOutput> {
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = config.resolved_output_dir();
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let config_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let templates = config.template_set(config_dir)?;
    let generated = generate_synthetic_corpus(
        config.corpus.n_per_class,
        &templates,
        &config.corpus.noise.to_spec(),
        config.corpus.rng_seed,
        config.split_fractions(),
    )?;

    let mut dataset_paths = Vec::with_capacity(3);
    let mut counts = [0usize; 3];
    for (i, split) in [Split::Train, Split::Validation, Split::Test]
        .into_iter()
        .enumerate()
    {
        let examples: Vec<_> = generated
            .examples
            .iter()
            .filter(|e| e.split == split)
            .cloned()
            .collect();
        counts[i] = examples.len();
        let path = out_dir.join(format!("{}.jsonl", split.as_str()));
        write_dataset(&path, &examples)?;
        dataset_paths.push(path);
    }

    let manifest = Manifest {
        config_hash: config.hash(),
        n_per_class: config.corpus.n_per_class,
        corpus_seed: config.corpus.rng_seed,
        noise_seed: config.corpus.noise.rng_seed,
        target_cer: config.corpus.noise.target_cer,
        realized_cer: generated.realized_cer,
        clean_chars: generated.clean_chars,
        edit_distance: generated.edit_distance,
        train_count: counts[0],
        validation_count: counts[1],
        test_count: counts[2],
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_path = out_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing manifest {}", manifest_path.display()))?;

    println!(
        "synth: wrote {} train / {} validation / {} test examples to {} (realized CER {:.4})",
        counts[0],
        counts[1],
        counts[2],
        out_dir.display(),
        generated.realized_cer
    );
    Ok(SynthOutput {
        dataset_paths: [
            dataset_paths.remove(0),
            dataset_paths.remove(0),
            dataset_paths.remove(0),
        ],
        manifest_path,
        realized_cer: generated.realized_cer,
    })
}

/// Files produced by `train`.
#[derive(Debug)]
pub struct TrainOutput {
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
    pub best_epoch: usize,
    pub best_val_macro_f1: Option<f64>,
}

fn load_splits(out_dir: &Path, splits: &[Split]) -> Result<Dataset> {
    let mut examples = Vec::new();
    for split in splits {
        let path = out_dir.join(format!("{}.jsonl", split.as_str()));
        if !path.exists() {
            bail!(
                "missing dataset file {} (run `dialogic synth` first)",
                path.display()
            );
        }
        examples.extend(load_dataset(&path)?.examples().to_vec());
    }
    Ok(Dataset::from_examples(examples)?)
}

/// Trains one preset mode on the synthesized dataset, writing the best
/// checkpoint and the JSON-lines training log.
pub fn cmd_train(config_path: &Path, mode: Mode) -> Result<TrainOutput> {
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = config.resolved_output_dir();
    let dataset = load_splits(&out_dir, &[Split::Train, Split::Validation])?;
    let train_config = config.train_config(Some(mode))?;

    let outcome = train(&train_config, &dataset)?;

    let checkpoint_path = out_dir.join(format!("checkpoint-{}.json", mode.as_str()));
    save_checkpoint(&checkpoint_path, &outcome.encoder)?;
    let log_path = out_dir.join(format!("train-{}.jsonl", mode.as_str()));
    write_log(
        &log_path,
        mode.as_str(),
        &config.hash(),
        train_config.rng_seed,
        &outcome.log,
    )?;

    match outcome.best_val_macro_f1 {
        Some(f1) => println!(
            "train[{}]: best validation macro-F1 {:.4} at epoch {} -> {}",
            mode.as_str(),
            f1,
            outcome.best_epoch,
            checkpoint_path.display()
        ),
        None => println!(
            "train[{}]: no epochs run, wrote initialized checkpoint -> {}",
            mode.as_str(),
            checkpoint_path.display()
        ),
    }
    Ok(TrainOutput {
        checkpoint_path,
        log_path,
        best_epoch: outcome.best_epoch,
        best_val_macro_f1: outcome.best_val_macro_f1,
    })
}

/// Files produced by `eval`.
#[derive(Debug)]
pub struct EvalOutput {
    pub report_path: PathBuf,
    pub table_path: PathBuf,
    pub report: MetricsReport,
}

/// Evaluates a checkpoint on the test split's per-category binary sets and
/// writes the JSON report plus a rendered table.
pub fn cmd_eval(checkpoint_path: &Path, config_path: &Path) -> Result<EvalOutput> {
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = config.resolved_output_dir();

    let encoder = load_checkpoint(checkpoint_path)?;
    if encoder.config().n_classes != CATEGORY_COUNT {
        bail!(
            "taxonomy mismatch: checkpoint has {} classes, the corpus taxonomy has {}",
            encoder.config().n_classes,
            CATEGORY_COUNT
        );
    }

    let dataset = load_splits(&out_dir, &[Split::Test])?;
    let sets = build_binary_sets(
        dataset.examples(),
        config.eval.n_per_side,
        config.eval.rng_seed,
    )?;
    let meta = RunMeta {
        config_hash: config.hash(),
        seed: config.eval.rng_seed,
        checkpoint_id: checkpoint_id(checkpoint_path)?,
    };
    let report = evaluate_model(&encoder, &sets, meta)?;

    let stem = checkpoint_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("checkpoint");
    let report_path = out_dir.join(format!("metrics-{stem}.json"));
    write_report(&report_path, &report)?;
    let table = render_table(&[(stem, &report)]);
    let table_path = out_dir.join(format!("metrics-{stem}.txt"));
    fs::write(&table_path, &table)
        .with_context(|| format!("writing table {}", table_path.display()))?;

    print!("{table}");
    println!(
        "eval: macro-F1 {:.4}, micro-F1 {:.4} -> {}",
        report.macro_f1,
        report.micro_f1,
        report_path.display()
    );
    Ok(EvalOutput {
        report_path,
        table_path,
        report,
    })
}
