//! The training loop: batching, pair assignment, SGD updates, pool
//! maintenance, early stopping, and structured logging.
//!
//! Three run modes map onto the ablation variants:
//!
//! - pairing `none` with `gamma = 1` — the plain cross-entropy baseline;
//! - pairing `random-all` with `gamma < 1` — contrastive partners drawn
//!   uniformly from differing-label training examples;
//! - pairing `hard` with `gamma < 1` — partners drawn from the pool of
//!   currently misclassified examples, with random-all as the fallback.
//!
//! The optimizer is plain SGD with a constant learning rate. Partner
//! representations are always recomputed with current parameters; the pool's
//! cached representations affect membership only. Identical configuration,
//! dataset, and seed yield identical logs and checkpoints.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Dataset, Split};
use crate::encoder::{EncoderConfig, Params, SentenceEncoder, TinyEncoder, TrainingItem, Vocab};
use crate::error::{CoreError, Result};
use crate::eval::multiclass_macro_f1;
use crate::loss::{LossConfig, PairingMode};
use crate::mining::{discover_hard, HardPool, StepOutcome};
use crate::rng::{derive_seed, Rng};

/// Full training-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub encoder: EncoderConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    /// Consecutive non-improving epochs tolerated before stopping;
    /// 0 disables early stopping.
    pub early_stop_patience: usize,
    pub pool_capacity: usize,
    /// Clear the hard-example pool before every update, so it holds only
    /// the current batch's misclassifications (the per-batch pool reading).
    /// The default rolling pool keeps entries across steps up to capacity.
    pub pool_clear_per_step: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.encoder.validate()?;
        let min_batch = if self.loss.pairing_mode == PairingMode::None {
            1
        } else {
            2
        };
        if self.batch_size < min_batch {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "batch_size must be at least {min_batch} for pairing_mode {}",
                self.loss.pairing_mode.as_str()
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "learning_rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.pool_capacity == 0 {
            return Err(CoreError::InvalidConfig(
                "pool_capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Tokenized dataset views reused across steps.
#[derive(Debug)]
pub struct TrainData {
    pub items: Vec<TrainingItem>,
    pub val_items: Vec<TrainingItem>,
    uid_index: BTreeMap<String, usize>,
}

impl TrainData {
    /// Tokenizes the train and validation splits against `vocab`.
    pub fn prepare(dataset: &Dataset, vocab: &Vocab, max_seq_len: usize) -> Result<Self> {
        let tokenize_split = |split: Split| -> Result<Vec<TrainingItem>> {
            dataset
                .split(split)
                .into_iter()
                .map(|e| {
                    Ok(TrainingItem {
                        uid: e.uid.clone(),
                        ids: crate::encoder::tokenize(&e.text, vocab, max_seq_len)?,
                        label: e.label.id(),
                    })
                })
                .collect()
        };
        let items = tokenize_split(Split::Train)?;
        let val_items = tokenize_split(Split::Validation)?;
        let uid_index = items
            .iter()
            .enumerate()
            .map(|(i, item)| (item.uid.clone(), i))
            .collect();
        Ok(TrainData {
            items,
            val_items,
            uid_index,
        })
    }

    /// (uid, label) view of the train split for partner fallback sampling.
    pub fn fallback_refs(&self) -> Vec<(&str, usize)> {
        self.items
            .iter()
            .map(|item| (item.uid.as_str(), item.label))
            .collect()
    }

    pub fn by_uid(&self, uid: &str) -> Option<&TrainingItem> {
        self.uid_index.get(uid).map(|&i| &self.items[i])
    }
}

/// Mutable state carried across training steps.
#[derive(Debug)]
pub struct TrainState {
    pub encoder: TinyEncoder,
    pub pool: HardPool,
    pub epoch: usize,
    shuffle_rng: Rng,
}

impl TrainState {
    /// Builds the vocabulary from the train split, initializes parameters,
    /// and tokenizes both splits.
    pub fn init(config: &TrainConfig, dataset: &Dataset) -> Result<(TrainState, TrainData)> {
        config.validate()?;
        let train_split = dataset.split(Split::Train);
        if train_split.is_empty() {
            return Err(CoreError::EmptySplit { split: "train" });
        }
        if dataset.split(Split::Validation).is_empty() {
            return Err(CoreError::EmptySplit {
                split: "validation",
            });
        }
        let vocab = Vocab::from_texts(train_split.iter().map(|e| e.text.as_str()));
        let encoder_config = EncoderConfig {
            vocab_size: vocab.size(),
            ..config.encoder.clone()
        };
        let encoder = TinyEncoder::new(encoder_config, vocab)?;
        let data = TrainData::prepare(dataset, encoder.vocab(), config.encoder.max_seq_len)?;
        let state = TrainState {
            encoder,
            pool: HardPool::new(config.pool_capacity, derive_seed(config.rng_seed, 1))?,
            epoch: 0,
            shuffle_rng: Rng::seed_from(derive_seed(config.rng_seed, 0)),
        };
        Ok((state, data))
    }
}

/// Loss components and pool activity of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub ce_loss: f64,
    pub contrastive_loss: f64,
    pub total_loss: f64,
    pub pool_size: usize,
    /// Partner draws that fell back to the full training set.
    pub fallback_draws: usize,
    /// Partner draws attempted (0 when the contrastive task is off).
    pub partner_draws: usize,
}

/// One structured training-log record; `step` events carry per-batch losses,
/// `epoch` events carry per-epoch means plus validation results.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub event: LogEvent,
    pub epoch: usize,
    pub step: Option<usize>,
    pub ce_loss: f64,
    pub contrastive_loss: f64,
    pub total_loss: f64,
    pub pool_size: usize,
    pub fallback_rate: Option<f64>,
    pub val_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogEvent {
    Step,
    Epoch,
}

impl LogEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            LogEvent::Step => "step",
            LogEvent::Epoch => "epoch",
        }
    }
}

/// Result of a training run: the best-validation encoder plus the log.
#[derive(Debug)]
pub struct TrainOutcome {
    pub encoder: TinyEncoder,
    /// Epoch of the best validation score; 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_val_macro_f1: Option<f64>,
    pub log: Vec<LogRecord>,
}

/// Runs one optimization step on `batch` (indices into `data.items`).
///
/// Order of operations: sample partners from the current pool, compute the
/// loss and analytic gradients in one forward/backward pass, apply the SGD
/// update, then refresh the pool from this batch's pre-update predictions.
pub fn train_step(
    state: &mut TrainState,
    batch: &[usize],
    data: &TrainData,
    fallback: &[(&str, usize)],
    config: &TrainConfig,
) -> Result<StepMetrics> {
    if batch.is_empty() {
        return Err(CoreError::EmptyInput("batch"));
    }
    if batch.len() > config.batch_size {
        return Err(CoreError::InvalidConfig(alloc::format!(
            "batch of {} exceeds configured batch_size {}",
            batch.len(),
            config.batch_size
        )));
    }
    let anchors: Vec<&TrainingItem> = batch.iter().map(|&i| &data.items[i]).collect();

    let pairing_active = config.loss.pairing_mode != PairingMode::None && config.loss.gamma < 1.0;
    let mut partner_items: Option<Vec<&TrainingItem>> = None;
    let mut fallback_draws = 0;
    if pairing_active {
        let anchor_labels: Vec<usize> = anchors.iter().map(|a| a.label).collect();
        let sampled = state.pool.sample_partners(&anchor_labels, fallback)?;
        fallback_draws = sampled.fallback_count;
        let resolved = sampled
            .choices
            .iter()
            .map(|choice| {
                data.by_uid(&choice.uid).ok_or_else(|| {
                    CoreError::InvalidConfig(alloc::format!(
                        "sampled partner {:?} is not in the training set",
                        choice.uid
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        partner_items = Some(resolved);
    }

    let result = state
        .encoder
        .gradients(&anchors, partner_items.as_deref(), &config.loss)?;

    state
        .encoder
        .params_mut()
        .axpy(-config.learning_rate, &result.grads);

    // pool maintenance only in hard mode; predictions are from the forward
    // pass that preceded this step's update
    if config.loss.pairing_mode == PairingMode::Hard {
        if config.pool_clear_per_step {
            state.pool.clear();
        }
        let labels: Vec<usize> = anchors.iter().map(|a| a.label).collect();
        let probs: Vec<Vec<f64>> = result
            .anchor_outputs
            .iter()
            .map(|o| o.class_probs.clone())
            .collect();
        let hard = discover_hard(&labels, &probs);
        let outcomes: Vec<StepOutcome> = anchors
            .iter()
            .enumerate()
            .map(|(i, item)| StepOutcome {
                uid: item.uid.clone(),
                label: item.label,
                representation: result.anchor_outputs[i].representation.clone(),
                misclassified: hard.contains(&i),
            })
            .collect();
        state.pool.update(&outcomes);
    }

    Ok(StepMetrics {
        ce_loss: result.terms.ce_term,
        contrastive_loss: result.terms.contrastive_term,
        total_loss: result.terms.total,
        pool_size: state.pool.len(),
        fallback_draws,
        partner_draws: if pairing_active { batch.len() } else { 0 },
    })
}

/// Predicts classes for a slice of tokenized items with current parameters.
fn predict_items(encoder: &TinyEncoder, items: &[TrainingItem]) -> Result<Vec<usize>> {
    let mut predictions = Vec::with_capacity(items.len());
    for chunk in items.chunks(64) {
        let seqs: Vec<Vec<u32>> = chunk.iter().map(|i| i.ids.clone()).collect();
        let outputs = encoder.encode_batch(&seqs)?;
        predictions.extend(
            outputs
                .iter()
                .map(|o| crate::mining::argmax(&o.class_probs)),
        );
    }
    Ok(predictions)
}

/// Runs the full training loop over `dataset`, returning the checkpoint with
/// the best validation macro-F1 and the complete training log.
pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    let (mut state, data) = TrainState::init(config, dataset)?;
    let fallback = data.fallback_refs();
    let val_labels: Vec<usize> = data.val_items.iter().map(|i| i.label).collect();

    let mut log = Vec::new();
    let mut best: Option<(Params, usize, f64)> = None;
    let mut epochs_without_improvement = 0;

    let mut order: Vec<usize> = (0..data.items.len()).collect();
    for epoch in 1..=config.epochs {
        state.epoch = epoch;
        state.shuffle_rng.shuffle(&mut order);

        let mut epoch_ce = 0.0;
        let mut epoch_contrastive = 0.0;
        let mut epoch_total = 0.0;
        let mut epoch_fallback = 0usize;
        let mut epoch_partner_draws = 0usize;
        let mut steps = 0usize;

        for batch in order.chunks(config.batch_size) {
            let metrics = train_step(&mut state, batch, &data, &fallback, config)?;
            steps += 1;
            epoch_ce += metrics.ce_loss;
            epoch_contrastive += metrics.contrastive_loss;
            epoch_total += metrics.total_loss;
            epoch_fallback += metrics.fallback_draws;
            epoch_partner_draws += metrics.partner_draws;
            log.push(LogRecord {
                event: LogEvent::Step,
                epoch,
                step: Some(steps),
                ce_loss: metrics.ce_loss,
                contrastive_loss: metrics.contrastive_loss,
                total_loss: metrics.total_loss,
                pool_size: metrics.pool_size,
                fallback_rate: None,
                val_macro_f1: None,
            });
        }

        let predictions = predict_items(&state.encoder, &data.val_items)?;
        let val_f1 = multiclass_macro_f1(&val_labels, &predictions);
        let denom = steps.max(1) as f64;
        log.push(LogRecord {
            event: LogEvent::Epoch,
            epoch,
            step: None,
            ce_loss: epoch_ce / denom,
            contrastive_loss: epoch_contrastive / denom,
            total_loss: epoch_total / denom,
            pool_size: state.pool.len(),
            fallback_rate: (epoch_partner_draws > 0)
                .then(|| epoch_fallback as f64 / epoch_partner_draws as f64),
            val_macro_f1: Some(val_f1),
        });

        let improved = best.as_ref().is_none_or(|&(_, _, f)| val_f1 > f);
        if improved {
            best = Some((state.encoder.params().clone(), epoch, val_f1));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if config.early_stop_patience > 0
                && epochs_without_improvement >= config.early_stop_patience
            {
                break;
            }
        }
    }

    let (best_params, best_epoch, best_f1) = match best {
        Some((params, epoch, f1)) => (params, epoch, Some(f1)),
        None => (state.encoder.params().clone(), 0, None),
    };
    let encoder = TinyEncoder::from_parts(
        state.encoder.config().clone(),
        state.encoder.vocab().clone(),
        best_params,
    )?;
    Ok(TrainOutcome {
        encoder,
        best_epoch,
        best_val_macro_f1: best_f1,
        log,
    })
}
