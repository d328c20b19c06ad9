//! Per-category binary evaluation with macro and micro averaging.
//!
//! Each of the eight instruction categories is evaluated on its own balanced
//! binary test set: `n_per_side` positives of that category against
//! `n_per_side` negatives drawn uniformly from every other label (including
//! `others`). An example counts as predicted positive iff the model's argmax
//! class over the full nine-way head equals the positive category.
//!
//! Macro averages are unweighted means over the eight categories; micro
//! averages are computed from the confusion counts pooled across the eight
//! binary sets. Precision, recall, and F1 are defined as 0 when their
//! denominators vanish.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::LabeledExample;
use crate::error::{CoreError, Result};
use crate::rng::{derive_seed, Rng};
use crate::taxonomy::{CategoryLabel, INSTRUCTION_COUNT};

/// Anything that maps an utterance to a predicted class index.
///
/// Checkpoint-backed encoders implement this; test fixtures may stub it.
pub trait Classifier {
    fn predict_class(&self, text: &str) -> Result<usize>;
}

impl Classifier for crate::encoder::TinyEncoder {
    fn predict_class(&self, text: &str) -> Result<usize> {
        // the inherent method; inherent candidates win resolution here
        crate::encoder::TinyEncoder::predict_class(self, text)
    }
}

/// Binary confusion counts for one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// Adds another category's counts into this pooled tally.
    pub fn absorb(&mut self, other: &ConfusionCounts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.true_negatives += other.true_negatives;
        self.false_negatives += other.false_negatives;
    }

    /// Derives accuracy/precision/recall/F1 with zero-division conventions.
    pub fn metrics(&self) -> BinaryMetrics {
        let total = self.total();
        let accuracy = if total == 0 {
            0.0
        } else {
            (self.true_positives + self.true_negatives) as f64 / total as f64
        };
        let precision = ratio(
            self.true_positives,
            self.true_positives + self.false_positives,
        );
        let recall = ratio(
            self.true_positives,
            self.true_positives + self.false_negatives,
        );
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BinaryMetrics {
            accuracy,
            precision,
            recall,
            f1,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, precision, recall, and F1 of one binary evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// A balanced positive/negative test set for one instruction category.
#[derive(Debug, Clone)]
pub struct BinaryTestSet {
    pub positive_category: CategoryLabel,
    pub positives: Vec<LabeledExample>,
    pub negatives: Vec<LabeledExample>,
}

impl BinaryTestSet {
    /// Validates balance, label consistency, and uid disjointness.
    pub fn new(
        positive_category: CategoryLabel,
        positives: Vec<LabeledExample>,
        negatives: Vec<LabeledExample>,
    ) -> Result<Self> {
        if positive_category.is_others() {
            return Err(CoreError::InvalidConfig(
                "\"others\" cannot be a positive evaluation class".into(),
            ));
        }
        if positives.len() != negatives.len() {
            return Err(CoreError::DimensionMismatch {
                left: positives.len(),
                right: negatives.len(),
            });
        }
        if positives.is_empty() {
            return Err(CoreError::EmptyInput("binary test set"));
        }
        if let Some(bad) = positives.iter().find(|e| e.label != positive_category) {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "positive example {:?} carries label {}",
                bad.uid,
                bad.label
            )));
        }
        if let Some(bad) = negatives.iter().find(|e| e.label == positive_category) {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "negative example {:?} carries the positive label {}",
                bad.uid,
                positive_category
            )));
        }
        for p in &positives {
            if negatives.iter().any(|n| n.uid == p.uid) {
                return Err(CoreError::DuplicateUid { uid: p.uid.clone() });
            }
        }
        Ok(BinaryTestSet {
            positive_category,
            positives,
            negatives,
        })
    }
}

/// Samples `n` items from `pool` uniformly without replacement.
fn sample_without_replacement<'a>(
    pool: &[&'a LabeledExample],
    n: usize,
    rng: &mut Rng,
) -> Vec<&'a LabeledExample> {
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    for i in 0..n {
        let j = i + rng.below(indices.len() - i);
        indices.swap(i, j);
    }
    indices[..n].iter().map(|&i| pool[i]).collect()
}

/// Builds one balanced binary test set per instruction category from
/// `test_pool`. Negatives are drawn uniformly without replacement from all
/// non-positive labels. Deterministic given `rng_seed`; each category draws
/// from an independent derived stream.
pub fn build_binary_sets(
    test_pool: &[LabeledExample],
    n_per_side: usize,
    rng_seed: u64,
) -> Result<Vec<BinaryTestSet>> {
    if n_per_side == 0 {
        return Err(CoreError::InvalidConfig(
            "n_per_side must be at least 1".into(),
        ));
    }
    let mut sets = Vec::with_capacity(INSTRUCTION_COUNT);
    for category in CategoryLabel::instruction_categories() {
        let positives_pool: Vec<&LabeledExample> =
            test_pool.iter().filter(|e| e.label == category).collect();
        let negatives_pool: Vec<&LabeledExample> =
            test_pool.iter().filter(|e| e.label != category).collect();
        if positives_pool.len() < n_per_side {
            return Err(CoreError::InsufficientExamples {
                category: category.name(),
                side: "positive",
                needed: n_per_side,
                available: positives_pool.len(),
            });
        }
        if negatives_pool.len() < n_per_side {
            return Err(CoreError::InsufficientExamples {
                category: category.name(),
                side: "negative",
                needed: n_per_side,
                available: negatives_pool.len(),
            });
        }
        let mut rng = Rng::seed_from(derive_seed(rng_seed, category.id() as u64));
        let positives = sample_without_replacement(&positives_pool, n_per_side, &mut rng)
            .into_iter()
            .cloned()
            .collect();
        let negatives = sample_without_replacement(&negatives_pool, n_per_side, &mut rng)
            .into_iter()
            .cloned()
            .collect();
        sets.push(BinaryTestSet::new(category, positives, negatives)?);
    }
    Ok(sets)
}

/// Runs a classifier over one binary set. An example is predicted positive
/// iff the argmax class equals the positive category.
pub fn evaluate_binary(
    model: &dyn Classifier,
    set: &BinaryTestSet,
) -> Result<(BinaryMetrics, ConfusionCounts)> {
    let positive_id = set.positive_category.id();
    let mut counts = ConfusionCounts::default();
    for example in &set.positives {
        if model.predict_class(&example.text)? == positive_id {
            counts.true_positives += 1;
        } else {
            counts.false_negatives += 1;
        }
    }
    for example in &set.negatives {
        if model.predict_class(&example.text)? == positive_id {
            counts.false_positives += 1;
        } else {
            counts.true_negatives += 1;
        }
    }
    Ok((counts.metrics(), counts))
}

/// Provenance recorded with a metrics report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub checkpoint_id: String,
}

/// Metrics for one category within a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMetrics {
    pub category: CategoryLabel,
    pub metrics: BinaryMetrics,
    pub counts: ConfusionCounts,
}

/// Per-category plus macro/micro averaged results of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Entries in taxonomy order, one per instruction category.
    pub per_category: Vec<CategoryMetrics>,
    pub macro_accuracy: f64,
    pub macro_f1: f64,
    pub micro_accuracy: f64,
    pub micro_f1: f64,
    pub meta: RunMeta,
}

/// Folds per-category results into a report with macro and micro averages.
/// Requires exactly one entry per instruction category.
pub fn aggregate(mut per_category: Vec<CategoryMetrics>, meta: RunMeta) -> Result<MetricsReport> {
    for expected in CategoryLabel::instruction_categories() {
        match per_category
            .iter()
            .filter(|c| c.category == expected)
            .count()
        {
            0 => {
                return Err(CoreError::MissingCategory {
                    category: expected.name(),
                })
            }
            1 => {}
            n => {
                return Err(CoreError::InvalidConfig(alloc::format!(
                    "category {expected} appears {n} times in the metrics"
                )))
            }
        }
    }
    if per_category.len() != INSTRUCTION_COUNT {
        return Err(CoreError::InvalidConfig(alloc::format!(
            "expected metrics for exactly {INSTRUCTION_COUNT} categories, got {}",
            per_category.len()
        )));
    }
    per_category.sort_by_key(|c| c.category.id());

    let n = per_category.len() as f64;
    let macro_accuracy = per_category.iter().map(|c| c.metrics.accuracy).sum::<f64>() / n;
    let macro_f1 = per_category.iter().map(|c| c.metrics.f1).sum::<f64>() / n;

    let mut pooled = ConfusionCounts::default();
    for entry in &per_category {
        pooled.absorb(&entry.counts);
    }
    let micro = pooled.metrics();

    Ok(MetricsReport {
        per_category,
        macro_accuracy,
        macro_f1,
        micro_accuracy: micro.accuracy,
        micro_f1: micro.f1,
        meta,
    })
}

/// Evaluates a model over a collection of binary sets and aggregates.
pub fn evaluate_model(
    model: &dyn Classifier,
    sets: &[BinaryTestSet],
    meta: RunMeta,
) -> Result<MetricsReport> {
    let mut per_category = Vec::with_capacity(sets.len());
    for set in sets {
        let (metrics, counts) = evaluate_binary(model, set)?;
        per_category.push(CategoryMetrics {
            category: set.positive_category,
            metrics,
            counts,
        });
    }
    aggregate(per_category, meta)
}

/// Fraction of matching label/prediction pairs.
pub fn multiclass_accuracy(labels: &[usize], predictions: &[usize]) -> f64 {
    assert_eq!(labels.len(), predictions.len());
    if labels.is_empty() {
        return 0.0;
    }
    let correct = labels
        .iter()
        .zip(predictions)
        .filter(|(l, p)| l == p)
        .count();
    correct as f64 / labels.len() as f64
}

/// Unweighted mean one-vs-rest F1 over the eight instruction categories,
/// computed from multiclass predictions. Used as the validation metric
/// during training.
pub fn multiclass_macro_f1(labels: &[usize], predictions: &[usize]) -> f64 {
    assert_eq!(labels.len(), predictions.len());
    let mut sum = 0.0;
    for category in 0..INSTRUCTION_COUNT {
        let mut counts = ConfusionCounts::default();
        for (&label, &pred) in labels.iter().zip(predictions) {
            match (label == category, pred == category) {
                (true, true) => counts.true_positives += 1,
                (true, false) => counts.false_negatives += 1,
                (false, true) => counts.false_positives += 1,
                (false, false) => counts.true_negatives += 1,
            }
        }
        sum += counts.metrics().f1;
    }
    sum / INSTRUCTION_COUNT as f64
}
