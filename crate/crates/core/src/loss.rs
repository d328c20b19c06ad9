//! The multi-task training objective.
//!
//! The total loss mixes two terms over a batch: summed cross-entropy of the
//! class probabilities, and a squared-hinge contrastive penalty that pushes
//! each anchor's representation at least `margin` away from a partner drawn
//! from a different category:
//!
//! ```text
//! total = gamma * sum_i -log p_i[label_i]
//!       + (1 - gamma) * sum_i max(0, margin - ||rep_i - partner_i||)^2
//! ```
//!
//! Batch reduction is a sum, not a mean. With `pairing_mode = none` the
//! objective is plain cross-entropy regardless of `gamma`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::encoder::{EncoderOutput, PROB_FLOOR};
use crate::error::{CoreError, Result};

/// How contrastive partners are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    /// No contrastive task; plain cross-entropy training.
    None,
    /// Partners drawn uniformly from all differing-label training examples.
    RandomAll,
    /// Partners drawn from the pool of currently misclassified examples,
    /// falling back to the full training set when the pool has no
    /// differing-label entry.
    Hard,
}

impl PairingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PairingMode::None => "none",
            PairingMode::RandomAll => "random-all",
            PairingMode::Hard => "hard",
        }
    }

    pub fn parse(value: &str) -> Result<Self> {
        match value {
            "none" => Ok(PairingMode::None),
            "random-all" => Ok(PairingMode::RandomAll),
            "hard" => Ok(PairingMode::Hard),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown pairing_mode {other:?}"
            ))),
        }
    }
}

/// Mixing weight, margin, and pairing mode of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    /// Weight of the cross-entropy term, in [0, 1]; the contrastive term
    /// gets `1 - gamma`.
    pub gamma: f64,
    /// Margin of the squared hinge, positive.
    pub margin: f64,
    pub pairing_mode: PairingMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            gamma: 0.5,
            margin: 1.0,
            pairing_mode: PairingMode::Hard,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::InvalidConfig(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(CoreError::InvalidConfig(format!(
                "margin must be positive and finite, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

/// One contrastive partner: the referenced example and its representation
/// under the parameters in effect when the pair was formed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPartner {
    pub uid: String,
    pub label: usize,
    pub representation: Vec<f64>,
}

/// One partner per anchor, index-aligned with the batch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairAssignment {
    pub partners: Vec<PairPartner>,
}

/// Components of one total-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// Unweighted cross-entropy sum over the batch.
    pub ce_term: f64,
    /// Unweighted contrastive sum over the pairs (0 without pairs).
    pub contrastive_term: f64,
    /// The mixed objective actually optimized.
    pub total: f64,
}

/// Summed cross-entropy `sum_i -log p_i[label_i]` over a batch.
///
/// Each probability vector must sum to 1 within 1e-4; probabilities are
/// clamped to at least 1e-12 inside the log.
pub fn cross_entropy(batch_probs: &[&[f64]], labels: &[usize]) -> Result<f64> {
    if batch_probs.len() != labels.len() {
        return Err(CoreError::DimensionMismatch {
            left: batch_probs.len(),
            right: labels.len(),
        });
    }
    let mut sum = 0.0;
    for (probs, &label) in batch_probs.iter().zip(labels) {
        if label >= probs.len() {
            return Err(CoreError::ClassOutOfRange {
                index: label,
                n_classes: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-4 {
            return Err(CoreError::UnnormalizedProbs { sum: total });
        }
        sum += -libm::log(probs[label].clamp(PROB_FLOOR, 1.0));
    }
    Ok(sum)
}

/// Squared-hinge penalty `max(0, margin - ||a - b||)^2` on one pair.
pub fn contrastive(anchor: &[f64], partner: &[f64], margin: f64) -> Result<f64> {
    if anchor.len() != partner.len() {
        return Err(CoreError::DimensionMismatch {
            left: anchor.len(),
            right: partner.len(),
        });
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(CoreError::InvalidConfig(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let mut dist_sq = 0.0;
    for (a, b) in anchor.iter().zip(partner) {
        let diff = a - b;
        dist_sq += diff * diff;
    }
    let slack = margin - libm::sqrt(dist_sq);
    Ok(if slack > 0.0 { slack * slack } else { 0.0 })
}

/// Evaluates the mixed objective over one batch.
///
/// Pairs are required when `gamma < 1` and pairing is enabled, rejected when
/// pairing is `none`, and validated to be cross-label in every case. With
/// `gamma = 1` or `pairing_mode = none` the total equals the cross-entropy
/// sum exactly.
pub fn total_loss(
    outputs: &[EncoderOutput],
    labels: &[usize],
    pairs: Option<&PairAssignment>,
    config: &LossConfig,
) -> Result<LossTerms> {
    config.validate()?;
    if outputs.is_empty() {
        return Err(CoreError::EmptyInput("batch"));
    }
    if outputs.len() != labels.len() {
        return Err(CoreError::DimensionMismatch {
            left: outputs.len(),
            right: labels.len(),
        });
    }

    if config.pairing_mode == PairingMode::None && pairs.is_some() {
        return Err(CoreError::UnexpectedPairs);
    }
    if config.pairing_mode != PairingMode::None && config.gamma < 1.0 && pairs.is_none() {
        return Err(CoreError::MissingPairs);
    }

    let probs: Vec<&[f64]> = outputs.iter().map(|o| o.class_probs.as_slice()).collect();
    let ce_term = cross_entropy(&probs, labels)?;

    let mut contrastive_term = 0.0;
    if let Some(assignment) = pairs {
        if assignment.partners.len() != outputs.len() {
            return Err(CoreError::DimensionMismatch {
                left: outputs.len(),
                right: assignment.partners.len(),
            });
        }
        for (position, (partner, (&label, output))) in assignment
            .partners
            .iter()
            .zip(labels.iter().zip(outputs))
            .enumerate()
        {
            if partner.label == label {
                return Err(CoreError::SameLabelPair { position, label });
            }
            contrastive_term += contrastive(
                &output.representation,
                &partner.representation,
                config.margin,
            )?;
        }
    }

    let total = if config.pairing_mode == PairingMode::None {
        ce_term
    } else {
        config.gamma * ce_term + (1.0 - config.gamma) * contrastive_term
    };
    Ok(LossTerms {
        ce_term,
        contrastive_term,
        total,
    })
}
