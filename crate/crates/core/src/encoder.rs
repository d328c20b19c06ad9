//! Pluggable sentence encoder with a tiny trainable reference implementation.
//!
//! Input text is tokenized at character level into a `[CLS]`-prefixed id
//! sequence. The reference encoder embeds every token, mean-pools the
//! positions through a mixing layer, and takes the resulting position-0 state
//! as the sentence representation; a single affine head plus softmax yields
//! class probabilities.
//!
//! The [`SentenceEncoder`] trait is the seam for dropping in an external
//! pre-trained model with the same encode contract; training and gradient
//! computation are specific to [`TinyEncoder`].

use alloc::string::String;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::loss::{self, LossConfig, LossTerms, PairAssignment, PairPartner};
use crate::rng::Rng;

/// Reserved id for the sequence-prefix classification token.
pub const CLS_ID: u32 = 0;
/// Reserved id for out-of-vocabulary characters.
pub const UNK_ID: u32 = 1;
/// First id assigned to vocabulary characters.
pub const CHAR_ID_BASE: u32 = 2;

/// Encoder architecture selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// The built-in trainable reference encoder.
    TinyReference,
    /// Placeholder for an externally provided encoder honoring the same
    /// encode contract. Loading such models is out of scope here.
    ExternalAdapter,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::TinyReference => "tiny-reference",
            Architecture::ExternalAdapter => "external-adapter",
        }
    }

    pub fn parse(value: &str) -> Result<Self> {
        match value {
            "tiny-reference" => Ok(Architecture::TinyReference),
            "external-adapter" => Ok(Architecture::ExternalAdapter),
            other => Err(CoreError::InvalidConfig(alloc::format!(
                "unknown architecture {other:?}"
            ))),
        }
    }
}

/// Hyperparameters of the sentence encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub max_seq_len: usize,
    pub n_classes: usize,
    pub architecture: Architecture,
    pub rng_seed: u64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < CHAR_ID_BASE as usize {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "vocab_size must be at least {CHAR_ID_BASE}, got {}",
                self.vocab_size
            )));
        }
        if self.embed_dim == 0 {
            return Err(CoreError::InvalidConfig(
                "embed_dim must be at least 1".to_string(),
            ));
        }
        if self.max_seq_len < 2 {
            return Err(CoreError::InvalidConfig(
                "max_seq_len must be at least 2".to_string(),
            ));
        }
        if self.n_classes == 0 {
            return Err(CoreError::InvalidConfig(
                "n_classes must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Character vocabulary with reserved [CLS] and UNK ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    chars: Vec<char>,
}

impl Vocab {
    /// Builds a vocabulary from the characters of `texts`, sorted and
    /// deduplicated so construction order does not matter.
    pub fn from_texts<'a>(texts: impl Iterator<Item = &'a str>) -> Self {
        let mut chars: Vec<char> = texts.flat_map(|t| t.chars()).collect();
        chars.sort_unstable();
        chars.dedup();
        Vocab { chars }
    }

    /// Restores a vocabulary from a stored character list (checkpoint load).
    pub fn from_chars(chars: Vec<char>) -> Self {
        Vocab { chars }
    }

    /// Table size including the two reserved ids.
    pub fn size(&self) -> usize {
        self.chars.len() + CHAR_ID_BASE as usize
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn id_of(&self, c: char) -> u32 {
        match self.chars.binary_search(&c) {
            Ok(i) => CHAR_ID_BASE + i as u32,
            Err(_) => UNK_ID,
        }
    }
}

/// Tokenizes text into a `[CLS]`-prefixed id sequence of at most
/// `max_seq_len` ids (tail truncated).
pub fn tokenize(text: &str, vocab: &Vocab, max_seq_len: usize) -> Result<Vec<u32>> {
    if text.is_empty() {
        return Err(CoreError::EmptyInput("text"));
    }
    let mut ids = Vec::with_capacity(max_seq_len.min(text.len() + 1));
    ids.push(CLS_ID);
    for c in text.chars() {
        if ids.len() == max_seq_len {
            break;
        }
        ids.push(vocab.id_of(c));
    }
    Ok(ids)
}

/// Sentence representation plus class probabilities for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// Final [CLS]-position state, length `embed_dim`.
    pub representation: Vec<f64>,
    /// Softmax class probabilities, length `n_classes`.
    pub class_probs: Vec<f64>,
}

/// Common encode contract; the seam for external pre-trained encoders.
pub trait SentenceEncoder {
    fn config(&self) -> &EncoderConfig;

    /// Encodes a non-empty batch of `[CLS]`-prefixed id sequences, one
    /// output per input, deterministically.
    fn encode_batch(&self, seqs: &[Vec<u32>]) -> Result<Vec<EncoderOutput>>;
}

/// All trainable tensors of the reference encoder. The same structure is
/// used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// vocab_size x dim token embeddings, row-major.
    pub embed: Vec<f64>,
    /// dim x dim mixing weights, row-major.
    pub mix_weight: Vec<f64>,
    /// dim mixing bias.
    pub mix_bias: Vec<f64>,
    /// n_classes x dim classification head, row-major.
    pub head_weight: Vec<f64>,
    /// n_classes head bias.
    pub head_bias: Vec<f64>,
    vocab_size: usize,
    dim: usize,
    n_classes: usize,
}

impl Params {
    /// Seeded initialization: uniform values in `[-1/sqrt(dim), 1/sqrt(dim)]`.
    pub fn init(config: &EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::seed_from(config.rng_seed);
        let scale = 1.0 / libm::sqrt(config.embed_dim as f64);
        let mut fill =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.range_f64(-scale, scale)).collect() };
        let (v, d, c) = (config.vocab_size, config.embed_dim, config.n_classes);
        Ok(Params {
            embed: fill(v * d),
            mix_weight: fill(d * d),
            mix_bias: fill(d),
            head_weight: fill(c * d),
            head_bias: fill(c),
            vocab_size: v,
            dim: d,
            n_classes: c,
        })
    }

    /// All-zero tensors with the same shapes as `self`.
    pub fn zeros_like(&self) -> Self {
        Params {
            embed: vec![0.0; self.embed.len()],
            mix_weight: vec![0.0; self.mix_weight.len()],
            mix_bias: vec![0.0; self.mix_bias.len()],
            head_weight: vec![0.0; self.head_weight.len()],
            head_bias: vec![0.0; self.head_bias.len()],
            vocab_size: self.vocab_size,
            dim: self.dim,
            n_classes: self.n_classes,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.vocab_size, self.dim, self.n_classes)
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.embed.len()
            + self.mix_weight.len()
            + self.mix_bias.len()
            + self.head_weight.len()
            + self.head_bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn tensors(&self) -> [&[f64]; 5] {
        [
            &self.embed,
            &self.mix_weight,
            &self.mix_bias,
            &self.head_weight,
            &self.head_bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.embed,
            &mut self.mix_weight,
            &mut self.mix_bias,
            &mut self.head_weight,
            &mut self.head_bias,
        ]
    }

    /// Reads one scalar by flat index over the concatenated tensors.
    pub fn get_flat(&self, index: usize) -> f64 {
        let mut offset = index;
        for t in self.tensors() {
            if offset < t.len() {
                return t[offset];
            }
            offset -= t.len();
        }
        panic!("flat index {index} out of range");
    }

    /// Writes one scalar by flat index over the concatenated tensors.
    pub fn set_flat(&mut self, index: usize, value: f64) {
        let mut offset = index;
        for t in self.tensors_mut() {
            if offset < t.len() {
                t[offset] = value;
                return;
            }
            offset -= t.len();
        }
        panic!("flat index {index} out of range");
    }

    /// self += alpha * other, elementwise. Shapes must match.
    pub fn axpy(&mut self, alpha: f64, other: &Params) {
        debug_assert_eq!(self.dims(), other.dims());
        let update = |dst: &mut [f64], src: &[f64]| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        };
        update(&mut self.embed, &other.embed);
        update(&mut self.mix_weight, &other.mix_weight);
        update(&mut self.mix_bias, &other.mix_bias);
        update(&mut self.head_weight, &other.head_weight);
        update(&mut self.head_bias, &other.head_bias);
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// A tokenized training example: uid for diagnostics, ids for the forward
/// pass, label as a class index.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingItem {
    pub uid: String,
    pub ids: Vec<u32>,
    pub label: usize,
}

/// Loss value plus the gradient of every trainable parameter.
#[derive(Debug)]
pub struct GradientResult {
    pub grads: Params,
    pub terms: LossTerms,
    /// Anchor outputs from the same forward pass, index-aligned.
    pub anchor_outputs: Vec<EncoderOutput>,
}

/// Intermediate forward state retained for backpropagation.
struct ForwardTrace {
    len: usize,
    pooled: Vec<f64>,
    rep: Vec<f64>,
    probs: Vec<f64>,
}

/// The trainable reference encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyEncoder {
    config: EncoderConfig,
    vocab: Vocab,
    params: Params,
}

/// Probabilities are clamped to at least this value inside logarithms.
pub(crate) const PROB_FLOOR: f64 = 1e-12;

impl TinyEncoder {
    /// Creates an encoder with freshly initialized parameters.
    pub fn new(config: EncoderConfig, vocab: Vocab) -> Result<Self> {
        if config.vocab_size != vocab.size() {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "config vocab_size {} does not match vocabulary size {}",
                config.vocab_size,
                vocab.size()
            )));
        }
        let params = Params::init(&config)?;
        Ok(TinyEncoder {
            config,
            vocab,
            params,
        })
    }

    /// Restores an encoder from stored parts (checkpoint load).
    pub fn from_parts(config: EncoderConfig, vocab: Vocab, params: Params) -> Result<Self> {
        config.validate()?;
        if config.vocab_size != vocab.size() {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "config vocab_size {} does not match vocabulary size {}",
                config.vocab_size,
                vocab.size()
            )));
        }
        let (v, d, c) = params.dims();
        if (v, d, c) != (config.vocab_size, config.embed_dim, config.n_classes) {
            return Err(CoreError::InvalidConfig(
                "parameter tensor shapes do not match the configuration".to_string(),
            ));
        }
        Ok(TinyEncoder {
            config,
            vocab,
            params,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<u32>> {
        tokenize(text, &self.vocab, self.config.max_seq_len)
    }

    /// Tokenize + encode in one call.
    pub fn encode_texts(&self, texts: &[&str]) -> Result<Vec<EncoderOutput>> {
        let seqs = texts
            .iter()
            .map(|t| self.tokenize(t))
            .collect::<Result<Vec<_>>>()?;
        self.encode_batch(&seqs)
    }

    /// Argmax class of one text, ties resolved to the lowest index.
    pub fn predict_class(&self, text: &str) -> Result<usize> {
        let outputs = self.encode_texts(&[text])?;
        Ok(crate::mining::argmax(&outputs[0].class_probs))
    }

    fn check_sequence(&self, ids: &[u32]) -> Result<()> {
        if ids.is_empty() || ids[0] != CLS_ID {
            return Err(CoreError::MissingClsPrefix);
        }
        if ids.len() > self.config.max_seq_len {
            return Err(CoreError::SequenceTooLong {
                len: ids.len(),
                max: self.config.max_seq_len,
            });
        }
        if let Some(&id) = ids
            .iter()
            .find(|&&id| id as usize >= self.config.vocab_size)
        {
            return Err(CoreError::TokenOutOfRange {
                id,
                vocab_size: self.config.vocab_size,
            });
        }
        Ok(())
    }

    fn forward(&self, ids: &[u32]) -> ForwardTrace {
        let d = self.config.embed_dim;
        let c = self.config.n_classes;
        let len = ids.len();
        let inv_len = 1.0 / len as f64;

        let mut pooled = vec![0.0; d];
        for &id in ids {
            let row = &self.params.embed[id as usize * d..(id as usize + 1) * d];
            for (p, &e) in pooled.iter_mut().zip(row) {
                *p += e;
            }
        }
        for p in pooled.iter_mut() {
            *p *= inv_len;
        }

        let mut rep = vec![0.0; d];
        for (k, rep_k) in rep.iter_mut().enumerate() {
            let row = &self.params.mix_weight[k * d..(k + 1) * d];
            let mut acc = self.params.mix_bias[k];
            for (w, p) in row.iter().zip(&pooled) {
                acc += w * p;
            }
            *rep_k = libm::tanh(acc);
        }

        let mut logits = vec![0.0; c];
        for (j, logit) in logits.iter_mut().enumerate() {
            let row = &self.params.head_weight[j * d..(j + 1) * d];
            let mut acc = self.params.head_bias[j];
            for (w, r) in row.iter().zip(&rep) {
                acc += w * r;
            }
            *logit = acc;
        }
        let probs = softmax(&logits);

        ForwardTrace {
            len,
            pooled,
            rep,
            probs,
        }
    }

    /// Backpropagates a gradient on the representation (and optionally on
    /// the logits) of one forward trace into `grads`.
    #[allow(clippy::needless_range_loop)] // indexed math over parallel row slices
    fn backward_one(
        &self,
        ids: &[u32],
        trace: &ForwardTrace,
        logit_grad: Option<&[f64]>,
        rep_grad_extra: &[f64],
        grads: &mut Params,
    ) {
        let d = self.config.embed_dim;

        // head + gradient on the representation
        let mut rep_grad = rep_grad_extra.to_vec();
        if let Some(gl) = logit_grad {
            for (j, &g) in gl.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grads.head_bias[j] += g;
                let w_row = &self.params.head_weight[j * d..(j + 1) * d];
                let g_row = &mut grads.head_weight[j * d..(j + 1) * d];
                for k in 0..d {
                    g_row[k] += g * trace.rep[k];
                    rep_grad[k] += g * w_row[k];
                }
            }
        }

        // tanh and mixing layer
        let mut pooled_grad = vec![0.0; d];
        for k in 0..d {
            let g_pre = rep_grad[k] * (1.0 - trace.rep[k] * trace.rep[k]);
            if g_pre == 0.0 {
                continue;
            }
            grads.mix_bias[k] += g_pre;
            let w_row = &self.params.mix_weight[k * d..(k + 1) * d];
            let g_row = &mut grads.mix_weight[k * d..(k + 1) * d];
            for m in 0..d {
                g_row[m] += g_pre * trace.pooled[m];
                pooled_grad[m] += g_pre * w_row[m];
            }
        }

        // mean pooling into the embedding table
        let inv_len = 1.0 / trace.len as f64;
        for &id in ids {
            let row = &mut grads.embed[id as usize * d..(id as usize + 1) * d];
            for (g, &pg) in row.iter_mut().zip(&pooled_grad) {
                *g += pg * inv_len;
            }
        }
    }

    /// Computes the total loss and its gradient with respect to every
    /// trainable parameter for one batch of anchors and optional partners.
    ///
    /// Partner representations are encoded here with the current parameters;
    /// gradients flow through both sides of each pair distance. The loss
    /// value itself is delegated to [`loss::total_loss`], so this function and
    /// the loss module cannot drift apart.
    pub fn gradients(
        &self,
        anchors: &[&TrainingItem],
        partners: Option<&[&TrainingItem]>,
        cfg: &LossConfig,
    ) -> Result<GradientResult> {
        if anchors.is_empty() {
            return Err(CoreError::EmptyInput("anchors"));
        }
        for item in anchors {
            self.check_sequence(&item.ids)?;
        }
        if let Some(ps) = partners {
            if ps.len() != anchors.len() {
                return Err(CoreError::DimensionMismatch {
                    left: anchors.len(),
                    right: ps.len(),
                });
            }
            for item in ps {
                self.check_sequence(&item.ids)?;
            }
        }

        let anchor_traces: Vec<ForwardTrace> =
            anchors.iter().map(|a| self.forward(&a.ids)).collect();
        let partner_traces: Option<Vec<ForwardTrace>> =
            partners.map(|ps| ps.iter().map(|p| self.forward(&p.ids)).collect());

        let anchor_outputs: Vec<EncoderOutput> = anchor_traces
            .iter()
            .map(|t| EncoderOutput {
                representation: t.rep.clone(),
                class_probs: t.probs.clone(),
            })
            .collect();
        let labels: Vec<usize> = anchors.iter().map(|a| a.label).collect();
        let pair_assignment = match (partners, &partner_traces) {
            (Some(ps), Some(traces)) => Some(PairAssignment {
                partners: ps
                    .iter()
                    .zip(traces)
                    .map(|(p, t)| PairPartner {
                        uid: p.uid.clone(),
                        label: p.label,
                        representation: t.rep.clone(),
                    })
                    .collect(),
            }),
            _ => None,
        };

        let terms = loss::total_loss(&anchor_outputs, &labels, pair_assignment.as_ref(), cfg)?;
        if !terms.total.is_finite() {
            let term = if !terms.ce_term.is_finite() {
                "cross-entropy"
            } else {
                "contrastive"
            };
            return Err(CoreError::NonFinite {
                term,
                uids: join_uids(anchors),
            });
        }

        let ce_coeff = if cfg.pairing_mode == loss::PairingMode::None {
            1.0
        } else {
            cfg.gamma
        };
        let contr_coeff = if cfg.pairing_mode == loss::PairingMode::None {
            0.0
        } else {
            1.0 - cfg.gamma
        };

        let d = self.config.embed_dim;
        let c = self.config.n_classes;
        let mut grads = self.params.zeros_like();
        let zero_rep = vec![0.0; d];

        for (i, (anchor, trace)) in anchors.iter().zip(&anchor_traces).enumerate() {
            // cross-entropy through the head: coeff * (p - onehot), flat when
            // the clamped probability floor is active
            let mut logit_grad = None;
            if ce_coeff != 0.0 && trace.probs[anchor.label] > PROB_FLOOR {
                let mut g = vec![0.0; c];
                for (j, &p) in trace.probs.iter().enumerate() {
                    g[j] = ce_coeff * (p - f64::from(u8::from(j == anchor.label)));
                }
                logit_grad = Some(g);
            }

            // contrastive pull on the anchor representation
            let rep_extra = match (&partner_traces, contr_coeff != 0.0) {
                (Some(traces), true) => {
                    pair_rep_grad(&trace.rep, &traces[i].rep, cfg.margin, contr_coeff)
                }
                _ => None,
            };

            self.backward_one(
                &anchor.ids,
                trace,
                logit_grad.as_deref(),
                rep_extra.as_deref().unwrap_or(&zero_rep),
                &mut grads,
            );
        }

        if let (Some(ps), Some(traces)) = (partners, &partner_traces) {
            if contr_coeff != 0.0 {
                for (i, (partner, trace)) in ps.iter().zip(traces).enumerate() {
                    // same magnitude as the anchor side, opposite sign
                    if let Some(mut g) =
                        pair_rep_grad(&anchor_traces[i].rep, &trace.rep, cfg.margin, contr_coeff)
                    {
                        for v in g.iter_mut() {
                            *v = -*v;
                        }
                        self.backward_one(&partner.ids, trace, None, &g, &mut grads);
                    }
                }
            }
        }

        if !grads.all_finite() {
            return Err(CoreError::NonFinite {
                term: "gradients",
                uids: join_uids(anchors),
            });
        }

        Ok(GradientResult {
            grads,
            terms,
            anchor_outputs,
        })
    }
}

impl SentenceEncoder for TinyEncoder {
    fn config(&self) -> &EncoderConfig {
        &self.config
    }

    fn encode_batch(&self, seqs: &[Vec<u32>]) -> Result<Vec<EncoderOutput>> {
        if seqs.is_empty() {
            return Err(CoreError::EmptyInput("batch"));
        }
        seqs.iter()
            .map(|ids| {
                self.check_sequence(ids)?;
                let trace = self.forward(ids);
                Ok(EncoderOutput {
                    representation: trace.rep,
                    class_probs: trace.probs,
                })
            })
            .collect()
    }
}

/// Gradient of the squared-hinge pair term with respect to the anchor
/// representation, scaled by `coeff`. `None` when the pair is outside the
/// margin or exactly coincident (flat regions).
fn pair_rep_grad(anchor: &[f64], partner: &[f64], margin: f64, coeff: f64) -> Option<Vec<f64>> {
    let mut dist_sq = 0.0;
    for (a, b) in anchor.iter().zip(partner) {
        let diff = a - b;
        dist_sq += diff * diff;
    }
    let dist = libm::sqrt(dist_sq);
    if dist >= margin || dist <= 1e-300 {
        return None;
    }
    let scale = coeff * (-2.0) * (margin - dist) / dist;
    Some(
        anchor
            .iter()
            .zip(partner)
            .map(|(a, b)| scale * (a - b))
            .collect(),
    )
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn join_uids(items: &[&TrainingItem]) -> String {
    let mut s = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&item.uid);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(vocab: &Vocab) -> EncoderConfig {
        EncoderConfig {
            vocab_size: vocab.size(),
            embed_dim: 8,
            max_seq_len: 16,
            n_classes: 9,
            architecture: Architecture::TinyReference,
            rng_seed: 42,
        }
    }

    fn sample_vocab() -> Vocab {
        Vocab::from_texts(["大家好早上请坐我们做笔记今天学方程"].into_iter())
    }

    #[test]
    fn tokenize_prefixes_cls() {
        let vocab = sample_vocab();
        let ids = tokenize("大家好", &vocab, 16).unwrap();
        assert_eq!(ids[0], CLS_ID);
        assert_eq!(ids.len(), 4);
        assert!(ids[1..].iter().all(|&id| id >= CHAR_ID_BASE));
    }

    #[test]
    fn tokenize_rejects_empty() {
        let vocab = sample_vocab();
        assert_eq!(
            tokenize("", &vocab, 16).unwrap_err(),
            CoreError::EmptyInput("text")
        );
    }

    #[test]
    fn tokenize_truncates_to_max_len() {
        let vocab = sample_vocab();
        let long = "好".repeat(10_000);
        let ids = tokenize(&long, &vocab, 64).unwrap();
        assert_eq!(ids.len(), 64);
    }

    #[test]
    fn oov_maps_to_unk() {
        let vocab = sample_vocab();
        let ids = tokenize("xyz", &vocab, 16).unwrap();
        assert_eq!(&ids[1..], &[UNK_ID, UNK_ID, UNK_ID]);
    }

    #[test]
    fn encode_normalizes_probs() {
        let vocab = sample_vocab();
        let enc = TinyEncoder::new(config(&vocab), vocab.clone()).unwrap();
        let outputs = enc.encode_texts(&["大家好", "做笔记", "学方程"]).unwrap();
        assert_eq!(outputs.len(), 3);
        for out in &outputs {
            let sum: f64 = out.class_probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6, "sum {sum}");
            assert!(out.class_probs.iter().all(|&p| p > 0.0 && p < 1.0));
            assert!(out.representation.iter().all(|v| v.is_finite()));
            assert_eq!(out.representation.len(), 8);
        }
    }

    #[test]
    fn encode_is_deterministic() {
        let vocab = sample_vocab();
        let enc = TinyEncoder::new(config(&vocab), vocab).unwrap();
        let ids = enc.tokenize("大家好").unwrap();
        let out = enc.encode_batch(&[ids.clone(), ids]).unwrap();
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn zero_params_give_uniform_probs() {
        // softmax of an all-zero logit vector is exactly uniform
        let vocab = sample_vocab();
        let cfg = config(&vocab);
        let mut enc = TinyEncoder::new(cfg.clone(), vocab).unwrap();
        *enc.params_mut() = enc.params().zeros_like();
        let out = enc.encode_texts(&["大家好"]).unwrap();
        for &p in &out[0].class_probs {
            assert!((p - 1.0 / 9.0).abs() < 1e-15, "p {p}");
        }
    }

    #[test]
    fn encode_rejects_bad_sequences() {
        let vocab = sample_vocab();
        let enc = TinyEncoder::new(config(&vocab), vocab).unwrap();
        assert_eq!(
            enc.encode_batch(&[vec![5, 6]]).unwrap_err(),
            CoreError::MissingClsPrefix
        );
        let too_long: Vec<u32> = core::iter::once(CLS_ID)
            .chain((0..20).map(|_| UNK_ID))
            .collect();
        assert!(matches!(
            enc.encode_batch(&[too_long]).unwrap_err(),
            CoreError::SequenceTooLong { .. }
        ));
        assert!(enc.encode_batch(&[]).is_err());
    }

    #[test]
    fn representation_dim_constant() {
        let vocab = sample_vocab();
        let enc = TinyEncoder::new(config(&vocab), vocab).unwrap();
        let outs = enc
            .encode_texts(&["好", "大家好早上请坐我们做", "学"])
            .unwrap();
        assert!(outs.iter().all(|o| o.representation.len() == 8));
    }

    #[test]
    fn non_finite_parameters_name_the_batch() {
        let vocab = sample_vocab();
        let mut enc = TinyEncoder::new(config(&vocab), vocab).unwrap();
        enc.params_mut().mix_bias[0] = f64::NAN;
        let item = TrainingItem {
            uid: "bad-1".into(),
            ids: enc.tokenize("大家好").unwrap(),
            label: 0,
        };
        let cfg = crate::loss::LossConfig {
            gamma: 1.0,
            margin: 1.0,
            pairing_mode: crate::loss::PairingMode::None,
        };
        let err = enc.gradients(&[&item], None, &cfg).unwrap_err();
        match err {
            CoreError::NonFinite { uids, .. } => assert!(uids.contains("bad-1")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn flat_indexing_round_trips() {
        let vocab = sample_vocab();
        let enc = TinyEncoder::new(config(&vocab), vocab).unwrap();
        let mut params = enc.params().clone();
        let n = params.len();
        assert_eq!(
            n,
            params.embed.len()
                + params.mix_weight.len()
                + params.mix_bias.len()
                + params.head_weight.len()
                + params.head_bias.len()
        );
        for idx in [0, 1, n / 3, n / 2, n - 1] {
            let old = params.get_flat(idx);
            params.set_flat(idx, old + 1.5);
            assert_eq!(params.get_flat(idx), old + 1.5);
            params.set_flat(idx, old);
        }
    }
}
