//! Versioned JSON checkpoint container: encoder configuration, vocabulary,
//! and all parameter tensors. A reloaded checkpoint encodes bit-identically
//! because `f64` values round-trip exactly through JSON.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::encoder::{Architecture, EncoderConfig, Params, TinyEncoder, Vocab};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    pub format_version: u32,
    pub architecture: String,
    pub embed_dim: usize,
    pub max_seq_len: usize,
    pub n_classes: usize,
    pub rng_seed: u64,
    /// Vocabulary characters in id order (ids start after [CLS] and UNK).
    pub vocab: String,
    pub embed: Vec<f64>,
    pub mix_weight: Vec<f64>,
    pub mix_bias: Vec<f64>,
    pub head_weight: Vec<f64>,
    pub head_bias: Vec<f64>,
}

impl CheckpointFile {
    pub fn from_encoder(encoder: &TinyEncoder) -> Self {
        use dialogic_core::encoder::SentenceEncoder;
        let config = encoder.config();
        let params = encoder.params();
        CheckpointFile {
            format_version: CHECKPOINT_FORMAT_VERSION,
            architecture: config.architecture.as_str().to_string(),
            embed_dim: config.embed_dim,
            max_seq_len: config.max_seq_len,
            n_classes: config.n_classes,
            rng_seed: config.rng_seed,
            vocab: encoder.vocab().chars().iter().collect(),
            embed: params.embed.clone(),
            mix_weight: params.mix_weight.clone(),
            mix_bias: params.mix_bias.clone(),
            head_weight: params.head_weight.clone(),
            head_bias: params.head_bias.clone(),
        }
    }

    pub fn into_encoder(self) -> Result<TinyEncoder> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            bail!(
                "unsupported checkpoint format_version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                self.format_version
            );
        }
        let vocab = Vocab::from_chars(self.vocab.chars().collect());
        let config = EncoderConfig {
            vocab_size: vocab.size(),
            embed_dim: self.embed_dim,
            max_seq_len: self.max_seq_len,
            n_classes: self.n_classes,
            architecture: Architecture::parse(&self.architecture)?,
            rng_seed: self.rng_seed,
        };
        let mut params = Params::init(&config)?;
        let expected = [
            (params.embed.len(), self.embed.len(), "embed"),
            (params.mix_weight.len(), self.mix_weight.len(), "mix_weight"),
            (params.mix_bias.len(), self.mix_bias.len(), "mix_bias"),
            (
                params.head_weight.len(),
                self.head_weight.len(),
                "head_weight",
            ),
            (params.head_bias.len(), self.head_bias.len(), "head_bias"),
        ];
        for (want, got, name) in expected {
            if want != got {
                bail!("checkpoint tensor {name} has {got} values, expected {want}");
            }
        }
        params.embed = self.embed;
        params.mix_weight = self.mix_weight;
        params.mix_bias = self.mix_bias;
        params.head_weight = self.head_weight;
        params.head_bias = self.head_bias;
        Ok(TinyEncoder::from_parts(config, vocab, params)?)
    }
}

/// Writes a checkpoint; output bytes depend only on the encoder state.
pub fn save_checkpoint(path: &Path, encoder: &TinyEncoder) -> Result<()> {
    let file = CheckpointFile::from_encoder(encoder);
    let json = serde_json::to_string(&file)?;
    fs::write(path, json).with_context(|| format!("writing checkpoint {}", path.display()))?;
    Ok(())
}

/// Loads a checkpoint back into an encoder.
pub fn load_checkpoint(path: &Path) -> Result<TinyEncoder> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    let file: CheckpointFile = serde_json::from_str(&raw)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    file.into_encoder()
}

/// Fingerprint of a checkpoint file's bytes, used as the checkpoint id in
/// metrics reports.
pub fn checkpoint_id(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    Ok(crate::fingerprint(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dialogic_core::encoder::SentenceEncoder;

    fn sample_encoder() -> TinyEncoder {
        let vocab = Vocab::from_texts(["大家好请坐我们上课了"].into_iter());
        let config = EncoderConfig {
            vocab_size: vocab.size(),
            embed_dim: 6,
            max_seq_len: 12,
            n_classes: 9,
            architecture: Architecture::TinyReference,
            rng_seed: 5,
        };
        TinyEncoder::new(config, vocab).unwrap()
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let encoder = sample_encoder();
        let file = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(file.path(), &encoder).unwrap();
        let restored = load_checkpoint(file.path()).unwrap();
        assert_eq!(restored.params(), encoder.params());
        assert_eq!(restored.vocab(), encoder.vocab());

        let seqs = vec![encoder.tokenize("大家好").unwrap()];
        let a = encoder.encode_batch(&seqs).unwrap();
        let b = restored.encode_batch(&seqs).unwrap();
        assert_eq!(a, b, "encode outputs must reload bit-identically");
    }

    #[test]
    fn rewriting_a_checkpoint_is_byte_identical() {
        let encoder = sample_encoder();
        let f1 = tempfile::NamedTempFile::new().unwrap();
        let f2 = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(f1.path(), &encoder).unwrap();
        save_checkpoint(f2.path(), &encoder).unwrap();
        assert_eq!(
            std::fs::read(f1.path()).unwrap(),
            std::fs::read(f2.path()).unwrap()
        );
    }

    #[test]
    fn version_mismatch_rejected() {
        let encoder = sample_encoder();
        let mut file = CheckpointFile::from_encoder(&encoder);
        file.format_version = 99;
        assert!(file.into_encoder().is_err());
    }

    #[test]
    fn tensor_size_mismatch_rejected() {
        let encoder = sample_encoder();
        let mut file = CheckpointFile::from_encoder(&encoder);
        file.mix_bias.pop();
        assert!(file.into_encoder().is_err());
    }
}
