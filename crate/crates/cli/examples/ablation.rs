//! Runs the three-mode ablation programmatically: one synthetic corpus,
//! several training seeds per mode, mean validation macro-F1 per mode.
//!
//! Usage: cargo run --example ablation [n_per_class] [n_seeds]

use dialogic_core::corpus::{
    generate_synthetic_corpus, Dataset, NoiseSpec, SplitFractions, TemplateSet,
};
use dialogic_core::encoder::{Architecture, EncoderConfig};
use dialogic_core::loss::{LossConfig, PairingMode};
use dialogic_core::trainer::{train, TrainConfig, TrainData, TrainState};

fn print_per_class(
    config: &TrainConfig,
    dataset: &Dataset,
    encoder: &dialogic_core::encoder::TinyEncoder,
) -> anyhow::Result<()> {
    use dialogic_core::encoder::SentenceEncoder;
    let (_, data): (TrainState, TrainData) = TrainState::init(config, dataset)?;
    let mut preds = Vec::new();
    for chunk in data.val_items.chunks(64) {
        let seqs: Vec<Vec<u32>> = chunk.iter().map(|i| i.ids.clone()).collect();
        for out in encoder.encode_batch(&seqs)? {
            preds.push(dialogic_core::mining::argmax(&out.class_probs));
        }
    }
    let labels: Vec<usize> = data.val_items.iter().map(|i| i.label).collect();
    print!("    per-class F1:");
    for c in 0..9 {
        let tp = labels
            .iter()
            .zip(&preds)
            .filter(|(&l, &p)| l == c && p == c)
            .count() as f64;
        let fp = labels
            .iter()
            .zip(&preds)
            .filter(|(&l, &p)| l != c && p == c)
            .count() as f64;
        let fn_ = labels
            .iter()
            .zip(&preds)
            .filter(|(&l, &p)| l == c && p != c)
            .count() as f64;
        let f1 = if tp > 0.0 {
            2.0 * tp / (2.0 * tp + fp + fn_)
        } else {
            0.0
        };
        print!(" {f1:.3}");
    }
    println!();
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_per_class: usize = args.next().map_or(Ok(400), |a| a.parse())?;
    let n_seeds: u64 = args.next().map_or(Ok(5), |a| a.parse())?;
    let gamma: f64 = args.next().map_or(Ok(0.5), |a| a.parse())?;
    let margin: f64 = args.next().map_or(Ok(1.0), |a| a.parse())?;
    let epochs: usize = args.next().map_or(Ok(30), |a| a.parse())?;
    let embed_dim: usize = args.next().map_or(Ok(8), |a| a.parse())?;
    let learning_rate: f64 = args.next().map_or(Ok(0.05), |a| a.parse())?;
    let seed_base: u64 = args.next().map_or(Ok(0), |a| a.parse())?;
    let train_frac: f64 = args.next().map_or(Ok(0.25), |a| a.parse())?;
    let val_frac: f64 = args.next().map_or(Ok(0.4), |a| a.parse())?;

    let templates = TemplateSet::builtin();
    let noise = NoiseSpec {
        target_cer: 0.1136,
        rng_seed: 7,
        ..NoiseSpec::default()
    };
    let corpus = generate_synthetic_corpus(
        n_per_class,
        &templates,
        &noise,
        2024,
        SplitFractions {
            train: train_frac,
            validation: val_frac,
        },
    )?;
    println!(
        "corpus: {} examples, realized CER {:.4}",
        corpus.examples.len(),
        corpus.realized_cer
    );
    let dataset = Dataset::from_examples(corpus.examples)?;

    let modes = [
        ("baseline", PairingMode::None, 1.0),
        ("all", PairingMode::RandomAll, gamma),
        ("hard", PairingMode::Hard, gamma),
    ];
    for (name, pairing_mode, gamma) in modes {
        let mut scores = Vec::new();
        for seed in (seed_base + 1)..=(seed_base + n_seeds) {
            let config = TrainConfig {
                loss: LossConfig {
                    gamma,
                    margin,
                    pairing_mode,
                },
                encoder: EncoderConfig {
                    vocab_size: 2,
                    embed_dim,
                    max_seq_len: 32,
                    n_classes: 9,
                    architecture: Architecture::TinyReference,
                    rng_seed: seed,
                },
                batch_size: 32,
                epochs,
                learning_rate,
                rng_seed: seed,
                early_stop_patience: 6,
                pool_capacity: 512,
                pool_clear_per_step: false,
            };
            let outcome = train(&config, &dataset)?;
            let f1 = outcome.best_val_macro_f1.unwrap();
            scores.push(f1);
            println!(
                "  {name} seed {seed}: best val macro-F1 {f1:.4} (epoch {})",
                outcome.best_epoch
            );
            if std::env::var("ABLATION_PER_CLASS").is_ok() {
                print_per_class(&config, &dataset, &outcome.encoder)?;
            }
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        println!("{name}: mean {mean:.4}");
    }
    Ok(())
}
