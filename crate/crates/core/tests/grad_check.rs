//! Central finite-difference verification of the analytic gradients.
//!
//! The oracle path recomputes the loss value through `encode_batch` +
//! `loss::total_loss` at perturbed parameters; it never touches the
//! backward pass under test.

use dialogic_core::encoder::{
    Architecture, EncoderConfig, Params, SentenceEncoder, TinyEncoder, TrainingItem, Vocab,
};
use dialogic_core::loss::{self, LossConfig, PairAssignment, PairPartner, PairingMode};
use dialogic_core::rng::Rng;

const FD_STEP: f64 = 1e-4;

struct Fixture {
    encoder: TinyEncoder,
    anchors: Vec<TrainingItem>,
    partners: Vec<TrainingItem>,
}

fn fixture(seed: u64, n_classes: usize, embed_dim: usize) -> Fixture {
    let vocab = Vocab::from_texts(["abcdefghij"].into_iter());
    let config = EncoderConfig {
        vocab_size: vocab.size(),
        embed_dim,
        max_seq_len: 12,
        n_classes,
        architecture: Architecture::TinyReference,
        rng_seed: seed,
    };
    let encoder = TinyEncoder::new(config, vocab).unwrap();

    let mut rng = Rng::seed_from(seed ^ 0x5eed);
    let chars: Vec<char> = "abcdefghij".chars().collect();
    let mut item = |tag: &str, k: usize| {
        let len = 3 + rng.below(6);
        let text: String = (0..len).map(|_| chars[rng.below(chars.len())]).collect();
        TrainingItem {
            uid: format!("{tag}{k}"),
            ids: encoder.tokenize(&text).unwrap(),
            label: k % n_classes,
        }
    };
    let anchors: Vec<TrainingItem> = (0..6).map(|k| item("a", k)).collect();
    // partner labels are anchor labels shifted by one class
    let partners: Vec<TrainingItem> = (0..6)
        .map(|k| {
            let mut p = item("p", k + 1);
            p.label = (k + 1) % n_classes;
            p
        })
        .collect();
    Fixture {
        encoder,
        anchors,
        partners,
    }
}

/// Loss value at the encoder's current parameters, computed without the
/// gradient code path.
fn loss_value(
    encoder: &TinyEncoder,
    anchors: &[TrainingItem],
    partners: Option<&[TrainingItem]>,
    cfg: &LossConfig,
) -> f64 {
    let anchor_seqs: Vec<Vec<u32>> = anchors.iter().map(|a| a.ids.clone()).collect();
    let outputs = encoder.encode_batch(&anchor_seqs).unwrap();
    let labels: Vec<usize> = anchors.iter().map(|a| a.label).collect();
    let pairs = partners.map(|ps| {
        let seqs: Vec<Vec<u32>> = ps.iter().map(|p| p.ids.clone()).collect();
        let outs = encoder.encode_batch(&seqs).unwrap();
        PairAssignment {
            partners: ps
                .iter()
                .zip(outs)
                .map(|(p, o)| PairPartner {
                    uid: p.uid.clone(),
                    label: p.label,
                    representation: o.representation,
                })
                .collect(),
        }
    });
    loss::total_loss(&outputs, &labels, pairs.as_ref(), cfg)
        .unwrap()
        .total
}

/// Relative error with a floor that keeps near-zero coordinates meaningful:
/// finite-difference noise is orders of magnitude below the floor.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Checks `n_coords` sampled parameter coordinates plus the whole head and
/// mixing layer; returns the worst relative error.
fn check_gradients(fx: &mut Fixture, cfg: &LossConfig, with_pairs: bool, n_coords: usize) -> f64 {
    let anchor_refs: Vec<&TrainingItem> = fx.anchors.iter().collect();
    let partner_refs: Vec<&TrainingItem> = fx.partners.iter().collect();
    let grad_partners = with_pairs.then_some(partner_refs.as_slice());
    let loss_partners = with_pairs.then_some(fx.partners.as_slice());

    let analytic = fx
        .encoder
        .gradients(&anchor_refs, grad_partners, cfg)
        .unwrap()
        .grads;

    let total = fx.encoder.params().len();
    let (vocab_size, dim, _) = fx.encoder.params().dims();
    let embed_len = vocab_size * dim;
    // every non-embedding coordinate, then random embedding coordinates
    let mut coords: Vec<usize> = (embed_len..total).collect();
    let mut rng = Rng::seed_from(0xc0de);
    while coords.len() < n_coords.max(total - embed_len) + n_coords / 2 {
        coords.push(rng.below(embed_len));
    }
    assert!(coords.len() >= n_coords, "sampled {} coords", coords.len());

    let mut worst = 0.0f64;
    for &idx in &coords {
        let original = fx.encoder.params().get_flat(idx);
        fx.encoder.params_mut().set_flat(idx, original + FD_STEP);
        let plus = loss_value(&fx.encoder, &fx.anchors, loss_partners, cfg);
        fx.encoder.params_mut().set_flat(idx, original - FD_STEP);
        let minus = loss_value(&fx.encoder, &fx.anchors, loss_partners, cfg);
        fx.encoder.params_mut().set_flat(idx, original);

        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic.get_flat(idx), numeric);
        assert!(
            err <= 1e-3,
            "coordinate {idx}: analytic {} vs numeric {numeric} (rel err {err})",
            analytic.get_flat(idx)
        );
        worst = worst.max(err);
    }
    worst
}

#[test]
fn gradients_match_finite_differences_across_gamma_and_modes() {
    let mut worst = 0.0f64;
    for (gamma, mode, with_pairs) in [
        (1.0, PairingMode::None, false),
        (0.5, PairingMode::None, false),
        (1.0, PairingMode::Hard, true),
        (0.5, PairingMode::RandomAll, true),
        (0.5, PairingMode::Hard, true),
        (0.0, PairingMode::RandomAll, true),
        (0.0, PairingMode::Hard, true),
    ] {
        let cfg = LossConfig {
            gamma,
            margin: 1.0,
            pairing_mode: mode,
        };
        let mut fx = fixture(41, 4, 6);
        let w = check_gradients(&mut fx, &cfg, with_pairs, 100);
        worst = worst.max(w);
    }
    assert!(worst <= 1e-3, "worst relative error {worst}");
}

#[test]
fn gradients_match_at_nine_classes_and_wider_dim() {
    let cfg = LossConfig {
        gamma: 0.5,
        margin: 1.0,
        pairing_mode: PairingMode::Hard,
    };
    let mut fx = fixture(97, 9, 16);
    check_gradients(&mut fx, &cfg, true, 100);
}

#[test]
fn pairs_beyond_margin_contribute_exactly_zero_gradient() {
    // with a margin below any representation distance, the gamma = 0
    // objective is identically zero and so is its gradient
    let fx = fixture(7, 4, 6);
    let anchor_refs: Vec<&TrainingItem> = fx.anchors.iter().collect();
    let partner_refs: Vec<&TrainingItem> = fx.partners.iter().collect();

    let distances: Vec<f64> = {
        let a_seqs: Vec<Vec<u32>> = fx.anchors.iter().map(|a| a.ids.clone()).collect();
        let p_seqs: Vec<Vec<u32>> = fx.partners.iter().map(|p| p.ids.clone()).collect();
        let a = fx.encoder.encode_batch(&a_seqs).unwrap();
        let p = fx.encoder.encode_batch(&p_seqs).unwrap();
        a.iter()
            .zip(&p)
            .map(|(x, y)| {
                x.representation
                    .iter()
                    .zip(&y.representation)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    };
    let margin = distances.iter().fold(f64::INFINITY, |m, &d| m.min(d)) / 2.0;
    assert!(margin > 0.0);

    let cfg = LossConfig {
        gamma: 0.0,
        margin,
        pairing_mode: PairingMode::Hard,
    };
    let result = fx
        .encoder
        .gradients(&anchor_refs, Some(&partner_refs), &cfg)
        .unwrap();
    assert_eq!(result.terms.total, 0.0);
    let grads = result.grads;
    for idx in 0..grads.len() {
        assert_eq!(grads.get_flat(idx), 0.0, "coordinate {idx}");
    }
}

#[test]
fn gamma_one_gradients_equal_ce_only_gradients() {
    let fx = fixture(13, 4, 6);
    let anchor_refs: Vec<&TrainingItem> = fx.anchors.iter().collect();
    let partner_refs: Vec<&TrainingItem> = fx.partners.iter().collect();

    let ce_only = LossConfig {
        gamma: 1.0,
        margin: 1.0,
        pairing_mode: PairingMode::None,
    };
    let mixed_gamma_one = LossConfig {
        gamma: 1.0,
        margin: 1.0,
        pairing_mode: PairingMode::Hard,
    };
    let a = fx.encoder.gradients(&anchor_refs, None, &ce_only).unwrap();
    let b = fx
        .encoder
        .gradients(&anchor_refs, Some(&partner_refs), &mixed_gamma_one)
        .unwrap();
    assert_eq!(a.grads, b.grads);
    assert_eq!(a.terms.total, b.terms.total);
}

/// Scales a gradient structure by a constant, via the public flat accessors.
fn scaled(grads: &Params, factor: f64) -> Vec<f64> {
    (0..grads.len())
        .map(|i| factor * grads.get_flat(i))
        .collect()
}

#[test]
fn far_pairs_reduce_update_to_gamma_scaled_ce() {
    let fx = fixture(29, 4, 6);
    let anchor_refs: Vec<&TrainingItem> = fx.anchors.iter().collect();
    let partner_refs: Vec<&TrainingItem> = fx.partners.iter().collect();

    let gamma = 0.5;
    let dead_margin = 1e-9; // far below any representation distance
    let mixed = LossConfig {
        gamma,
        margin: dead_margin,
        pairing_mode: PairingMode::RandomAll,
    };
    let ce_only = LossConfig {
        gamma: 1.0,
        margin: 1.0,
        pairing_mode: PairingMode::None,
    };
    let mixed_grads = fx
        .encoder
        .gradients(&anchor_refs, Some(&partner_refs), &mixed)
        .unwrap();
    assert_eq!(mixed_grads.terms.contrastive_term, 0.0);
    let ce_grads = fx.encoder.gradients(&anchor_refs, None, &ce_only).unwrap();

    let a = scaled(&mixed_grads.grads, 1.0);
    let b = scaled(&ce_grads.grads, gamma);
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        assert!(
            (x - y).abs() <= 1e-12 * y.abs().max(1.0),
            "coordinate {i}: {x} vs {y}"
        );
    }
}
