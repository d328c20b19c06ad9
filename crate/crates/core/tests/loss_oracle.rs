//! Scalar-by-scalar recomputation of the total loss on hand-built batches.
//!
//! The oracle below re-derives every term with plain loops and `f64`
//! arithmetic, independent of the loss module's implementation.

use dialogic_core::encoder::EncoderOutput;
use dialogic_core::loss::{total_loss, LossConfig, PairAssignment, PairPartner, PairingMode};

/// Independent recomputation: per-instance -ln(p[label]) summed, plus the
/// squared hinge per pair, mixed by gamma.
fn oracle_total(
    probs: &[Vec<f64>],
    reps: &[Vec<f64>],
    labels: &[usize],
    partner_reps: &[Vec<f64>],
    gamma: f64,
    margin: f64,
) -> f64 {
    let mut ce = 0.0;
    for (p, &label) in probs.iter().zip(labels) {
        ce += -(p[label].clamp(1e-12, 1.0)).ln();
    }
    let mut contrastive = 0.0;
    for (rep, partner) in reps.iter().zip(partner_reps) {
        let mut dist_sq = 0.0;
        for (a, b) in rep.iter().zip(partner) {
            dist_sq += (a - b) * (a - b);
        }
        let slack = margin - dist_sq.sqrt();
        if slack > 0.0 {
            contrastive += slack * slack;
        }
    }
    gamma * ce + (1.0 - gamma) * contrastive
}

#[test]
fn hand_built_batch_of_four_matches_oracle() {
    let probs = vec![
        vec![0.70, 0.10, 0.05, 0.05, 0.02, 0.02, 0.02, 0.02, 0.02],
        vec![0.05, 0.50, 0.10, 0.05, 0.10, 0.05, 0.05, 0.05, 0.05],
        vec![1.0 / 9.0; 9],
        vec![0.01, 0.01, 0.01, 0.90, 0.02, 0.01, 0.01, 0.01, 0.02],
    ];
    let reps = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.5, -0.25, 0.1],
        vec![-0.3, 0.8, 0.05],
        vec![1.0, 1.0, -1.0],
    ];
    let labels = vec![0usize, 1, 2, 3];
    let partner_reps = vec![
        vec![0.1, 0.0, 0.0],   // distance 0.1, inside the margin
        vec![0.5, -0.25, 0.1], // distance 0, maximum penalty
        vec![2.0, 0.8, 0.05],  // distance 2.3, dead zone
        vec![1.0, 0.2, -1.0],  // distance 0.8, inside the margin
    ];
    let partner_labels = [1usize, 2, 3, 4];

    let outputs: Vec<EncoderOutput> = reps
        .iter()
        .zip(&probs)
        .map(|(r, p)| EncoderOutput {
            representation: r.clone(),
            class_probs: p.clone(),
        })
        .collect();
    let pairs = PairAssignment {
        partners: partner_labels
            .iter()
            .zip(&partner_reps)
            .map(|(&label, rep)| PairPartner {
                uid: format!("partner-{label}"),
                label,
                representation: rep.clone(),
            })
            .collect(),
    };

    for gamma in [0.0, 0.3, 0.5, 1.0] {
        for margin in [0.5, 1.0, 2.0] {
            let cfg = LossConfig {
                gamma,
                margin,
                pairing_mode: PairingMode::Hard,
            };
            let terms = total_loss(&outputs, &labels, Some(&pairs), &cfg).unwrap();
            let expected = oracle_total(&probs, &reps, &labels, &partner_reps, gamma, margin);
            assert!(
                (terms.total - expected).abs() < 1e-9,
                "gamma {gamma} margin {margin}: {} vs oracle {expected}",
                terms.total
            );
            assert!(terms.total >= 0.0);
        }
    }
}

#[test]
fn analytic_anchor_cases_hold() {
    // uniform probabilities over nine classes cost exactly ln 9
    let uniform = EncoderOutput {
        representation: vec![0.0, 0.0],
        class_probs: vec![1.0 / 9.0; 9],
    };
    let cfg = LossConfig {
        gamma: 1.0,
        margin: 1.0,
        pairing_mode: PairingMode::None,
    };
    let terms = total_loss(std::slice::from_ref(&uniform), &[0], None, &cfg).unwrap();
    assert!((terms.total - (9.0f64).ln()).abs() < 1e-12);
    assert!((terms.total - 2.1972).abs() < 5e-5);

    // a coincident pair at margin 1 costs exactly 1
    let pairs = PairAssignment {
        partners: vec![PairPartner {
            uid: "p".into(),
            label: 1,
            representation: vec![0.0, 0.0],
        }],
    };
    let cfg = LossConfig {
        gamma: 0.0,
        margin: 1.0,
        pairing_mode: PairingMode::Hard,
    };
    let terms = total_loss(&[uniform], &[0], Some(&pairs), &cfg).unwrap();
    assert_eq!(terms.total, 1.0);
}
