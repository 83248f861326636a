//! Property tests for cross-module invariants on random instances.

use gmc::datasets::SyntheticKind;
use gmc::diagnostics::{plane_usage, responsibility_stats};
use gmc::features::{FeaturePipeline, PipelineConfig, RffMap};
use gmc::model::posterior;
use gmc::persist::{ModelFile, TrainingMetadata};
use gmc::training::{clip_global_norm, gradients_with_coefficients, total_loss, usage_coefficients, Batch};
use gmc::{GmcModel, Planes, TrainConfig};
use ndarray::Array2;
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random model on standardized 2-D inputs plus a batch of inputs.
fn random_model(counts: &[usize], params: &[f64], alpha: f64, x: &[f64]) -> (GmcModel, Array2<f64>) {
    let x = Array2::from_shape_vec((x.len() / 2, 2), x.to_vec()).unwrap();
    let pipeline = FeaturePipeline::fit(x.view(), &PipelineConfig::linear()).unwrap();
    let mut planes = Planes::zeros(2, counts).unwrap();
    for (p, v) in planes.params_mut().iter_mut().zip(params.iter().cycle()) {
        *p = *v;
    }
    let names = (0..counts.len()).map(|c| format!("c{c}")).collect();
    (GmcModel::new(pipeline, planes, alpha, names).unwrap(), x)
}

fn model_inputs() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, f64, Vec<f64>)> {
    (
        prop::collection::vec(1usize..=4, 2..=3),
        prop::collection::vec(-3.0f64..3.0, 8..40),
        0.5f64..8.0,
        prop::collection::vec(-4.0f64..4.0, 20..80),
    )
        .prop_map(|(c, p, a, mut x)| {
            x.truncate(x.len() / 2 * 2);
            (c, p, a, x)
        })
}

proptest! {
    #[test]
    fn posterior_normalized_and_shift_invariant(
        s in prop::collection::vec(-30.0f64..30.0, 1..6),
        shift in -100.0f64..100.0,
    ) {
        let p = posterior(&s).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let shifted: Vec<f64> = s.iter().map(|v| v + shift).collect();
        let q = posterior(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rff_feature_norm_is_two(
        d_in in 1usize..6,
        features in 1usize..200,
        gamma in 0.01f64..5.0,
        seed in 0u64..1000,
        x in prop::collection::vec(-10.0f64..10.0, 6),
    ) {
        let map = RffMap::sample(d_in, features, gamma, seed).unwrap();
        let phi = map.transform(&x[..d_in]).unwrap();
        prop_assert!((phi.iter().map(|v| v * v).sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn usage_penalty_never_below_lambda(
        usage in prop::collection::vec(0.0f64..1.0, 1..8),
        lambda in 1e-6f64..1.0,
        beta in 0.0f64..2.0,
    ) {
        let coeffs = usage_coefficients(&usage, lambda, beta, 1e-3);
        for &k in &coeffs {
            prop_assert!(k >= lambda);
            prop_assert_eq!(k == lambda, beta == 0.0);
        }
    }

    #[test]
    fn clipping_never_increases_norm(
        g in prop::collection::vec(-100.0f64..100.0, 1..30),
        max_norm in 0.01f64..50.0,
    ) {
        let before = norm(&g);
        let mut clipped = g.clone();
        clip_global_norm(&mut clipped, max_norm);
        let after = norm(&clipped);
        prop_assert!(after <= before * (1.0 + 1e-12));
        prop_assert!(after <= max_norm * (1.0 + 1e-12) || after == before);
    }

    #[test]
    fn gradients_match_five_point_differences(
        counts in prop::collection::vec(1usize..=3, 2..=3),
        dim in 1usize..=5,
        rows in 1usize..=8,
        seed_values in prop::collection::vec(-1.0f64..1.0, 64),
        alpha in prop::sample::select(vec![1.0, 3.0, 6.0]),
        beta in prop::sample::select(vec![0.0, 0.5]),
        eps in prop::sample::select(vec![0.0, 0.02]),
    ) {
        let classes = counts.len();
        let mut vals = seed_values.iter().cycle();
        let x = Array2::from_shape_fn((rows, dim), |_| 2.0 * vals.next().unwrap());
        let y: Vec<usize> = (0..rows).map(|i| i % classes).collect();
        let mut planes = Planes::zeros(dim, &counts).unwrap();
        for p in planes.params_mut() {
            *p = *vals.next().unwrap();
        }
        let usage: Vec<f64> = (0..planes.total_planes()).map(|_| vals.next().unwrap().abs()).collect();
        let cfg = TrainConfig { lambda: 1e-3, beta, label_smoothing: eps, ..TrainConfig::default() };
        let coeffs = usage_coefficients(&usage, cfg.lambda, cfg.beta, cfg.delta);
        let batch = Batch::all(x.view(), &y);
        let g = gradients_with_coefficients(&batch, &planes, alpha, &coeffs, &cfg).unwrap();
        let h = 1e-3;
        let loss_at = |j: usize, step: f64| {
            let mut p = planes.clone();
            p.params_mut()[j] += step;
            total_loss(&batch, &p, alpha, &coeffs, &cfg).unwrap()
        };
        for j in 0..planes.params().len() {
            let fd = (8.0 * (loss_at(j, h) - loss_at(j, -h)) - (loss_at(j, 2.0 * h) - loss_at(j, -2.0 * h))) / (12.0 * h);
            let an = g.grad.params()[j];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            prop_assert!(rel < 1e-4, "param {}: fd {} analytic {}", j, fd, an);
        }
    }

    #[test]
    fn responsibility_summaries_are_bounded((counts, params, alpha, x) in model_inputs()) {
        let (model, x) = random_model(&counts, &params, alpha, &x);
        let classes = counts.len();
        let y: Vec<usize> = (0..x.nrows()).map(|i| i % classes).collect();
        let stats = responsibility_stats(&model, x.view(), &y).unwrap();
        let m_max = *counts.iter().max().unwrap() as f64;
        prop_assert!(stats.maxresp >= 1.0 / m_max - 1e-12 && stats.maxresp <= 1.0 + 1e-12);
        prop_assert!(stats.resp_entropy >= -1e-12 && stats.resp_entropy <= m_max.ln() + 1e-12);
        let usage = plane_usage(&model, x.view(), &y).unwrap();
        for (c, row) in usage.fractions.iter().enumerate() {
            if usage.sample_counts[c] > 0 {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn model_file_round_trip_preserves_predictions((counts, params, alpha, x) in model_inputs(), t in 0.1f64..10.0) {
        let (model, x) = random_model(&counts, &params, alpha, &x);
        let file = ModelFile::new(&model, Some(t), None, TrainingMetadata::default());
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.temperature, Some(t));
        let restored = back.model().unwrap();
        let a = model.class_scores(x.view()).unwrap();
        let b = restored.class_scores(x.view()).unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn generators_are_pure_and_balanced(kind in prop::sample::select(SyntheticKind::ALL.to_vec()), n in 3usize..300, seed in 0u64..50) {
        let a = kind.generate(n, seed).unwrap();
        let b = kind.generate(n, seed).unwrap();
        prop_assert_eq!(a.features(), b.features());
        prop_assert_eq!(a.labels(), b.labels());
        let counts = a.class_counts();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}
