//! Joint training of an environment encoder with a per-sample head.
//!
//! Both the validity classifier and the distance regressor consume a few
//! thousand samples that reference a much smaller set of environments. Epochs
//! are shuffled env-blocked (environment order shuffled, samples shuffled
//! within each environment, batches cut from the concatenation), so each
//! batch touches only a handful of distinct environments and the expensive
//! encoder pass runs once per distinct environment instead of once per
//! sample. The arithmetic is identical to the naive per-sample pass.

use super::{shuffled_indices, Adam, Batch, Mlp, MlpGrads, TrainConfig};
use crate::error::Error;
use crate::Result;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// One training sample: an environment reference plus the head input tail
/// (everything after the environment feature) and a scalar target.
#[derive(Debug, Clone)]
pub struct PairedSample {
    pub env_idx: usize,
    pub tail: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairedLoss {
    /// Head ends in a sigmoid; targets in {0, 1}.
    BinaryCrossEntropy,
    /// Head ends in identity; targets are real.
    MeanSquaredError,
}

pub struct PairedOutcome {
    pub encoder: Mlp,
    pub head: Mlp,
    pub epoch_losses: Vec<f64>,
    /// Sample indices of the 90% training split, in dataset order.
    pub train_indices: Vec<usize>,
    /// Held-out tenth for whatever metric the caller reports.
    pub holdout_indices: Vec<usize>,
}

pub fn train_paired(
    env_inputs: &[Vec<f64>],
    samples: &[PairedSample],
    mut encoder: Mlp,
    mut head: Mlp,
    loss: PairedLoss,
    cfg: &TrainConfig,
) -> Result<PairedOutcome> {
    cfg.validate()?;
    if samples.is_empty() || env_inputs.is_empty() {
        return Err(Error::Dataset("paired training needs data".into()));
    }
    let feature_dim = encoder.output_dim();
    for s in samples {
        if s.env_idx >= env_inputs.len() {
            return Err(Error::Dataset("sample references unknown environment".into()));
        }
        if s.tail.len() + feature_dim != head.input_dim() {
            return Err(Error::Dataset("sample tail does not fit the head".into()));
        }
    }

    // Seeded 90/10 split by sample.
    let mut split_rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, 0x9019));
    let order = shuffled_indices(samples.len(), &mut split_rng);
    let n_val = (samples.len() / 10).min(samples.len() - 1);
    let (train_part, val_part) = order.split_at(order.len() - n_val);
    let mut train_indices = train_part.to_vec();
    train_indices.sort_unstable();
    let mut holdout_indices = val_part.to_vec();
    holdout_indices.sort_unstable();

    // Group the training split by environment once.
    let mut per_env: Vec<Vec<usize>> = vec![Vec::new(); env_inputs.len()];
    for &i in &train_indices {
        per_env[samples[i].env_idx].push(i);
    }

    let tensor_sizes: Vec<usize> = encoder
        .layers
        .iter()
        .chain(&head.layers)
        .flat_map(|l| [l.w.len(), l.b.len()])
        .collect();
    let mut adam = Adam::new(cfg, &tensor_sizes);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, 0xe0 + epoch as u64));
        // Env-blocked epoch order.
        let env_order = shuffled_indices(env_inputs.len(), &mut rng);
        let mut epoch_order = Vec::with_capacity(train_indices.len());
        for &e in &env_order {
            let within = shuffled_indices(per_env[e].len(), &mut rng);
            epoch_order.extend(within.iter().map(|&k| per_env[e][k]));
        }

        let mut loss_sum = 0.0;
        for chunk in epoch_order.chunks(cfg.batch_size) {
            let m = chunk.len();
            // Distinct environments in batch order of first appearance.
            let mut distinct: Vec<usize> = Vec::new();
            let mut feat_slot = vec![0usize; m];
            for (row, &si) in chunk.iter().enumerate() {
                let e = samples[si].env_idx;
                let slot = match distinct.iter().position(|&d| d == e) {
                    Some(p) => p,
                    None => {
                        distinct.push(e);
                        distinct.len() - 1
                    }
                };
                feat_slot[row] = slot;
            }
            let enc_caches: Vec<_> = distinct
                .iter()
                .map(|&e| encoder.forward_batch(Batch::from_rows(vec![env_inputs[e].clone()])))
                .collect();

            let head_in = Batch::from_rows(
                chunk
                    .iter()
                    .enumerate()
                    .map(|(row, &si)| {
                        let mut x = enc_caches[feat_slot[row]].output().row(0).to_vec();
                        x.extend_from_slice(&samples[si].tail);
                        x
                    })
                    .collect(),
            );
            let head_cache = head.forward_batch(head_in);

            // Gradient with respect to the head's final pre-activation.
            let inv_m = 1.0 / m as f64;
            let mut d_pre = Batch::zeros(m, 1);
            let mut batch_loss = 0.0;
            for (row, &si) in chunk.iter().enumerate() {
                let y = samples[si].target;
                let out = head_cache.output().row(row)[0];
                match loss {
                    PairedLoss::BinaryCrossEntropy => {
                        let p = out.clamp(1e-12, 1.0 - 1e-12);
                        batch_loss -= (y * p.ln() + (1.0 - y) * (1.0 - p).ln()) * inv_m;
                        d_pre.row_mut(row)[0] = (out - y) * inv_m;
                    }
                    PairedLoss::MeanSquaredError => {
                        let diff = out - y;
                        batch_loss += diff * diff * inv_m;
                        d_pre.row_mut(row)[0] = 2.0 * diff * inv_m;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            loss_sum += batch_loss * m as f64;

            let mut head_grads = MlpGrads::zeros_like(&head);
            let d_head_in = head
                .backward_batch(&head_cache, d_pre, &mut head_grads, true)
                .expect("head input gradient requested");

            // Sum the feature gradients per distinct environment, then push
            // each through the encoder once.
            let mut d_feat = vec![vec![0.0; feature_dim]; distinct.len()];
            for row in 0..m {
                let slot = feat_slot[row];
                for j in 0..feature_dim {
                    d_feat[slot][j] += d_head_in.row(row)[j];
                }
            }
            let mut enc_grads = MlpGrads::zeros_like(&encoder);
            for (slot, cache) in enc_caches.iter().enumerate() {
                // The encoder ends in identity, so the output gradient is the
                // final pre-activation gradient.
                encoder.backward_batch(
                    cache,
                    Batch {
                        rows: 1,
                        cols: feature_dim,
                        data: d_feat[slot].clone(),
                    },
                    &mut enc_grads,
                    false,
                );
            }

            let mut pairs: Vec<(&mut [f64], &[f64])> = Vec::new();
            for (layer, (dw, db)) in encoder.layers.iter_mut().zip(&enc_grads.layers) {
                pairs.push((&mut layer.w, dw));
                pairs.push((&mut layer.b, db));
            }
            for (layer, (dw, db)) in head.layers.iter_mut().zip(&head_grads.layers) {
                pairs.push((&mut layer.w, dw));
                pairs.push((&mut layer.b, db));
            }
            adam.step(&mut pairs);
        }
        epoch_losses.push(loss_sum / train_indices.len().max(1) as f64);
    }

    encoder.assert_finite()?;
    head.assert_finite()?;
    Ok(PairedOutcome {
        encoder,
        head,
        epoch_losses,
        train_indices,
        holdout_indices,
    })
}

/// Convenience used by both wrappers: head output for one sample.
pub fn paired_predict(encoder_out: &[f64], tail: &[f64], head: &Mlp) -> f64 {
    let mut x = encoder_out.to_vec();
    x.extend_from_slice(tail);
    head.apply(&x).expect("head dimensions checked by trainer")[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn env_blocked_epochs_see_every_training_sample() {
        // Two envs, 7 samples; run one epoch worth of ordering logic by
        // training for one epoch and checking the loss is finite.
        let env_inputs = vec![vec![0.0; 4], vec![1.0; 4]];
        let samples: Vec<PairedSample> = (0..7)
            .map(|i| PairedSample {
                env_idx: i % 2,
                tail: vec![i as f64 / 7.0],
                target: (i % 2) as f64,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let encoder = Mlp::init(
            &[4, 8, 3],
            &[Activation::LeakyRelu, Activation::Identity],
            &mut rng,
        );
        let head = Mlp::init(
            &[4, 8, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        );
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let out = train_paired(
            &env_inputs,
            &samples,
            encoder,
            head,
            PairedLoss::BinaryCrossEntropy,
            &cfg,
        )
        .unwrap();
        assert_eq!(out.train_indices.len() + out.holdout_indices.len(), 7);
        assert!(out.epoch_losses.iter().all(|l| l.is_finite()));
    }

    /// The env-amortized pass must equal a naive per-sample computation; a
    /// loss-on-toy-problem equivalence would hide sign errors, so check the
    /// gradient path by overfitting a deterministic mapping.
    #[test]
    fn paired_training_fits_an_env_dependent_constant() {
        let env_inputs = vec![vec![0.0; 6], vec![1.0; 6]];
        let samples: Vec<PairedSample> = (0..40)
            .map(|i| PairedSample {
                env_idx: i % 2,
                tail: vec![0.0],
                target: if i % 2 == 0 { -0.5 } else { 0.75 },
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let encoder = Mlp::init(
            &[6, 16, 4],
            &[Activation::LeakyRelu, Activation::Identity],
            &mut rng,
        );
        let head = Mlp::init(
            &[5, 16, 1],
            &[Activation::Relu, Activation::Identity],
            &mut rng,
        );
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 8,
            learning_rate: 0.01,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train_paired(
            &env_inputs,
            &samples,
            encoder,
            head,
            PairedLoss::MeanSquaredError,
            &cfg,
        )
        .unwrap();
        for (e, target) in [(0usize, -0.5f64), (1, 0.75)] {
            let feat = out.encoder.apply(&env_inputs[e]).unwrap();
            let pred = paired_predict(&feat, &[0.0], &out.head);
            assert!((pred - target).abs() < 1e-2, "env {e}: {pred}");
        }
    }
}
