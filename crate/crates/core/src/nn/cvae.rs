//! The conditional variational autoencoder that charts the constraint
//! manifold: an encoder mapping `(q, c)` to a latent posterior and a decoder
//! mapping `(z, c)` back to a configuration estimate.

use super::{
    shuffled_indices, Activation, Adam, Batch, InputNorm, Mlp, MlpGrads, TrainConfig,
};
use crate::error::Error;
use crate::robot::Configuration;
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Width of the encoder/decoder hidden layers.
pub const CVAE_HIDDEN: usize = 512;

/// Encoder, decoder and the input standardization they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    /// `(q_n, c_n) -> (mu, log sigma^2)`, output width `2 * latent_dim`.
    pub encoder: Mlp,
    /// `(z, c_n) -> q_n`.
    pub decoder: Mlp,
    pub latent_dim: usize,
    pub q_norm: InputNorm,
    pub c_norm: InputNorm,
}

impl CvaeModel {
    pub fn from_parts(
        encoder: Mlp,
        decoder: Mlp,
        latent_dim: usize,
        q_norm: InputNorm,
        c_norm: InputNorm,
    ) -> Result<Self> {
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::argument("encoder output must be 2 x latent_dim"));
        }
        if decoder.input_dim() != latent_dim + c_norm.dim()
            || decoder.output_dim() != q_norm.dim()
            || encoder.input_dim() != q_norm.dim() + c_norm.dim()
        {
            return Err(Error::argument("autoencoder dimensions are inconsistent"));
        }
        Ok(CvaeModel {
            encoder,
            decoder,
            latent_dim,
            q_norm,
            c_norm,
        })
    }

    fn encoder_input(&self, q: &Configuration, c: &[f64]) -> Vec<f64> {
        let mut x = self.q_norm.normalize(q.as_slice());
        x.extend(self.c_norm.normalize(c));
        x
    }

    /// Deterministic encoding: the posterior mean.
    pub fn encode(&self, q: &Configuration, c: &[f64]) -> Vec<f64> {
        let out = self
            .encoder
            .apply(&self.encoder_input(q, c))
            .expect("encoder dimensions checked at construction");
        out[..self.latent_dim].to_vec()
    }

    /// Decodes a latent vector to an (unprojected) configuration estimate,
    /// clamped to the joint limits.
    pub fn decode(&self, z: &[f64], c: &[f64]) -> Configuration {
        let mut x = z.to_vec();
        x.extend(self.c_norm.normalize(c));
        let out = self
            .decoder
            .apply(&x)
            .expect("decoder dimensions checked at construction");
        let mut q = Configuration::new(self.q_norm.denormalize(&out));
        q.clamp_to_limits();
        q
    }
}

/// Loss trace returned alongside a trained model.
#[derive(Debug, Clone)]
pub struct CvaeTrainReport {
    /// Mean training loss (reconstruction + weighted KL) per epoch.
    pub epoch_losses: Vec<f64>,
    pub final_train_loss: f64,
    /// Reconstruction MSE on the held-out split, in normalized units.
    pub validation_recon_mse: f64,
}

/// Trains encoder and decoder jointly on on-manifold `(q, c)` pairs with the
/// reparameterization trick: loss is reconstruction MSE plus a KL term whose
/// weight ramps up over the warm-up epochs. The last tenth of the data (after
/// a seeded shuffle) is held out for validation.
pub fn train_cvae(
    qs: &[Configuration],
    cs: &[Vec<f64>],
    latent_dim: usize,
    q_norm: InputNorm,
    c_norm: InputNorm,
    cfg: &TrainConfig,
) -> Result<(CvaeModel, CvaeTrainReport)> {
    cfg.validate()?;
    if qs.is_empty() || qs.len() != cs.len() {
        return Err(Error::Dataset("need matching non-empty (q, c) data".into()));
    }
    let n = q_norm.dim();
    let c_dim = c_norm.dim();
    if latent_dim == 0 || latent_dim >= n {
        return Err(Error::argument("latent_dim must be in (0, n)"));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let enc_acts = [
        Activation::LeakyRelu,
        Activation::LeakyRelu,
        Activation::Identity,
    ];
    let encoder = Mlp::init(
        &[n + c_dim, CVAE_HIDDEN, CVAE_HIDDEN, 2 * latent_dim],
        &enc_acts,
        &mut init_rng,
    );
    let decoder = Mlp::init(
        &[latent_dim + c_dim, CVAE_HIDDEN, CVAE_HIDDEN, n],
        &enc_acts,
        &mut init_rng,
    );
    let mut model = CvaeModel::from_parts(encoder, decoder, latent_dim, q_norm, c_norm)?;

    // Normalized inputs, computed once.
    let enc_rows: Vec<Vec<f64>> = qs
        .iter()
        .zip(cs)
        .map(|(q, c)| model.encoder_input(q, c))
        .collect();

    // Seeded 90/10 split.
    let mut split_rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, 0x5b17));
    let order = shuffled_indices(enc_rows.len(), &mut split_rng);
    let n_val = (enc_rows.len() / 10).min(enc_rows.len() - 1);
    let (train_idx, val_idx) = order.split_at(order.len() - n_val);

    let tensor_sizes: Vec<usize> = model
        .encoder
        .layers
        .iter()
        .chain(&model.decoder.layers)
        .flat_map(|l| [l.w.len(), l.b.len()])
        .collect();
    let mut adam = Adam::new(cfg, &tensor_sizes);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let kl_w = if cfg.kl_warmup_epochs == 0 {
            cfg.kl_weight
        } else {
            cfg.kl_weight * ((epoch + 1) as f64 / cfg.kl_warmup_epochs as f64).min(1.0)
        };
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, epoch as u64 + 1));
        let order = shuffled_indices(train_idx.len(), &mut epoch_rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let m = chunk.len();
            let enc_in = Batch::from_rows(
                chunk
                    .iter()
                    .map(|&k| enc_rows[train_idx[k]].clone())
                    .collect(),
            );
            let enc_cache = model.encoder.forward_batch(enc_in);

            // Reparameterized latents.
            let mut z = Batch::zeros(m, latent_dim);
            let mut eps = Batch::zeros(m, latent_dim);
            let mut std = Batch::zeros(m, latent_dim);
            for s in 0..m {
                let out = enc_cache.output().row(s);
                for j in 0..latent_dim {
                    let e: f64 = StandardNormal.sample(&mut epoch_rng);
                    let sd = (0.5 * out[latent_dim + j]).exp();
                    eps.row_mut(s)[j] = e;
                    std.row_mut(s)[j] = sd;
                    z.row_mut(s)[j] = out[j] + e * sd;
                }
            }

            let dec_in = Batch::from_rows(
                (0..m)
                    .map(|s| {
                        let mut row = z.row(s).to_vec();
                        row.extend_from_slice(&enc_cache.acts[0].row(s)[n..]);
                        row
                    })
                    .collect(),
            );
            let dec_cache = model.decoder.forward_batch(dec_in);

            // Loss: mean over the batch of (sum-of-squares reconstruction
            // error + kl_w * KL to the standard normal).
            let inv_m = 1.0 / m as f64;
            let mut d_dec_out = Batch::zeros(m, n);
            let mut batch_loss = 0.0;
            for s in 0..m {
                let target = &enc_cache.acts[0].row(s)[..n];
                let recon = dec_cache.output().row(s);
                for j in 0..n {
                    let diff = recon[j] - target[j];
                    batch_loss += diff * diff * inv_m;
                    d_dec_out.row_mut(s)[j] = 2.0 * diff * inv_m;
                }
                let enc_out = enc_cache.output().row(s);
                for j in 0..latent_dim {
                    let mu = enc_out[j];
                    let lv = enc_out[latent_dim + j];
                    batch_loss += kl_w * inv_m * (-0.5) * (1.0 + lv - mu * mu - lv.exp());
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            loss_sum += batch_loss * m as f64;
            loss_count += m;

            let mut dec_grads = MlpGrads::zeros_like(&model.decoder);
            let d_dec_in = model
                .decoder
                .backward_batch(&dec_cache, d_dec_out, &mut dec_grads, true)
                .expect("decoder input gradient requested");

            // Gradient w.r.t. the encoder outputs: the decoder pull on z plus
            // the KL pull on (mu, log-variance).
            let mut d_enc_out = Batch::zeros(m, 2 * latent_dim);
            for s in 0..m {
                let enc_out = enc_cache.output().row(s);
                let dz = &d_dec_in.row(s)[..latent_dim];
                for j in 0..latent_dim {
                    let mu = enc_out[j];
                    let lv = enc_out[latent_dim + j];
                    d_enc_out.row_mut(s)[j] = dz[j] + kl_w * inv_m * mu;
                    d_enc_out.row_mut(s)[latent_dim + j] = dz[j]
                        * eps.row(s)[j]
                        * 0.5
                        * std.row(s)[j]
                        + kl_w * inv_m * 0.5 * (lv.exp() - 1.0);
                }
            }
            let mut enc_grads = MlpGrads::zeros_like(&model.encoder);
            model
                .encoder
                .backward_batch(&enc_cache, d_enc_out, &mut enc_grads, false);

            let mut pairs: Vec<(&mut [f64], &[f64])> = Vec::new();
            for (layer, (dw, db)) in model.encoder.layers.iter_mut().zip(&enc_grads.layers) {
                pairs.push((&mut layer.w, dw));
                pairs.push((&mut layer.b, db));
            }
            for (layer, (dw, db)) in model.decoder.layers.iter_mut().zip(&dec_grads.layers) {
                pairs.push((&mut layer.w, dw));
                pairs.push((&mut layer.b, db));
            }
            adam.step(&mut pairs);
        }
        epoch_losses.push(loss_sum / loss_count.max(1) as f64);
    }

    model.encoder.assert_finite()?;
    model.decoder.assert_finite()?;

    // Validation: deterministic reconstruction through the posterior mean.
    let mut val_err = 0.0;
    let mut val_n = 0usize;
    for &k in val_idx {
        let row = &enc_rows[k];
        let enc_out = model.encoder.apply(row)?;
        let mut dec_in = enc_out[..latent_dim].to_vec();
        dec_in.extend_from_slice(&row[n..]);
        let recon = model.decoder.apply(&dec_in)?;
        for j in 0..n {
            let d = recon[j] - row[j];
            val_err += d * d;
        }
        val_n += 1;
    }
    let report = CvaeTrainReport {
        final_train_loss: *epoch_losses.last().unwrap_or(&f64::NAN),
        validation_recon_mse: if val_n > 0 {
            val_err / (val_n * n) as f64
        } else {
            f64::NAN
        },
        epoch_losses,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::JOINT_LIMIT;
    use rand::Rng;

    fn toy_norms(n: usize) -> (InputNorm, InputNorm) {
        (
            InputNorm::from_ranges(&vec![(-JOINT_LIMIT, JOINT_LIMIT); n]),
            InputNorm::from_ranges(&[(0.0, 1.0)]),
        )
    }

    fn toy_data(count: usize, seed: u64) -> (Vec<Configuration>, Vec<Vec<f64>>) {
        // A 1-parameter curve embedded in 3 joints, conditioned on c.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut qs = Vec::new();
        let mut cs = Vec::new();
        for _ in 0..count {
            let t: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(0.0..1.0);
            qs.push(Configuration::new(vec![
                t,
                (t + c).sin(),
                0.5 * t * t - c,
            ]));
            cs.push(vec![c]);
        }
        (qs, cs)
    }

    fn quick_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 60,
            batch_size: 8,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn toy_training_reduces_loss() {
        let (qs, cs) = toy_data(10, 1);
        let (qn, cn) = toy_norms(3);
        let (_, report) = train_cvae(&qs, &cs, 1, qn, cn, &quick_cfg(2)).unwrap();
        assert!(report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (qs, cs) = toy_data(32, 3);
        let (qn, cn) = toy_norms(3);
        let cfg = TrainConfig {
            epochs: 5,
            ..quick_cfg(7)
        };
        let (a, _) = train_cvae(&qs, &cs, 1, qn.clone(), cn.clone(), &cfg).unwrap();
        let (b, _) = train_cvae(&qs, &cs, 1, qn, cn, &cfg).unwrap();
        assert_eq!(a.encoder, b.encoder);
        assert_eq!(a.decoder, b.decoder);
    }

    #[test]
    fn encode_is_deterministic_and_shaped() {
        let (qs, cs) = toy_data(64, 4);
        let (qn, cn) = toy_norms(3);
        let cfg = TrainConfig {
            epochs: 3,
            ..quick_cfg(8)
        };
        let (model, _) = train_cvae(&qs, &cs, 2, qn, cn, &cfg).unwrap();
        let z1 = model.encode(&qs[0], &cs[0]);
        let z2 = model.encode(&qs[0], &cs[0]);
        assert_eq!(z1, z2);
        assert_eq!(z1.len(), 2);
        assert!(z1.iter().all(|v| v.is_finite()));
        let q = model.decode(&z1, &cs[0]);
        assert_eq!(q.len(), 3);
        assert!(q.within_limits());
    }
}
