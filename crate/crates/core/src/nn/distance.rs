//! The minimum-distance regressor: an SDF encoder feeding a regression head
//! that predicts the robot's clearance from a latent vector. Its exact input
//! gradient with respect to the latent coordinates drives the latent
//! obstacle-avoidance moves.

use super::paired::{paired_predict, train_paired, PairedLoss, PairedSample};
use super::validity::{ENCODER_HIDDEN, ENV_FEATURE_DIM, HEAD_HIDDEN};
use super::{Activation, InputNorm, Mlp, TrainConfig};
use crate::envfield::SignedDistanceField;
use crate::Result;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceModel {
    /// Flattened, scaled SDF -> environment feature.
    pub sdf_encoder: Mlp,
    /// `(z_S, c_n, z) -> predicted clearance in meters`.
    pub head: Mlp,
    pub c_norm: InputNorm,
    pub latent_dim: usize,
    /// SDF values are divided by this before entering the encoder
    /// (the workspace diagonal).
    pub sdf_scale: f64,
}

impl DistanceModel {
    pub fn sdf_input(sdf: &SignedDistanceField, scale: f64) -> Vec<f64> {
        sdf.values.iter().map(|v| v / scale).collect()
    }

    /// Environment feature, computed once per environment.
    pub fn encode_env(&self, sdf: &SignedDistanceField) -> Result<Vec<f64>> {
        self.sdf_encoder
            .apply(&Self::sdf_input(sdf, self.sdf_scale))
    }

    fn head_input(&self, env_feature: &[f64], c: &[f64], z: &[f64]) -> Vec<f64> {
        let mut x = env_feature.to_vec();
        x.extend(self.c_norm.normalize(c));
        x.extend_from_slice(z);
        x
    }

    /// Predicted minimum robot-obstacle distance in meters (unclamped).
    pub fn predict(&self, env_feature: &[f64], c: &[f64], z: &[f64]) -> f64 {
        let mut tail = self.c_norm.normalize(c);
        tail.extend_from_slice(z);
        paired_predict(env_feature, &tail, &self.head)
    }

    /// Exact gradient of the predicted distance with respect to `z`; the
    /// environment feature and condition entries are held fixed.
    pub fn grad_z(&self, env_feature: &[f64], c: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let x = self.head_input(env_feature, c, z);
        let full = self.head.input_gradient(&x)?;
        Ok(full[full.len() - self.latent_dim..].to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct DistanceTrainReport {
    pub epoch_losses: Vec<f64>,
    /// Root-mean-square prediction error on the held-out tenth, meters.
    pub holdout_rmse: f64,
    /// Fraction of held-out samples whose predicted sign matches the label.
    pub holdout_sign_agreement: f64,
}

/// One labeled distance sample.
#[derive(Debug, Clone)]
pub struct DistanceSampleRef<'a> {
    pub env_idx: usize,
    pub c: &'a [f64],
    pub z: &'a [f64],
    pub d_min: f64,
}

/// Trains the SDF encoder and the regression head together with MSE loss.
pub fn train_distance(
    sdfs: &[&SignedDistanceField],
    samples: &[DistanceSampleRef<'_>],
    c_norm: InputNorm,
    latent_dim: usize,
    sdf_scale: f64,
    cfg: &TrainConfig,
) -> Result<(DistanceModel, DistanceTrainReport)> {
    let env_inputs: Vec<Vec<f64>> = sdfs
        .iter()
        .map(|s| DistanceModel::sdf_input(s, sdf_scale))
        .collect();
    let sdf_len = env_inputs.first().map_or(0, Vec::len);
    let paired: Vec<PairedSample> = samples
        .iter()
        .map(|s| {
            let mut tail = c_norm.normalize(s.c);
            tail.extend_from_slice(s.z);
            PairedSample {
                env_idx: s.env_idx,
                tail,
                target: s.d_min,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let encoder = Mlp::init(
        &[sdf_len, ENCODER_HIDDEN, ENCODER_HIDDEN, ENV_FEATURE_DIM],
        &[
            Activation::LeakyRelu,
            Activation::LeakyRelu,
            Activation::Identity,
        ],
        &mut rng,
    );
    let head = Mlp::init(
        &[
            ENV_FEATURE_DIM + c_norm.dim() + latent_dim,
            HEAD_HIDDEN,
            HEAD_HIDDEN,
            HEAD_HIDDEN,
            1,
        ],
        &[
            Activation::Relu,
            Activation::Relu,
            Activation::Relu,
            Activation::Identity,
        ],
        &mut rng,
    );

    let out = train_paired(
        &env_inputs,
        &paired,
        encoder,
        head,
        PairedLoss::MeanSquaredError,
        cfg,
    )?;

    let model = DistanceModel {
        sdf_encoder: out.encoder,
        head: out.head,
        c_norm,
        latent_dim,
        sdf_scale,
    };

    let mut sq_err = 0.0;
    let mut signs = 0usize;
    for &i in &out.holdout_indices {
        let s = &samples[i];
        let feat = model.sdf_encoder.apply(&env_inputs[s.env_idx])?;
        let pred = model.predict(&feat, s.c, s.z);
        sq_err += (pred - s.d_min) * (pred - s.d_min);
        if (pred > 0.0) == (s.d_min > 0.0) {
            signs += 1;
        }
    }
    let n_val = out.holdout_indices.len().max(1) as f64;
    Ok((
        model,
        DistanceTrainReport {
            epoch_losses: out.epoch_losses,
            holdout_rmse: (sq_err / n_val).sqrt(),
            holdout_sign_agreement: signs as f64 / n_val,
        },
    ))
}
