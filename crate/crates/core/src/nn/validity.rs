//! The latent validity classifier: a voxel-grid encoder feeding a sigmoid
//! head that predicts whether a latent vector decodes and projects to a
//! collision-free manifold configuration.

use super::paired::{paired_predict, train_paired, PairedLoss, PairedSample};
use super::{Activation, InputNorm, Mlp, TrainConfig};
use crate::envfield::OccupancyGrid;
use crate::Result;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Dimension of the environment feature produced by the grid encoder.
pub const ENV_FEATURE_DIM: usize = 16;
/// Hidden width of the grid encoder.
pub const ENCODER_HIDDEN: usize = 512;
/// Hidden width of the classification head.
pub const HEAD_HIDDEN: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityModel {
    /// Flattened occupancy grid -> environment feature.
    pub voxel_encoder: Mlp,
    /// `(z_V, c_n, z) -> probability`.
    pub head: Mlp,
    pub c_norm: InputNorm,
    pub latent_dim: usize,
}

impl ValidityModel {
    pub fn grid_input(grid: &OccupancyGrid) -> Vec<f64> {
        grid.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect()
    }

    /// Environment feature, computed once per environment and reused for
    /// every query against it.
    pub fn encode_env(&self, grid: &OccupancyGrid) -> Result<Vec<f64>> {
        self.voxel_encoder.apply(&Self::grid_input(grid))
    }

    /// Probability that `z` is valid in the encoded environment.
    pub fn predict(&self, env_feature: &[f64], c: &[f64], z: &[f64]) -> f64 {
        let mut tail = self.c_norm.normalize(c);
        tail.extend_from_slice(z);
        paired_predict(env_feature, &tail, &self.head)
    }
}

/// Probability from a model and a pre-encoded environment feature.
pub fn predict_validity(model: &ValidityModel, env_feature: &[f64], c: &[f64], z: &[f64]) -> f64 {
    model.predict(env_feature, c, z)
}

#[derive(Debug, Clone)]
pub struct ValidityTrainReport {
    pub epoch_losses: Vec<f64>,
    /// Fraction of held-out samples classified correctly at threshold 0.5.
    pub holdout_accuracy: f64,
    /// Fraction of positive labels across the whole dataset.
    pub positive_fraction: f64,
}

/// One labeled validity sample.
#[derive(Debug, Clone)]
pub struct ValiditySampleRef<'a> {
    pub env_idx: usize,
    pub c: &'a [f64],
    pub z: &'a [f64],
    pub valid: bool,
}

/// Trains the grid encoder and the classification head together with binary
/// cross-entropy.
pub fn train_validity(
    grids: &[&OccupancyGrid],
    samples: &[ValiditySampleRef<'_>],
    c_norm: InputNorm,
    latent_dim: usize,
    cfg: &TrainConfig,
) -> Result<(ValidityModel, ValidityTrainReport)> {
    let env_inputs: Vec<Vec<f64>> = grids.iter().map(|g| ValidityModel::grid_input(g)).collect();
    let grid_len = env_inputs.first().map_or(0, Vec::len);
    let paired: Vec<PairedSample> = samples
        .iter()
        .map(|s| {
            let mut tail = c_norm.normalize(s.c);
            tail.extend_from_slice(s.z);
            PairedSample {
                env_idx: s.env_idx,
                tail,
                target: if s.valid { 1.0 } else { 0.0 },
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let encoder = Mlp::init(
        &[grid_len, ENCODER_HIDDEN, ENCODER_HIDDEN, ENV_FEATURE_DIM],
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
            Activation::Sigmoid,
        ],
        &mut rng,
    );

    let out = train_paired(
        &env_inputs,
        &paired,
        encoder,
        head,
        PairedLoss::BinaryCrossEntropy,
        cfg,
    )?;

    let model = ValidityModel {
        voxel_encoder: out.encoder,
        head: out.head,
        c_norm,
        latent_dim,
    };

    // Held-out accuracy at the 0.5 threshold.
    let mut correct = 0usize;
    for &i in &out.holdout_indices {
        let s = &samples[i];
        let feat = model.voxel_encoder.apply(&env_inputs[s.env_idx])?;
        let p = model.predict(&feat, s.c, s.z);
        if (p >= 0.5) == s.valid {
            correct += 1;
        }
    }
    let holdout_accuracy = if out.holdout_indices.is_empty() {
        f64::NAN
    } else {
        correct as f64 / out.holdout_indices.len() as f64
    };
    let positive_fraction =
        samples.iter().filter(|s| s.valid).count() as f64 / samples.len().max(1) as f64;
    Ok((
        model,
        ValidityTrainReport {
            epoch_losses: out.epoch_losses,
            holdout_accuracy,
            positive_fraction,
        },
    ))
}
