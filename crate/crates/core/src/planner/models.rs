//! The model surface the planner sees.
//!
//! Bundling the three trained networks behind one trait keeps the planner
//! testable with hand-built stubs (a validity gate that rejects everything, a
//! distance gradient pointing a known way) and lets a query pre-encode its
//! environment features once.

use crate::envfield::{OccupancyGrid, SignedDistanceField};
use crate::nn::{CvaeModel, DistanceModel, ValidityModel};
use crate::robot::Configuration;
use crate::Result;

/// Per-call work estimates for the deterministic clock.
#[derive(Debug, Clone, Copy)]
pub struct ModelCosts {
    pub encode_flops: f64,
    pub decode_flops: f64,
    pub validity_flops: f64,
    pub distance_grad_flops: f64,
}

/// What the latent planner needs from the learned models. Environment
/// conditioning is fixed at construction time.
pub trait LatentModels {
    fn latent_dim(&self) -> usize;
    fn encode(&self, q: &Configuration, c: &[f64]) -> Vec<f64>;
    fn decode(&self, z: &[f64], c: &[f64]) -> Configuration;
    /// Probability that `z` is valid in this query's environment.
    fn validity(&self, c: &[f64], z: &[f64]) -> f64;
    /// Gradient of the predicted clearance with respect to `z`.
    fn distance_grad(&self, c: &[f64], z: &[f64]) -> Vec<f64>;
    fn costs(&self) -> ModelCosts;
}

/// The trained networks bound to one query's environment.
pub struct TaskModels<'a> {
    pub cvae: &'a CvaeModel,
    pub validity: &'a ValidityModel,
    pub distance: &'a DistanceModel,
    voxel_feature: Vec<f64>,
    sdf_feature: Vec<f64>,
    costs: ModelCosts,
}

impl<'a> TaskModels<'a> {
    /// Encodes the environment once and fixes the feature vectors for the
    /// whole query.
    pub fn bind(
        cvae: &'a CvaeModel,
        validity: &'a ValidityModel,
        distance: &'a DistanceModel,
        grid: &OccupancyGrid,
        sdf: &SignedDistanceField,
    ) -> Result<Self> {
        let voxel_feature = validity.encode_env(grid)?;
        let sdf_feature = distance.encode_env(sdf)?;
        let mlp_dims = |mlp: &crate::nn::Mlp| -> Vec<usize> {
            let mut dims = vec![mlp.input_dim()];
            dims.extend(mlp.layers.iter().map(|l| l.out_dim));
            dims
        };
        let costs = ModelCosts {
            encode_flops: super::clock::cost_mlp_forward(&mlp_dims(&cvae.encoder)),
            decode_flops: super::clock::cost_mlp_forward(&mlp_dims(&cvae.decoder)),
            validity_flops: super::clock::cost_mlp_forward(&mlp_dims(&validity.head)),
            distance_grad_flops: 3.0 * super::clock::cost_mlp_forward(&mlp_dims(&distance.head)),
        };
        Ok(TaskModels {
            cvae,
            validity,
            distance,
            voxel_feature,
            sdf_feature,
            costs,
        })
    }
}

impl LatentModels for TaskModels<'_> {
    fn latent_dim(&self) -> usize {
        self.cvae.latent_dim
    }

    fn encode(&self, q: &Configuration, c: &[f64]) -> Vec<f64> {
        self.cvae.encode(q, c)
    }

    fn decode(&self, z: &[f64], c: &[f64]) -> Configuration {
        self.cvae.decode(z, c)
    }

    fn validity(&self, c: &[f64], z: &[f64]) -> f64 {
        self.validity.predict(&self.voxel_feature, c, z)
    }

    fn distance_grad(&self, c: &[f64], z: &[f64]) -> Vec<f64> {
        self.distance
            .grad_z(&self.sdf_feature, c, z)
            .expect("distance head is scalar")
    }

    fn costs(&self) -> ModelCosts {
        self.costs
    }
}

/// Stand-in for planners that never touch learned models (the
/// configuration-space baseline). Any call is a bug.
pub struct NoModels;

impl LatentModels for NoModels {
    fn latent_dim(&self) -> usize {
        0
    }
    fn encode(&self, _: &Configuration, _: &[f64]) -> Vec<f64> {
        unreachable!("baseline planner must not encode")
    }
    fn decode(&self, _: &[f64], _: &[f64]) -> Configuration {
        unreachable!("baseline planner must not decode")
    }
    fn validity(&self, _: &[f64], _: &[f64]) -> f64 {
        unreachable!("baseline planner must not query validity")
    }
    fn distance_grad(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        unreachable!("baseline planner must not query distance")
    }
    fn costs(&self) -> ModelCosts {
        ModelCosts {
            encode_flops: 0.0,
            decode_flops: 0.0,
            validity_flops: 0.0,
            distance_grad_flops: 0.0,
        }
    }
}
