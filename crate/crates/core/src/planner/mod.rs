//! Planning on the learned latent manifold.
//!
//! [`plan_lcbirrt`] grows bidirectional trees in latent space, screens every
//! extension with the validity model, and certifies candidate connections
//! with [`check_path_valid`], which can repair colliding waypoints in place by
//! gradient ascent on the learned clearance ([`move_node_z`]) instead of
//! deleting and replanning. [`plan_cbirrt2`] is the projected
//! configuration-space baseline.
//!
//! Time is deterministic: see [`clock`].

pub mod cbirrt2;
pub mod check;
pub mod clock;
pub mod context;
pub mod extend;
pub mod lcbirrt;
pub mod models;
pub mod reachability;
pub mod tree;
pub mod validate;

pub use cbirrt2::plan_cbirrt2;
pub use check::{check_path_valid, get_last_valid, latent_jump, move_node_z};
pub use context::PlanContext;
pub use extend::{constrained_extend_q, constrained_extend_z, EdgePolicy, ExtendResult};
pub use lcbirrt::plan_lcbirrt;
pub use models::{LatentModels, ModelCosts, NoModels, TaskModels};
pub use tree::{NodeId, PlanNode, Tree};
pub use validate::{validate_path, PathViolation};

use crate::envfield::EnvironmentSpec;
use crate::error::Error;
use crate::robot::Configuration;
use crate::scenario::ScenarioDef;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Planner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Latent step size of the obstacle-avoidance move.
    pub gamma: f64,
    /// Move step budget of the obstacle-avoidance move.
    pub n_max: usize,
    /// Local path optimization cadence: repair on every n-th connection.
    /// `None` disables repair entirely (plain path checking).
    pub interval: Option<usize>,
    /// Probability of an additional configuration-space extension per
    /// iteration.
    pub p_q: f64,
    /// Latent extension step.
    pub step_z: f64,
    /// Configuration extension step, radians.
    pub step_q: f64,
    /// Edge checking resolution, radians.
    pub edge_resolution: f64,
    /// Classification threshold on the validity model.
    pub validity_threshold: f64,
    /// Budget in deterministic work seconds.
    pub time_limit: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            gamma: 0.8,
            n_max: 10,
            interval: None,
            p_q: 0.1,
            step_z: 0.4,
            step_q: 0.2,
            edge_resolution: 0.05,
            validity_threshold: 0.5,
            time_limit: 60.0,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0
            || self.n_max == 0
            || self.interval == Some(0)
            || !(0.0..=1.0).contains(&self.p_q)
            || self.step_z <= 0.0
            || self.step_q <= 0.0
            || self.edge_resolution <= 0.0
            || self.time_limit <= 0.0
        {
            return Err(Error::argument("planner config out of range"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_interval(mut self, interval: Option<usize>) -> Self {
        self.interval = interval;
        self
    }
}

/// One planning problem.
#[derive(Debug, Clone)]
pub struct PlanQuery<'a> {
    pub scenario: &'a ScenarioDef,
    pub c: Vec<f64>,
    pub q_init: &'a Configuration,
    pub q_goal: &'a Configuration,
    pub env: &'a EnvironmentSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Solved,
    Timeout,
}

/// Deterministic work timings, in reference seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total: f64,
    pub path_search: f64,
    pub path_check: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Times the two trees met (`n` in the validation cadence).
    pub connections: u64,
    /// False returns from path validation.
    pub replans: u64,
    pub move_attempts: u64,
    pub move_successes: u64,
    pub projections: u64,
    pub collision_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Vec<Configuration>,
    pub timings: Timings,
    pub counters: Counters,
}

impl PlanResult {
    pub fn solved(&self) -> bool {
        self.status == PlanStatus::Solved
    }

    /// Joint-space arc length of the path, radians.
    pub fn path_length(&self) -> f64 {
        self.path.windows(2).map(|p| p[0].dist(&p[1])).sum()
    }
}

#[cfg(test)]
pub(crate) mod test_stubs {
    use super::models::{LatentModels, ModelCosts};
    use crate::nn::CvaeModel;
    use crate::robot::Configuration;

    const TINY: ModelCosts = ModelCosts {
        encode_flops: 10.0,
        decode_flops: 10.0,
        validity_flops: 10.0,
        distance_grad_flops: 10.0,
    };

    /// A real autoencoder with a stubbed validity verdict and a fixed
    /// distance gradient.
    pub struct StubModels<'a> {
        pub cvae: &'a CvaeModel,
        pub accept: bool,
        pub grad: Vec<f64>,
    }

    impl LatentModels for StubModels<'_> {
        fn latent_dim(&self) -> usize {
            self.cvae.latent_dim
        }
        fn encode(&self, q: &Configuration, c: &[f64]) -> Vec<f64> {
            self.cvae.encode(q, c)
        }
        fn decode(&self, z: &[f64], c: &[f64]) -> Configuration {
            self.cvae.decode(z, c)
        }
        fn validity(&self, _c: &[f64], _z: &[f64]) -> f64 {
            if self.accept {
                1.0
            } else {
                0.0
            }
        }
        fn distance_grad(&self, _c: &[f64], _z: &[f64]) -> Vec<f64> {
            self.grad.clone()
        }
        fn costs(&self) -> ModelCosts {
            TINY
        }
    }

    /// Pure latent-space stub: decode is a fixed configuration, so planning
    /// geometry is irrelevant and only the extension logic is exercised.
    pub struct GeometryFreeStub {
        pub latent_dim: usize,
        pub decoded: Configuration,
        pub accept: bool,
    }

    impl LatentModels for GeometryFreeStub {
        fn latent_dim(&self) -> usize {
            self.latent_dim
        }
        fn encode(&self, _q: &Configuration, _c: &[f64]) -> Vec<f64> {
            vec![0.0; self.latent_dim]
        }
        fn decode(&self, _z: &[f64], _c: &[f64]) -> Configuration {
            self.decoded.clone()
        }
        fn validity(&self, _c: &[f64], _z: &[f64]) -> f64 {
            if self.accept {
                1.0
            } else {
                0.0
            }
        }
        fn distance_grad(&self, _c: &[f64], _z: &[f64]) -> Vec<f64> {
            vec![0.0; self.latent_dim]
        }
        fn costs(&self) -> ModelCosts {
            TINY
        }
    }
}
