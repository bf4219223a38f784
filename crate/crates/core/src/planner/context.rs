//! Shared per-query state: constraint, environment, models, RNG, counters
//! and the work clock. Every primitive the planning algorithms use goes
//! through this context so that operation counts and time charges are
//! complete and consistent.

use super::clock::{self, Phase, WorkClock};
use super::models::LatentModels;
use super::{Counters, PlannerConfig};
use crate::constraint::{project, ConstraintSpec, ProjectionResult};
use crate::envfield::EnvironmentSpec;
use crate::robot::{exact_collision_check, Configuration};
use crate::scenario::ScenarioDef;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub struct PlanContext<'a, M: LatentModels> {
    pub scenario: &'a ScenarioDef,
    pub spec: ConstraintSpec,
    pub c: Vec<f64>,
    pub env: &'a EnvironmentSpec,
    pub models: &'a M,
    pub cfg: PlannerConfig,
    pub clock: WorkClock,
    pub counters: Counters,
    pub rng: ChaCha8Rng,
    circles: usize,
}

/// Result of an edge check, carrying the interpolated waypoints so a failed
/// check can hand them to the local path optimizer without recomputing.
pub struct EdgeCheck {
    pub valid: bool,
    /// Interior waypoints between the endpoints (empty when the endpoints
    /// are within one resolution step), valid only up to the first failure.
    pub interior: Vec<Configuration>,
}

impl<'a, M: LatentModels> PlanContext<'a, M> {
    pub fn new(
        scenario: &'a ScenarioDef,
        c: Vec<f64>,
        env: &'a EnvironmentSpec,
        models: &'a M,
        cfg: PlannerConfig,
    ) -> Self {
        let spec = scenario.constraint_spec(&c);
        let circles: usize = scenario
            .system
            .chains()
            .iter()
            .map(|ch| ch.n_joints() * ch.samples_per_link)
            .sum();
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        PlanContext {
            scenario,
            spec,
            c,
            env,
            models,
            cfg,
            clock: WorkClock::new(),
            counters: Counters::default(),
            rng,
            circles,
        }
    }

    pub fn timed_out(&self) -> bool {
        self.clock.total_seconds() >= self.cfg.time_limit
    }

    pub fn project(&mut self, q: &Configuration) -> ProjectionResult {
        let res = project(&self.spec, &self.scenario.system, q)
            .expect("context dimensions are consistent");
        self.counters.projections += 1;
        self.clock.charge(clock::cost_projection(
            self.scenario.n_joints(),
            self.spec.dim(),
            res.iterations,
        ));
        res
    }

    pub fn collision_free(&mut self, q: &Configuration) -> bool {
        self.counters.collision_checks += 1;
        self.clock
            .charge(clock::cost_collision(self.circles, self.env.obstacles.len()));
        exact_collision_check(&self.scenario.system, q, self.env)
            .expect("context dimensions are consistent")
    }

    pub fn encode(&mut self, q: &Configuration) -> Vec<f64> {
        self.clock.charge(self.models.costs().encode_flops);
        self.models.encode(q, &self.c)
    }

    pub fn decode(&mut self, z: &[f64]) -> Configuration {
        self.clock.charge(self.models.costs().decode_flops);
        self.models.decode(z, &self.c)
    }

    pub fn validity(&mut self, z: &[f64]) -> f64 {
        self.clock.charge(self.models.costs().validity_flops);
        self.models.validity(&self.c, z)
    }

    pub fn distance_grad(&mut self, z: &[f64]) -> Vec<f64> {
        self.clock.charge(self.models.costs().distance_grad_flops);
        self.models.distance_grad(&self.c, z)
    }

    pub fn charge_nearest(&mut self, count: usize, dim: usize) {
        self.clock.charge(clock::cost_nearest(count, dim));
    }

    /// Node validity: the configuration projects onto the manifold and the
    /// projection is collision free. Returns the projected configuration.
    pub fn valid_config(&mut self, q: &Configuration) -> (bool, Configuration) {
        let pr = self.project(q);
        if !pr.converged {
            return (false, pr.q_proj);
        }
        let free = self.collision_free(&pr.q_proj);
        (free, pr.q_proj)
    }

    /// Edge validity at the configured resolution: linear interpolation with
    /// per-waypoint projection; every interior waypoint must project and be
    /// collision free.
    pub fn edge_valid(&mut self, q_a: &Configuration, q_b: &Configuration) -> EdgeCheck {
        let gap = q_a.max_abs_diff(q_b);
        if gap <= self.cfg.edge_resolution {
            return EdgeCheck {
                valid: true,
                interior: Vec::new(),
            };
        }
        let segments = (gap / self.cfg.edge_resolution).ceil() as usize;
        let mut interior = Vec::with_capacity(segments - 1);
        for i in 1..segments {
            let t = i as f64 / segments as f64;
            let lerp = Configuration::new(
                q_a.as_slice()
                    .iter()
                    .zip(q_b.as_slice())
                    .map(|(a, b)| a + t * (b - a))
                    .collect(),
            );
            let pr = self.project(&lerp);
            if !pr.converged || !self.collision_free(&pr.q_proj) {
                return EdgeCheck {
                    valid: false,
                    interior,
                };
            }
            interior.push(pr.q_proj);
        }
        EdgeCheck {
            valid: true,
            interior,
        }
    }

    /// Runs `f` with the clock switched to check accounting.
    pub fn in_check_phase<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        let prev = self.clock.phase();
        self.clock.set_phase(Phase::Check);
        let out = f(self);
        self.clock.set_phase(prev);
        out
    }
}
