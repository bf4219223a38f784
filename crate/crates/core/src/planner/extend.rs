//! Tree extension primitives: single latent steps gated by the validity
//! model, and the classic projected configuration-space extension.

use super::context::PlanContext;
use super::models::LatentModels;
use super::tree::{NodeId, Tree};
use crate::robot::Configuration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendResult {
    Reached,
    Advanced,
    Trapped,
}

/// Matching tolerance for "the target was reached exactly".
const REACH_EPS: f64 = 1e-9;

/// One latent step from the tree's nearest node toward `z_target`.
///
/// The step lands on the target itself when the gap is within one step size
/// (`Reached`), otherwise advances by `step_z` (`Advanced`). A step whose
/// validity score falls below the threshold adds nothing (`Trapped`). New
/// nodes carry the raw decoded configuration; projection is deferred to path
/// validation.
pub fn constrained_extend_z<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    tree: &mut Tree,
    z_target: &[f64],
) -> (NodeId, ExtendResult) {
    ctx.charge_nearest(tree.alive_count(), z_target.len());
    let near_id = tree.nearest_z(z_target);
    let z_near = tree
        .node(near_id)
        .z
        .clone()
        .expect("latent tree nodes carry z");
    let dist: f64 = z_near
        .iter()
        .zip(z_target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist <= REACH_EPS {
        return (near_id, ExtendResult::Reached);
    }
    let reached = dist <= ctx.cfg.step_z + REACH_EPS;
    let z_new: Vec<f64> = if reached {
        z_target.to_vec()
    } else {
        let scale = ctx.cfg.step_z / dist;
        z_near
            .iter()
            .zip(z_target)
            .map(|(a, b)| a + scale * (b - a))
            .collect()
    };
    if ctx.validity(&z_new) < ctx.cfg.validity_threshold {
        return (near_id, ExtendResult::Trapped);
    }
    let q = ctx.decode(&z_new);
    let id = tree.add_child(near_id, q, Some(z_new), false);
    (
        id,
        if reached {
            ExtendResult::Reached
        } else {
            ExtendResult::Advanced
        },
    )
}

/// How configuration-space extensions treat the edges they create.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgePolicy {
    /// Validate each new edge at the configured resolution as it is created
    /// (the baseline planner's only guard).
    Inline,
    /// Leave edges to the path validation pass.
    Deferred,
}

/// Classic projected extension: march from the nearest node toward `q_rand`
/// in `step_q` increments, projecting and collision-checking each step, until
/// the target is reached or progress stops. With `encode_latents` the new
/// nodes also carry their encodings.
pub fn constrained_extend_q<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    tree: &mut Tree,
    q_rand: &Configuration,
    edges: EdgePolicy,
    encode_latents: bool,
) -> (NodeId, ExtendResult) {
    ctx.charge_nearest(tree.alive_count(), q_rand.len());
    let start = tree.nearest_q(q_rand);
    let mut cur_id = start;
    let mut cur_q = tree.node(start).q.clone();
    let mut added = false;
    loop {
        let dist = cur_q.dist(q_rand);
        if dist <= REACH_EPS {
            return (cur_id, ExtendResult::Reached);
        }
        if ctx.timed_out() {
            break;
        }
        let scale = ctx.cfg.step_q.min(dist) / dist;
        let target = Configuration::new(
            cur_q
                .as_slice()
                .iter()
                .zip(q_rand.as_slice())
                .map(|(a, b)| a + scale * (b - a))
                .collect(),
        );
        let pr = ctx.project(&target);
        if !pr.converged {
            break;
        }
        let q_new = pr.q_proj;
        if !ctx.collision_free(&q_new) {
            break;
        }
        // Projection can push the step sideways; stop once it no longer
        // makes progress toward the target.
        if q_new.dist(q_rand) >= dist - REACH_EPS {
            break;
        }
        if edges == EdgePolicy::Inline && !ctx.edge_valid(&cur_q, &q_new).valid {
            break;
        }
        let z = encode_latents.then(|| ctx.encode(&q_new));
        let validated = edges == EdgePolicy::Inline;
        cur_id = tree.add_child(cur_id, q_new.clone(), z, validated);
        added = true;
        cur_q = q_new;
    }
    (
        cur_id,
        if added {
            ExtendResult::Advanced
        } else {
            ExtendResult::Trapped
        },
    )
}
