//! The latent bidirectional planner: grow two trees in the learned latent
//! space, screen extensions with the validity model, and verify candidate
//! connections with the path validation pass before returning.

use super::check::{check_path_valid, get_last_valid, latent_jump};
use super::context::PlanContext;
use super::extend::{constrained_extend_q, constrained_extend_z, EdgePolicy, ExtendResult};
use super::models::LatentModels;
use super::tree::Tree;
use super::{PlanQuery, PlanResult, PlanStatus, PlannerConfig, Timings};
use crate::error::Error;
use crate::robot::{Configuration, JOINT_LIMIT};
use crate::Result;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Verifies the shared query preconditions: endpoints on the manifold and
/// collision free.
pub(super) fn check_query<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    query: &PlanQuery<'_>,
) -> Result<()> {
    for (name, q) in [("start", query.q_init), ("goal", query.q_goal)] {
        if q.len() != ctx.scenario.n_joints() {
            return Err(Error::argument(format!("{name} has wrong dimension")));
        }
        let h = crate::constraint::constraint_value(&ctx.spec, &ctx.scenario.system, q)?;
        let norm: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > ctx.spec.epsilon {
            return Err(Error::argument(format!(
                "{name} is off the constraint manifold (residual {norm:.3e})"
            )));
        }
        if !crate::robot::exact_collision_check(&ctx.scenario.system, q, ctx.env)? {
            return Err(Error::argument(format!("{name} is in collision")));
        }
    }
    Ok(())
}

pub(super) fn finish<M: LatentModels>(
    ctx: &PlanContext<'_, M>,
    status: PlanStatus,
    path: Vec<Configuration>,
) -> PlanResult {
    PlanResult {
        status,
        path,
        timings: Timings {
            total: ctx.clock.total_seconds(),
            path_search: ctx.clock.search_seconds(),
            path_check: ctx.clock.check_seconds(),
        },
        counters: ctx.counters.clone(),
    }
}

/// Plans from `q_init` to `q_goal` in latent space.
pub fn plan_lcbirrt<M: LatentModels>(
    query: &PlanQuery<'_>,
    models: &M,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    let mut ctx = PlanContext::new(query.scenario, query.c.clone(), query.env, models, cfg.clone());
    check_query(&mut ctx, query)?;
    if query.q_init.max_abs_diff(query.q_goal) <= 1e-12 {
        return Ok(finish(&ctx, PlanStatus::Solved, vec![query.q_init.clone()]));
    }

    let latent_dim = models.latent_dim();
    let z_init = ctx.encode(query.q_init);
    let z_goal = ctx.encode(query.q_goal);
    let mut tree_a = Tree::new(query.q_init.clone(), Some(z_init));
    let mut tree_b = Tree::new(query.q_goal.clone(), Some(z_goal));
    // Trees swap roles every iteration; this flag tracks which one still
    // roots at the start configuration.
    let mut a_is_start = true;

    while !ctx.timed_out() {
        let z_rand: Vec<f64> = (0..latent_dim)
            .map(|_| StandardNormal.sample(&mut ctx.rng))
            .collect();
        let (x_a, res_a) = constrained_extend_z(&mut ctx, &mut tree_a, &z_rand);
        if res_a != ExtendResult::Trapped {
            let z_a = tree_a
                .node(x_a)
                .z
                .clone()
                .expect("latent tree nodes carry z");
            let (mut x_new, mut res_b) = constrained_extend_z(&mut ctx, &mut tree_b, &z_a);
            while res_b == ExtendResult::Advanced && !ctx.timed_out() {
                let step = constrained_extend_z(&mut ctx, &mut tree_b, &z_a);
                x_new = step.0;
                res_b = step.1;
            }
            if res_b == ExtendResult::Reached {
                ctx.counters.connections += 1;
                let n = ctx.counters.connections;
                let former_a = tree_a.path_from_root(x_a);
                if !check_path_valid(&mut ctx, &mut tree_a, x_a, n) {
                    let last = get_last_valid(&tree_a, &former_a);
                    let jump = latent_jump(&mut ctx, &mut tree_a, &mut tree_b, last);
                    if jump != ExtendResult::Trapped {
                        continue;
                    }
                } else {
                    let former_b = tree_b.path_from_root(x_new);
                    if !check_path_valid(&mut ctx, &mut tree_b, x_new, n) {
                        let last = get_last_valid(&tree_b, &former_b);
                        let jump = latent_jump(&mut ctx, &mut tree_b, &mut tree_a, last);
                        if jump != ExtendResult::Trapped {
                            continue;
                        }
                    } else {
                        // Both tree paths are validated; the bridge between
                        // the two tips still needs its own edge check (it is
                        // no tree edge). A failed bridge keeps both trees and
                        // plans on.
                        let q_tip_a = tree_a.node(x_a).q.clone();
                        let q_tip_b = tree_b.node(x_new).q.clone();
                        let bridge_ok =
                            ctx.in_check_phase(|ctx| ctx.edge_valid(&q_tip_a, &q_tip_b).valid);
                        if bridge_ok {
                            let path =
                                assemble_path(&tree_a, x_a, &tree_b, x_new, a_is_start);
                            return Ok(finish(&ctx, PlanStatus::Solved, path));
                        }
                    }
                }
            }
        }
        if ctx.cfg.p_q > ctx.rng.gen_range(0.0..1.0) {
            let q_rand = Configuration::new(
                (0..ctx.scenario.n_joints())
                    .map(|_| ctx.rng.gen_range(-JOINT_LIMIT..JOINT_LIMIT))
                    .collect(),
            );
            let _ = constrained_extend_q(
                &mut ctx,
                &mut tree_a,
                &q_rand,
                EdgePolicy::Deferred,
                true,
            );
        }
        std::mem::swap(&mut tree_a, &mut tree_b);
        a_is_start = !a_is_start;
    }
    Ok(finish(&ctx, PlanStatus::Timeout, Vec::new()))
}

fn assemble_path(
    tree_a: &Tree,
    tip_a: super::tree::NodeId,
    tree_b: &Tree,
    tip_b: super::tree::NodeId,
    a_is_start: bool,
) -> Vec<Configuration> {
    let (start_tree, start_tip, goal_tree, goal_tip) = if a_is_start {
        (tree_a, tip_a, tree_b, tip_b)
    } else {
        (tree_b, tip_b, tree_a, tip_a)
    };
    let mut path: Vec<Configuration> = start_tree
        .path_from_root(start_tip)
        .into_iter()
        .map(|id| start_tree.node(id).q.clone())
        .collect();
    let mut tail: Vec<Configuration> = goal_tree
        .path_from_root(goal_tip)
        .into_iter()
        .map(|id| goal_tree.node(id).q.clone())
        .collect();
    tail.reverse();
    // The two tips usually decode to the same configuration; drop the
    // duplicate waypoint when they coincide.
    if let (Some(last), Some(first)) = (path.last(), tail.first()) {
        if last.max_abs_diff(first) <= 1e-12 {
            tail.remove(0);
        }
    }
    path.extend(tail);
    path
}
