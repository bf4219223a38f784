//! The configuration-space baseline: bidirectional projected RRT with no
//! learned models. Every edge is validated at full resolution as it is
//! created, so a connected path is returned as-is.

use super::context::PlanContext;
use super::extend::{constrained_extend_q, EdgePolicy, ExtendResult};
use super::lcbirrt::{check_query, finish};
use super::models::NoModels;
use super::tree::Tree;
use super::{PlanQuery, PlanResult, PlanStatus, PlannerConfig};
use crate::robot::{Configuration, JOINT_LIMIT};
use crate::Result;
use rand::Rng;

/// Plans from `q_init` to `q_goal` purely in configuration space.
pub fn plan_cbirrt2(query: &PlanQuery<'_>, cfg: &PlannerConfig) -> Result<PlanResult> {
    cfg.validate()?;
    let models = NoModels;
    let mut ctx = PlanContext::new(query.scenario, query.c.clone(), query.env, &models, cfg.clone());
    check_query(&mut ctx, query)?;
    if query.q_init.max_abs_diff(query.q_goal) <= 1e-12 {
        return Ok(finish(&ctx, PlanStatus::Solved, vec![query.q_init.clone()]));
    }

    let mut tree_a = Tree::new(query.q_init.clone(), None);
    let mut tree_b = Tree::new(query.q_goal.clone(), None);
    let mut a_is_start = true;

    while !ctx.timed_out() {
        let q_rand = Configuration::new(
            (0..ctx.scenario.n_joints())
                .map(|_| ctx.rng.gen_range(-JOINT_LIMIT..JOINT_LIMIT))
                .collect(),
        );
        let (x_a, res_a) =
            constrained_extend_q(&mut ctx, &mut tree_a, &q_rand, EdgePolicy::Inline, false);
        if res_a != ExtendResult::Trapped {
            let q_a = tree_a.node(x_a).q.clone();
            let (x_b, res_b) =
                constrained_extend_q(&mut ctx, &mut tree_b, &q_a, EdgePolicy::Inline, false);
            if res_b == ExtendResult::Reached {
                let path = assemble(&tree_a, x_a, &tree_b, x_b, a_is_start);
                return Ok(finish(&ctx, PlanStatus::Solved, path));
            }
        }
        std::mem::swap(&mut tree_a, &mut tree_b);
        a_is_start = !a_is_start;
    }
    Ok(finish(&ctx, PlanStatus::Timeout, Vec::new()))
}

fn assemble(
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
    // The connect extension reached the other tip exactly.
    if let (Some(last), Some(first)) = (path.last(), tail.first()) {
        if last.max_abs_diff(first) <= 1e-9 {
            tail.remove(0);
        }
    }
    path.extend(tail);
    path
}
