//! Path validation with interval-gated local path optimization, the latent
//! obstacle-avoidance move, and the recovery helpers used after a failed
//! check.

use super::context::PlanContext;
use super::extend::{constrained_extend_z, ExtendResult};
use super::models::LatentModels;
use super::tree::{NodeId, Tree};
use crate::robot::Configuration;

/// Latent obstacle-avoidance move: repeatedly step along the learned
/// clearance gradient, and after each step decode, project and
/// collision-check. Returns the first valid `(q, z)` pair, or nothing after
/// the step budget. The move comes first by construction, so an input that is
/// already valid still shifts once before being accepted.
pub fn move_node_z<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    z_start: &[f64],
) -> Option<(Configuration, Vec<f64>)> {
    ctx.counters.move_attempts += 1;
    let mut z = z_start.to_vec();
    for _ in 0..ctx.cfg.n_max {
        let grad = ctx.distance_grad(&z);
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi += ctx.cfg.gamma * gi;
        }
        let decoded = ctx.decode(&z);
        let (ok, q_proj) = ctx.valid_config(&decoded);
        if ok {
            ctx.counters.move_successes += 1;
            return Some((q_proj, z));
        }
    }
    None
}

/// Walks the root-to-`x_dst` path, re-deriving each node's configuration from
/// its latent coordinates and checking nodes and edges.
///
/// When the connection counter `n` falls on the optimization interval,
/// invalid nodes are pushed out of the obstacle region by [`move_node_z`] and
/// invalid edges are repaired waypoint-by-waypoint, the repaired chain being
/// spliced into the tree so the final path physically contains it. Otherwise
/// any invalid node or edge fails the check directly. A failure deletes the
/// offending branch and returns false.
///
/// The root is exempt: its configuration is the query endpoint and stays
/// pinned.
pub fn check_path_valid<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    tree: &mut Tree,
    x_dst: NodeId,
    n: u64,
) -> bool {
    ctx.in_check_phase(|ctx| {
        let path = tree.path_from_root(x_dst);
        let lpo = match ctx.cfg.interval {
            Some(interval) => n % interval as u64 == 0,
            None => false,
        };
        let mut prev_q = tree.node(path[0]).q.clone();
        for window in path.windows(2) {
            let (parent, id) = (window[0], window[1]);
            let z_i = tree
                .node(id)
                .z
                .clone()
                .expect("latent tree nodes carry z");
            let decoded = ctx.decode(&z_i);
            let (node_ok, proj) = ctx.valid_config(&decoded);
            let mut q_proj = proj;
            let mut z_cur = z_i;
            if lpo {
                if !node_ok {
                    match move_node_z(ctx, &z_cur) {
                        Some((q_moved, z_moved)) => {
                            q_proj = q_moved;
                            z_cur = z_moved;
                        }
                        None => {
                            tree.delete_branch(id);
                            ctx.counters.replans += 1;
                            return false;
                        }
                    }
                }
                let edge = ctx.edge_valid(&prev_q, &q_proj);
                if !edge.valid {
                    match repair_edge(ctx, &prev_q, &q_proj) {
                        Some(chain) => tree.insert_chain(parent, id, chain),
                        None => {
                            tree.delete_branch(id);
                            ctx.counters.replans += 1;
                            return false;
                        }
                    }
                }
            } else {
                if !node_ok || !ctx.edge_valid(&prev_q, &q_proj).valid {
                    tree.delete_branch(id);
                    ctx.counters.replans += 1;
                    return false;
                }
            }
            let node = tree.node_mut(id);
            node.q = q_proj.clone();
            node.z = Some(z_cur);
            node.validated = true;
            prev_q = q_proj;
        }
        true
    })
}

/// Local path optimization of one invalid edge: interpolate the gap on the
/// manifold, move every interior waypoint's encoding away from the obstacles,
/// and require the chain of moved waypoints to connect with valid edges.
/// Returns the moved `(q, z)` chain to splice between the edge's endpoints.
fn repair_edge<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    q_a: &Configuration,
    q_b: &Configuration,
) -> Option<Vec<(Configuration, Vec<f64>)>> {
    let gap = q_a.max_abs_diff(q_b);
    let segments = (gap / ctx.cfg.edge_resolution).ceil().max(1.0) as usize;
    let mut chain: Vec<(Configuration, Vec<f64>)> = Vec::new();
    let mut prev = q_a.clone();
    for i in 1..segments {
        let t = i as f64 / segments as f64;
        let lerp = Configuration::new(
            q_a.as_slice()
                .iter()
                .zip(q_b.as_slice())
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        );
        let pr = ctx.project(&lerp);
        if !pr.converged {
            return None;
        }
        let z_j = ctx.encode(&pr.q_proj);
        let (q_moved, z_moved) = move_node_z(ctx, &z_j)?;
        if !ctx.edge_valid(&prev, &q_moved).valid {
            return None;
        }
        prev = q_moved.clone();
        chain.push((q_moved, z_moved));
    }
    if !ctx.edge_valid(&prev, q_b).valid {
        return None;
    }
    Some(chain)
}

/// Deepest node of a former root-to-destination path that still exists in
/// the tree with a validated configuration; the root when nothing deeper
/// survives.
pub fn get_last_valid(tree: &Tree, former_path: &[NodeId]) -> NodeId {
    former_path
        .iter()
        .rev()
        .find(|&&id| tree.is_alive(id) && tree.node(id).validated)
        .copied()
        .unwrap_or_else(|| tree.root())
}

/// Recovery jump after a failed path check: re-encode the last valid
/// configuration, and if the fresh latent is valid by both the classifier and
/// the exact check, anchor it as a child of the surviving node and pull the
/// other tree toward it. Trapped when the re-encoded state is invalid.
pub fn latent_jump<M: LatentModels>(
    ctx: &mut PlanContext<'_, M>,
    tree: &mut Tree,
    other: &mut Tree,
    last_valid: NodeId,
) -> ExtendResult {
    let q_last = tree.node(last_valid).q.clone();
    let z_new = ctx.encode(&q_last);
    if ctx.validity(&z_new) < ctx.cfg.validity_threshold {
        return ExtendResult::Trapped;
    }
    let decoded = ctx.decode(&z_new);
    let (ok, q_proj) = ctx.valid_config(&decoded);
    if !ok {
        return ExtendResult::Trapped;
    }
    tree.add_child(last_valid, q_proj, Some(z_new.clone()), false);
    let _ = constrained_extend_z(ctx, other, &z_new);
    ExtendResult::Advanced
}
