//! Post-hoc path validation, independent of the planners' own checking
//! logic. Used by the benchmark harness and the acceptance suite to certify
//! every solved result against the constraint residual and the exact
//! collision oracle.

use crate::constraint::{constraint_value, project, ConstraintSpec};
use crate::envfield::EnvironmentSpec;
use crate::robot::{exact_collision_check, ChainSystem, Configuration};
use crate::Result;

/// Why a path failed validation.
#[derive(Debug, Clone, PartialEq)]
pub enum PathViolation {
    EmptyPath,
    EndpointMismatch,
    WaypointResidual { index: usize, residual: f64 },
    WaypointCollision { index: usize },
    EdgeProjectionFailure { edge: usize, step: usize },
    EdgeResidual { edge: usize, step: usize, residual: f64 },
    EdgeCollision { edge: usize, step: usize },
}

/// Walks a solved path and re-verifies everything the solved status
/// promises: endpoints match the query, every waypoint satisfies the
/// constraint within tolerance and is collision free, and every edge stays
/// valid when re-interpolated and re-projected at the given resolution.
pub fn validate_path(
    system: &ChainSystem,
    spec: &ConstraintSpec,
    env: &EnvironmentSpec,
    q_init: &Configuration,
    q_goal: &Configuration,
    path: &[Configuration],
    edge_resolution: f64,
) -> Result<std::result::Result<(), PathViolation>> {
    if path.is_empty() {
        return Ok(Err(PathViolation::EmptyPath));
    }
    let single = path.len() == 1;
    let ends_match = path[0].max_abs_diff(q_init) <= 1e-9
        && path[path.len() - 1].max_abs_diff(q_goal) <= 1e-9;
    // A one-waypoint path answers a trivial query where start and goal agree.
    if !ends_match || (single && q_init.max_abs_diff(q_goal) > 1e-9) {
        return Ok(Err(PathViolation::EndpointMismatch));
    }

    for (index, q) in path.iter().enumerate() {
        let h = constraint_value(spec, system, q)?;
        let residual: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if residual > spec.epsilon {
            return Ok(Err(PathViolation::WaypointResidual { index, residual }));
        }
        if !exact_collision_check(system, q, env)? {
            return Ok(Err(PathViolation::WaypointCollision { index }));
        }
    }

    for (edge, pair) in path.windows(2).enumerate() {
        let gap = pair[0].max_abs_diff(&pair[1]);
        if gap <= edge_resolution {
            continue;
        }
        let segments = (gap / edge_resolution).ceil() as usize;
        for step in 1..segments {
            let t = step as f64 / segments as f64;
            let lerp = Configuration::new(
                pair[0]
                    .as_slice()
                    .iter()
                    .zip(pair[1].as_slice())
                    .map(|(a, b)| a + t * (b - a))
                    .collect(),
            );
            let pr = project(spec, system, &lerp)?;
            if !pr.converged {
                return Ok(Err(PathViolation::EdgeProjectionFailure { edge, step }));
            }
            if pr.residual_norm > spec.epsilon {
                return Ok(Err(PathViolation::EdgeResidual {
                    edge,
                    step,
                    residual: pr.residual_norm,
                }));
            }
            if !exact_collision_check(system, &pr.q_proj, env)? {
                return Ok(Err(PathViolation::EdgeCollision { edge, step }));
            }
        }
    }
    Ok(Ok(()))
}
