//! Brute-force latent reachability: discretize the latent box into a grid,
//! mark each cell valid iff its center decodes and projects to a collision-
//! free configuration, and search the grid with full-neighborhood
//! connectivity. Used to certify that a planning instance is solvable through
//! the latent chart, independently of any tree-based planner.

use crate::constraint::project;
use crate::envfield::EnvironmentSpec;
use crate::nn::CvaeModel;
use crate::robot::exact_collision_check;
use crate::scenario::ScenarioDef;
use crate::Result;
use std::collections::VecDeque;

/// Half-width of the searched latent box (latents are prior-scaled).
pub const LATENT_BOX_HALF_WIDTH: f64 = 3.0;
/// Default cells per latent axis.
pub const DEFAULT_CELLS_PER_AXIS: usize = 15;

/// Grid search over the latent box: true iff the cells containing `z_init`
/// and `z_goal` are valid and connected through valid cells (Moore
/// neighborhood). `cells_per_axis` controls the discretization.
pub fn latent_grid_reachable(
    scenario: &ScenarioDef,
    cvae: &CvaeModel,
    env: &EnvironmentSpec,
    c: &[f64],
    z_init: &[f64],
    z_goal: &[f64],
    cells_per_axis: usize,
) -> Result<bool> {
    let dim = scenario.latent_dim();
    debug_assert_eq!(z_init.len(), dim);
    let spec = scenario.constraint_spec(c);
    let total: usize = cells_per_axis.pow(dim as u32);

    let cell_of = |z: &[f64]| -> usize {
        let mut idx = 0;
        for &v in z {
            let t = (v + LATENT_BOX_HALF_WIDTH) / (2.0 * LATENT_BOX_HALF_WIDTH);
            let k = ((t * cells_per_axis as f64) as isize)
                .clamp(0, cells_per_axis as isize - 1) as usize;
            idx = idx * cells_per_axis + k;
        }
        idx
    };
    let center_of = |mut idx: usize| -> Vec<f64> {
        let mut coords = vec![0.0; dim];
        for d in (0..dim).rev() {
            let k = idx % cells_per_axis;
            idx /= cells_per_axis;
            coords[d] = -LATENT_BOX_HALF_WIDTH
                + (k as f64 + 0.5) * (2.0 * LATENT_BOX_HALF_WIDTH) / cells_per_axis as f64;
        }
        coords
    };

    let mut valid = vec![false; total];
    for (idx, slot) in valid.iter_mut().enumerate() {
        let z = center_of(idx);
        let decoded = cvae.decode(&z, c);
        let pr = project(&spec, &scenario.system, &decoded)?;
        *slot = pr.converged && exact_collision_check(&scenario.system, &pr.q_proj, env)?;
    }

    let start = cell_of(z_init);
    let goal = cell_of(z_goal);
    if !valid[start] || !valid[goal] {
        return Ok(false);
    }

    // BFS over the full 3^dim - 1 neighborhood.
    let mut seen = vec![false; total];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    let decompose = |mut idx: usize| -> Vec<usize> {
        let mut coords = vec![0; dim];
        for d in (0..dim).rev() {
            coords[d] = idx % cells_per_axis;
            idx /= cells_per_axis;
        }
        coords
    };
    while let Some(cur) = queue.pop_front() {
        if cur == goal {
            return Ok(true);
        }
        let coords = decompose(cur);
        let mut offsets = vec![-1isize; dim];
        loop {
            if offsets.iter().any(|&o| o != 0) {
                let mut ok = true;
                let mut idx = 0;
                for d in 0..dim {
                    let v = coords[d] as isize + offsets[d];
                    if v < 0 || v >= cells_per_axis as isize {
                        ok = false;
                        break;
                    }
                    idx = idx * cells_per_axis + v as usize;
                }
                if ok && valid[idx] && !seen[idx] {
                    seen[idx] = true;
                    queue.push_back(idx);
                }
            }
            // Advance the mixed-radix offset counter over {-1, 0, 1}^dim.
            let mut d = dim;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                if offsets[d] < 1 {
                    offsets[d] += 1;
                    break;
                }
                offsets[d] = -1;
            }
            if offsets.iter().all(|&o| o == -1) {
                break;
            }
        }
    }
    Ok(false)
}
