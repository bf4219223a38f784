//! Dataset generation: on-manifold configurations, random environments with
//! precomputed grids and distance fields, validity labels, and
//! minimum-distance labels.
//!
//! Counts default to the full recipe (10^4 manifold samples, 500
//! environments, 200 distance samples per environment) and scale down for
//! quick runs. All generators take explicit seeds and derive one child seed
//! per item, so outputs are identical whether items are produced serially or
//! in parallel.

pub mod format;

use crate::constraint::{project, sample_on_manifold};
use crate::derive_seed;
use crate::envfield::{compute_sdf, robot_min_distance, EnvironmentSpec, OccupancyGrid, SignedDistanceField};
use crate::error::Error;
use crate::nn::CvaeModel;
use crate::robot::{exact_collision_check, Configuration};
use crate::scenario::{ScenarioDef, ScenarioId};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub const DEFAULT_MANIFOLD_COUNT: usize = 10_000;
pub const DEFAULT_ENV_COUNT: usize = 500;
pub const DEFAULT_PER_ENV: usize = 200;

/// An on-manifold configuration with the condition parameters it satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample {
    pub q: Configuration,
    pub c: Vec<f64>,
}

/// A latent validity label.
#[derive(Debug, Clone, PartialEq)]
pub struct ValiditySample {
    pub env_id: u32,
    pub c: Vec<f64>,
    pub z: Vec<f64>,
    pub valid: bool,
}

/// A latent minimum-distance label.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSample {
    pub env_id: u32,
    pub c: Vec<f64>,
    pub z: Vec<f64>,
    pub d_min: f64,
}

/// An environment with its precomputed grid and distance field.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentRecord {
    pub spec: EnvironmentSpec,
    pub grid: OccupancyGrid,
    pub sdf: SignedDistanceField,
}

/// Everything one scenario's training run consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenario: ScenarioId,
    pub environments: Vec<EnvironmentRecord>,
    pub manifold: Vec<ManifoldSample>,
    pub validity: Vec<ValiditySample>,
    pub distance: Vec<DistanceSample>,
}

/// Draws `count` on-manifold samples, each under independently drawn
/// condition parameters.
pub fn gen_manifold_dataset(
    scenario: &ScenarioDef,
    count: usize,
    seed: u64,
) -> Result<Vec<ManifoldSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x10_0000 + i as u64));
            let c = scenario.sample_c(&mut rng);
            let spec = scenario.constraint_spec(&c);
            let q = sample_on_manifold(&spec, &scenario.system, &mut rng)?;
            Ok(ManifoldSample { q, c })
        })
        .collect()
}

const ENV_REJECTION_BUDGET: usize = 500;

/// Samples `count` obstacle environments, rejecting any that collide with the
/// scenario's nominal endpoint configurations, and precomputes grid and SDF.
pub fn gen_environments(
    scenario: &ScenarioDef,
    count: usize,
    seed: u64,
) -> Result<Vec<EnvironmentRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x20_0000 + i as u64));
            for _ in 0..ENV_REJECTION_BUDGET {
                let env = scenario.sample_obstacles(&mut rng);
                let a_free =
                    exact_collision_check(&scenario.system, &scenario.nominal_endpoints.0, &env)?;
                let b_free =
                    exact_collision_check(&scenario.system, &scenario.nominal_endpoints.1, &env)?;
                if a_free && b_free {
                    let grid = scenario.make_grid(&env)?;
                    let sdf = compute_sdf(&grid);
                    return Ok(EnvironmentRecord {
                        spec: env,
                        grid,
                        sdf,
                    });
                }
            }
            Err(Error::SamplingExhausted {
                attempts: ENV_REJECTION_BUDGET,
            })
        })
        .collect()
}

/// Labels prior-sampled latents per environment: a latent is valid iff its
/// decoding projects onto the manifold and the projected configuration is
/// collision free.
pub fn gen_validity_dataset(
    envs: &[EnvironmentRecord],
    cvae: &CvaeModel,
    scenario: &ScenarioDef,
    per_env: usize,
    seed: u64,
) -> Result<Vec<ValiditySample>> {
    let per_env_results: Vec<Result<Vec<ValiditySample>>> = envs
        .par_iter()
        .enumerate()
        .map(|(env_id, env)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x30_0000 + env_id as u64));
            let mut out = Vec::with_capacity(per_env);
            for _ in 0..per_env {
                let c = scenario.sample_c(&mut rng);
                let z: Vec<f64> = (0..scenario.latent_dim())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let spec = scenario.constraint_spec(&c);
                let decoded = cvae.decode(&z, &c);
                let proj = project(&spec, &scenario.system, &decoded)?;
                let valid = proj.converged
                    && exact_collision_check(&scenario.system, &proj.q_proj, &env.spec)?;
                out.push(ValiditySample {
                    env_id: env_id as u32,
                    c,
                    z,
                    valid,
                });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(envs.len() * per_env);
    for r in per_env_results {
        all.extend(r?);
    }
    Ok(all)
}

/// Fraction bounds outside which the validity label balance is reported.
pub const BALANCE_WARN_RANGE: (f64, f64) = (0.2, 0.8);

/// Checks the aggregate positive fraction of a validity set; out-of-range
/// balance is worth a warning because the classifier sees few examples of one
/// class.
pub fn validity_balance_warning(samples: &[ValiditySample]) -> Option<String> {
    if samples.is_empty() {
        return None;
    }
    let pos = samples.iter().filter(|s| s.valid).count() as f64 / samples.len() as f64;
    if pos < BALANCE_WARN_RANGE.0 || pos > BALANCE_WARN_RANGE.1 {
        Some(format!(
            "validity labels are imbalanced: {:.1}% positive",
            100.0 * pos
        ))
    } else {
        None
    }
}

/// Distance-label generation budget multiplier: per environment the sampler
/// may draw up to `budget_factor * per_env` manifold configurations while
/// filling the colliding/free halves.
const DISTANCE_BUDGET_FACTOR: usize = 60;

/// Generates per-environment distance labels balanced between colliding and
/// free configurations. Each sample is drawn on the manifold, encoded, and
/// labeled at the projected decoding of its latent (the configuration the
/// planner would actually reach from `z`). Returns the samples plus warnings
/// for environments where the balance could not be met within budget.
pub fn gen_distance_dataset(
    envs: &[EnvironmentRecord],
    cvae: &CvaeModel,
    scenario: &ScenarioDef,
    per_env: usize,
    seed: u64,
) -> Result<(Vec<DistanceSample>, Vec<String>)> {
    let per_env_results: Vec<Result<(Vec<DistanceSample>, Option<String>)>> = envs
        .par_iter()
        .enumerate()
        .map(|(env_id, env)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x40_0000 + env_id as u64));
            let want_free = per_env / 2;
            let want_coll = per_env - want_free;
            let mut free = Vec::with_capacity(want_free);
            let mut coll = Vec::with_capacity(want_coll);
            for _ in 0..per_env * DISTANCE_BUDGET_FACTOR {
                if free.len() == want_free && coll.len() == want_coll {
                    break;
                }
                let c = scenario.sample_c(&mut rng);
                let spec = scenario.constraint_spec(&c);
                let Ok(q) = sample_on_manifold(&spec, &scenario.system, &mut rng) else {
                    continue;
                };
                let z = cvae.encode(&q, &c);
                let proj = project(&spec, &scenario.system, &cvae.decode(&z, &c))?;
                if !proj.converged {
                    continue;
                }
                let is_free = exact_collision_check(&scenario.system, &proj.q_proj, &env.spec)?;
                let bucket = if is_free { &mut free } else { &mut coll };
                let want = if is_free { want_free } else { want_coll };
                if bucket.len() == want {
                    continue;
                }
                let d_min = robot_min_distance(&scenario.system, &proj.q_proj, &env.sdf)?;
                bucket.push(DistanceSample {
                    env_id: env_id as u32,
                    c,
                    z,
                    d_min,
                });
            }
            let warning = if free.len() < want_free || coll.len() < want_coll {
                Some(format!(
                    "env {env_id}: distance labels imbalanced ({} free / {} colliding of {per_env})",
                    free.len(),
                    coll.len()
                ))
            } else {
                None
            };
            free.extend(coll);
            Ok((free, warning))
        })
        .collect();
    let mut all = Vec::with_capacity(envs.len() * per_env);
    let mut warnings = Vec::new();
    for r in per_env_results {
        let (samples, warning) = r?;
        all.extend(samples);
        warnings.extend(warning);
    }
    Ok((all, warnings))
}

/// Deterministic 90/10 train/test split by seeded shuffle; returns index
/// lists into the original sample order.
pub fn train_test_split(count: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x51_17));
    let mut idx: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let n_test = count / 10;
    let test = idx.split_off(count - n_test);
    (idx, test)
}
