//! Benchmark protocol: seeded problem generation, running a planner set over
//! identical problem sets, soundness validation of every solved path, and
//! metric aggregation.

use crate::derive_seed;
use crate::envfield::EnvironmentSpec;
use crate::error::Error;
use crate::nn::{CvaeModel, DistanceModel, ValidityModel};
use crate::planner::{
    plan_cbirrt2, plan_lcbirrt, validate_path, PlanQuery, PlanResult, PlanStatus, PlannerConfig,
    TaskModels,
};
use crate::robot::{exact_collision_check, Configuration};
use crate::scenario::{ScenarioDef, ScenarioId};
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Thread-cap environment variable honored by benchmark runs.
pub const THREADS_ENV_VAR: &str = "LATENT_CMP_THREADS";

/// One planning problem, self-contained and serializable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: u32,
    pub scenario: ScenarioId,
    pub c: Vec<f64>,
    pub q_init: Configuration,
    pub q_goal: Configuration,
    pub env: EnvironmentSpec,
    pub seed: u64,
}

/// Which planner to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerChoice {
    Cbirrt2,
    Lcbirrt,
    /// Local path optimization at the given connection interval.
    LcbirrtLpo(usize),
}

impl PlannerChoice {
    pub fn id(&self) -> String {
        match self {
            PlannerChoice::Cbirrt2 => "cbirrt2".into(),
            PlannerChoice::Lcbirrt => "lcbirrt".into(),
            PlannerChoice::LcbirrtLpo(k) => format!("lcbirrt-lpo:{k}"),
        }
    }

    pub fn needs_models(&self) -> bool {
        !matches!(self, PlannerChoice::Cbirrt2)
    }

    pub fn interval(&self) -> Option<usize> {
        match self {
            PlannerChoice::LcbirrtLpo(k) => Some(*k),
            _ => None,
        }
    }
}

impl std::str::FromStr for PlannerChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "cbirrt2" {
            return Ok(PlannerChoice::Cbirrt2);
        }
        if lower == "lcbirrt" {
            return Ok(PlannerChoice::Lcbirrt);
        }
        if let Some(rest) = lower.strip_prefix("lcbirrt-lpo") {
            let interval = match rest.strip_prefix(':') {
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| Error::config(format!("bad interval in '{s}'")))?,
                None => 10,
            };
            if interval == 0 {
                return Err(Error::config("interval must be at least 1"));
            }
            return Ok(PlannerChoice::LcbirrtLpo(interval));
        }
        Err(Error::config(format!("unknown planner '{s}'")))
    }
}

/// The trained models for one scenario.
pub struct ModelSet {
    pub cvae: CvaeModel,
    pub validity: ValidityModel,
    pub distance: DistanceModel,
}

/// One benchmark row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem_id: u32,
    pub planner: String,
    pub status: PlanStatus,
    pub total_s: f64,
    pub search_s: f64,
    pub check_s: f64,
    pub replans: u64,
    /// Joint-space arc length of the returned path, radians; 0 on timeout.
    pub path_length: f64,
    /// Verdict of the independent path validator; vacuously true on timeout.
    pub sound: bool,
}

const PROBLEM_ATTEMPTS: usize = 200;
const WALK_STEP: f64 = 0.1;
const WALK_TARGET_LENGTH: f64 = 2.5;
const MIN_ENDPOINT_DISTANCE: f64 = 1.0;

/// Generates `count` problems. Each instance draws its own environment
/// (rejected against the scenario's nominal endpoints), condition parameters
/// and start configuration, then walks a collision-free random path along the
/// manifold to place the goal, so every instance is solvable by construction.
pub fn gen_problems(
    scenario: &ScenarioDef,
    count: usize,
    seed: u64,
) -> Result<Vec<ProblemInstance>> {
    (0..count as u32)
        .into_par_iter()
        .map(|id| {
            let instance_seed = derive_seed(seed, 0x70_0000 + id as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
            for _ in 0..PROBLEM_ATTEMPTS {
                let env = scenario.sample_obstacles(&mut rng);
                if !exact_collision_check(&scenario.system, &scenario.nominal_endpoints.0, &env)?
                    || !exact_collision_check(
                        &scenario.system,
                        &scenario.nominal_endpoints.1,
                        &env,
                    )?
                {
                    continue;
                }
                let c = scenario.sample_c(&mut rng);
                let spec = scenario.constraint_spec(&c);
                let Some(q_init) = sample_free_config(scenario, &spec, &env, &mut rng) else {
                    continue;
                };
                if let Some(q_goal) = witness_walk(scenario, &spec, &env, &q_init, &mut rng) {
                    return Ok(ProblemInstance {
                        id,
                        scenario: scenario.id,
                        c,
                        q_init,
                        q_goal,
                        env,
                        seed: instance_seed,
                    });
                }
            }
            Err(Error::SamplingExhausted {
                attempts: PROBLEM_ATTEMPTS,
            })
        })
        .collect()
}

fn sample_free_config(
    scenario: &ScenarioDef,
    spec: &crate::constraint::ConstraintSpec,
    env: &EnvironmentSpec,
    rng: &mut ChaCha8Rng,
) -> Option<Configuration> {
    for _ in 0..50 {
        let Ok(q) = crate::constraint::sample_on_manifold(spec, &scenario.system, rng) else {
            continue;
        };
        if exact_collision_check(&scenario.system, &q, env).ok()? {
            return Some(q);
        }
    }
    None
}

/// Random walk on the manifold through free space: repeatedly march toward
/// fresh manifold samples in small projected steps, stopping a step early
/// whenever it would collide. The walk's end becomes the goal; the walk
/// itself witnesses that a valid path exists.
fn witness_walk(
    scenario: &ScenarioDef,
    spec: &crate::constraint::ConstraintSpec,
    env: &EnvironmentSpec,
    q_init: &Configuration,
    rng: &mut ChaCha8Rng,
) -> Option<Configuration> {
    let mut cur = q_init.clone();
    let mut walked = 0.0;
    for _ in 0..40 {
        let Some(target) = sample_free_config(scenario, spec, env, rng) else {
            continue;
        };
        loop {
            let dist = cur.dist(&target);
            if dist <= 1e-9 {
                break;
            }
            let scale = WALK_STEP.min(dist) / dist;
            let step = Configuration::new(
                cur.as_slice()
                    .iter()
                    .zip(target.as_slice())
                    .map(|(a, b)| a + scale * (b - a))
                    .collect(),
            );
            let Ok(pr) = crate::constraint::project(spec, &scenario.system, &step) else {
                break;
            };
            if !pr.converged {
                break;
            }
            if !exact_collision_check(&scenario.system, &pr.q_proj, env).ok()? {
                break;
            }
            if pr.q_proj.dist(&target) >= dist - 1e-9 {
                break;
            }
            walked += cur.dist(&pr.q_proj);
            cur = pr.q_proj;
        }
        if walked >= WALK_TARGET_LENGTH && cur.dist(q_init) >= MIN_ENDPOINT_DISTANCE {
            return Some(cur);
        }
    }
    None
}

/// Runs one planner on one problem and validates the outcome.
pub fn run_single(
    scenario: &ScenarioDef,
    problem: &ProblemInstance,
    planner: PlannerChoice,
    models: Option<&ModelSet>,
    base_cfg: &PlannerConfig,
    run_seed: u64,
) -> Result<BenchRecord> {
    let mut cfg = base_cfg.clone();
    cfg.seed = run_seed;
    cfg.interval = planner.interval();
    let query = PlanQuery {
        scenario,
        c: problem.c.clone(),
        q_init: &problem.q_init,
        q_goal: &problem.q_goal,
        env: &problem.env,
    };
    let result: PlanResult = match planner {
        PlannerChoice::Cbirrt2 => plan_cbirrt2(&query, &cfg)?,
        PlannerChoice::Lcbirrt | PlannerChoice::LcbirrtLpo(_) => {
            let set = models.ok_or_else(|| {
                Error::config(format!("planner '{}' needs trained models", planner.id()))
            })?;
            let grid = scenario.make_grid(&problem.env)?;
            let sdf = crate::envfield::compute_sdf(&grid);
            let bound = TaskModels::bind(&set.cvae, &set.validity, &set.distance, &grid, &sdf)?;
            plan_lcbirrt(&query, &bound, &cfg)?
        }
    };
    let sound = if result.solved() {
        let spec = scenario.constraint_spec(&problem.c);
        validate_path(
            &scenario.system,
            &spec,
            &problem.env,
            &problem.q_init,
            &problem.q_goal,
            &result.path,
            cfg.edge_resolution,
        )?
        .is_ok()
    } else {
        true
    };
    Ok(BenchRecord {
        problem_id: problem.id,
        planner: planner.id(),
        status: result.status,
        total_s: result.timings.total,
        search_s: result.timings.path_search,
        check_s: result.timings.path_check,
        replans: result.counters.replans,
        path_length: result.path_length(),
        sound,
    })
}

/// Runs every planner on the identical problem set. Runs are independent and
/// fan out over a worker pool (capped by `threads`); per-run seeds derive
/// from the benchmark seed, the problem and the planner, so the records are
/// identical at any thread count. Records come back ordered by problem, then
/// planner.
pub fn run_benchmark(
    scenario: &ScenarioDef,
    problems: &[ProblemInstance],
    planners: &[PlannerChoice],
    models: Option<&ModelSet>,
    base_cfg: &PlannerConfig,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<BenchRecord>> {
    if planners.iter().any(PlannerChoice::needs_models) && models.is_none() {
        return Err(Error::config("benchmark includes planners that need models"));
    }
    let jobs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|p| (0..planners.len()).map(move |k| (p, k)))
        .collect();
    let run = || -> Result<Vec<BenchRecord>> {
        jobs.par_iter()
            .map(|&(p, k)| {
                let problem = &problems[p];
                let planner = planners[k];
                let run_seed =
                    derive_seed(seed, ((problem.id as u64) << 8) ^ (k as u64 + 1));
                run_single(scenario, problem, planner, models, base_cfg, run_seed)
            })
            .collect()
    };
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::config(e.to_string()))?;
            pool.install(run)
        }
        None => run(),
    }
}

/// Reads the benchmark thread cap from the environment.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
}

/// Aggregate metrics for one planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub runs: usize,
    pub success_rate: f64,
    /// Mean/std over all runs; timed-out runs contribute their whole budget.
    pub mean_time: f64,
    pub std_time: f64,
    /// Mean/std over solved runs only.
    pub solved_mean_time: f64,
    pub solved_std_time: f64,
    pub mean_search: f64,
    pub mean_check: f64,
    pub mean_replans: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

/// Per-planner aggregation. Planners are keyed by id and reported in sorted
/// order, so the summary is invariant to record permutation.
pub fn summarize(records: &[BenchRecord]) -> Result<Vec<PlannerSummary>> {
    if records.is_empty() {
        return Err(Error::Dataset("no records to summarize".into()));
    }
    let mut ids: Vec<String> = records.iter().map(|r| r.planner.clone()).collect();
    ids.sort();
    ids.dedup();
    let summaries = ids
        .into_iter()
        .map(|planner| {
            let rows: Vec<&BenchRecord> =
                records.iter().filter(|r| r.planner == planner).collect();
            let times: Vec<f64> = rows.iter().map(|r| r.total_s).collect();
            let solved_times: Vec<f64> = rows
                .iter()
                .filter(|r| r.status == PlanStatus::Solved)
                .map(|r| r.total_s)
                .collect();
            let (mean_time, std_time) = mean_std(&times);
            let (solved_mean_time, solved_std_time) = mean_std(&solved_times);
            let n = rows.len() as f64;
            PlannerSummary {
                planner,
                runs: rows.len(),
                success_rate: solved_times.len() as f64 / n,
                mean_time,
                std_time,
                solved_mean_time,
                solved_std_time,
                mean_search: rows.iter().map(|r| r.search_s).sum::<f64>() / n,
                mean_check: rows.iter().map(|r| r.check_s).sum::<f64>() / n,
                mean_replans: rows.iter().map(|r| r.replans as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(summaries)
}

/// Stable content hash of a problem set, used to assert that every planner
/// saw byte-identical instances.
pub fn problem_set_digest(problems: &[ProblemInstance]) -> u64 {
    let bytes = serde_json::to_vec(problems).expect("problems serialize");
    // FNV-1a.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(planner: &str, solved: bool, total: f64) -> BenchRecord {
        BenchRecord {
            problem_id: 0,
            planner: planner.into(),
            status: if solved {
                PlanStatus::Solved
            } else {
                PlanStatus::Timeout
            },
            total_s: total,
            search_s: 0.6 * total,
            check_s: 0.4 * total,
            replans: 2,
            path_length: 1.0,
            sound: true,
        }
    }

    #[test]
    fn summarize_all_timeouts() {
        let records = vec![record("lcbirrt", false, 60.0), record("lcbirrt", false, 60.0)];
        let s = &summarize(&records).unwrap()[0];
        assert_eq!(s.success_rate, 0.0);
        assert_eq!(s.mean_time, 60.0);
        assert!(s.solved_mean_time.is_nan());
    }

    #[test]
    fn summarize_single_solved_record() {
        let records = vec![record("cbirrt2", true, 2.5)];
        let s = &summarize(&records).unwrap()[0];
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.mean_time, 2.5);
        assert_eq!(s.std_time, 0.0);
        assert_eq!(s.solved_std_time, 0.0);
    }

    #[test]
    fn summarize_matches_hand_computation() {
        let records = vec![
            record("lcbirrt", true, 1.0),
            record("lcbirrt", true, 3.0),
            record("lcbirrt", false, 60.0),
        ];
        let s = &summarize(&records).unwrap()[0];
        assert!((s.success_rate - 2.0 / 3.0).abs() < 1e-12);
        let mean = (1.0 + 3.0 + 60.0) / 3.0;
        assert!((s.mean_time - mean).abs() < 1e-12);
        let var = ((1.0f64 - mean).powi(2) + (3.0 - mean).powi(2) + (60.0 - mean).powi(2)) / 3.0;
        assert!((s.std_time - var.sqrt()).abs() < 1e-12);
        assert!((s.solved_mean_time - 2.0).abs() < 1e-12);
        assert!((s.solved_std_time - 1.0).abs() < 1e-12);
        assert!((s.mean_replans - 2.0).abs() < 1e-12);
    }

    #[test]
    fn summarize_is_permutation_invariant() {
        let mut records = vec![
            record("lcbirrt", true, 1.0),
            record("cbirrt2", true, 4.0),
            record("lcbirrt", false, 60.0),
            record("cbirrt2", true, 2.0),
        ];
        let a = summarize(&records).unwrap();
        records.reverse();
        records.swap(0, 2);
        let b = summarize(&records).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summarize_rejects_empty_input() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn planner_choice_parses_and_prints() {
        assert_eq!(
            "cbirrt2".parse::<PlannerChoice>().unwrap(),
            PlannerChoice::Cbirrt2
        );
        assert_eq!(
            "lcbirrt-lpo:5".parse::<PlannerChoice>().unwrap(),
            PlannerChoice::LcbirrtLpo(5)
        );
        assert_eq!(
            "lcbirrt-lpo".parse::<PlannerChoice>().unwrap(),
            PlannerChoice::LcbirrtLpo(10)
        );
        assert_eq!(
            "lcbirrt-lpo:5".parse::<PlannerChoice>().unwrap().id(),
            "lcbirrt-lpo:5"
        );
        assert!("rrtstar".parse::<PlannerChoice>().is_err());
        assert!("lcbirrt-lpo:0".parse::<PlannerChoice>().is_err());
    }

    #[test]
    fn problem_digest_is_stable_and_content_sensitive() {
        let scenario = crate::scenario::ScenarioDef::new(ScenarioId::S1);
        let a = gen_problems(&scenario, 2, 5).unwrap();
        let b = gen_problems(&scenario, 2, 5).unwrap();
        assert_eq!(problem_set_digest(&a), problem_set_digest(&b));
        let c = gen_problems(&scenario, 2, 6).unwrap();
        assert_ne!(problem_set_digest(&a), problem_set_digest(&c));
    }
}
