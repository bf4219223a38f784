//! Command-line surface: dataset generation, model training, single-query
//! planning, benchmarking and report rendering.
//!
//! Exit codes: 0 success, 1 planning timeout (`plan` only),
//! 2 configuration error, 3 I/O error.

use clap::{Parser, Subcommand};
use latent_cmp::bench::{
    gen_problems, run_benchmark, threads_from_env, ModelSet, PlannerChoice, ProblemInstance,
};
use latent_cmp::data::format::{read_dataset, write_dataset};
use latent_cmp::data::{
    gen_distance_dataset, gen_environments, gen_manifold_dataset, gen_validity_dataset,
    validity_balance_warning, Dataset, DEFAULT_ENV_COUNT, DEFAULT_MANIFOLD_COUNT, DEFAULT_PER_ENV,
};
use latent_cmp::error::Error;
use latent_cmp::nn::weights::{
    load_cvae, load_distance, load_validity, save_cvae, save_distance, save_validity,
};
use latent_cmp::nn::{
    train_cvae, train_distance, train_validity, DistanceSampleRef, TrainConfig, ValiditySampleRef,
};
use latent_cmp::planner::{plan_cbirrt2, plan_lcbirrt, PlanQuery, PlannerConfig, TaskModels};
use latent_cmp::report::{emit_report, records_from_csv};
use latent_cmp::robot::Configuration;
use latent_cmp::scenario::{ScenarioDef, ScenarioId};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub const CVAE_FILE: &str = "cvae.cmpw";
pub const VALIDITY_FILE: &str = "validity.cmpw";
pub const DISTANCE_FILE: &str = "distance.cmpw";
pub const DATASET_FILE: &str = "dataset.cmpd";

#[derive(Parser)]
#[command(name = "latent-cmp", about = "Constrained motion planning on learned latent manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario dataset (manifold samples, environments, labels)
    /// and the autoencoder used for labeling.
    GenData {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENV_COUNT)]
        envs: usize,
        #[arg(long, default_value_t = DEFAULT_MANIFOLD_COUNT)]
        manifold: usize,
        #[arg(long, default_value_t = DEFAULT_PER_ENV)]
        per_env: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one of the three models from a generated dataset.
    Train {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value_t = 0.003)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plan a single problem from a JSON problem file.
    Plan {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        planner: String,
        #[arg(long)]
        interval: Option<usize>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Benchmark a planner set on an identical seeded problem set.
    Bench {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long, value_delimiter = ',')]
        planners: Vec<String>,
        #[arg(long, default_value_t = 50)]
        problems: usize,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-render summary and chart from an existing results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format(_) => 3,
        _ => 2,
    }
}

fn load_models(dir: &Path, scenario: &ScenarioDef) -> Result<ModelSet, Error> {
    let cvae = load_cvae(
        &dir.join(CVAE_FILE),
        scenario.latent_dim(),
        scenario.q_norm(),
        scenario.c_norm(),
    )?;
    let validity = load_validity(
        &dir.join(VALIDITY_FILE),
        scenario.latent_dim(),
        scenario.c_norm(),
    )?;
    let distance = load_distance(
        &dir.join(DISTANCE_FILE),
        scenario.latent_dim(),
        scenario.c_norm(),
        scenario.sdf_scale(),
    )?;
    Ok(ModelSet {
        cvae,
        validity,
        distance,
    })
}

fn cmd_gen_data(
    scenario_id: ScenarioId,
    out: &Path,
    envs: usize,
    manifold: usize,
    per_env: usize,
    seed: u64,
) -> Result<(), Error> {
    let scenario = ScenarioDef::new(scenario_id);
    std::fs::create_dir_all(out)?;
    eprintln!("sampling {manifold} on-manifold configurations...");
    let manifold_samples = gen_manifold_dataset(&scenario, manifold, seed)?;
    eprintln!("training the autoencoder used for labeling...");
    let qs: Vec<Configuration> = manifold_samples.iter().map(|m| m.q.clone()).collect();
    let cs: Vec<Vec<f64>> = manifold_samples.iter().map(|m| m.c.clone()).collect();
    let cfg = TrainConfig::default().with_seed(seed);
    let (cvae, report) = train_cvae(
        &qs,
        &cs,
        scenario.latent_dim(),
        scenario.q_norm(),
        scenario.c_norm(),
        &cfg,
    )?;
    eprintln!(
        "  final train loss {:.5}, validation recon mse {:.5}",
        report.final_train_loss, report.validation_recon_mse
    );
    save_cvae(&out.join(CVAE_FILE), &cvae)?;
    eprintln!("sampling {envs} environments...");
    let environments = gen_environments(&scenario, envs, seed)?;
    eprintln!("labeling validity ({per_env} per environment)...");
    let validity = gen_validity_dataset(&environments, &cvae, &scenario, per_env, seed)?;
    if let Some(w) = validity_balance_warning(&validity) {
        eprintln!("warning: {w}");
    }
    eprintln!("labeling distances ({per_env} per environment)...");
    let (distance, warnings) =
        gen_distance_dataset(&environments, &cvae, &scenario, per_env, seed)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let set = Dataset {
        scenario: scenario_id,
        environments,
        manifold: manifold_samples,
        validity,
        distance,
    };
    let path = out.join(DATASET_FILE);
    write_dataset(&path, &set)?;
    println!(
        "wrote {} ({} envs, {} manifold, {} validity, {} distance) and {}",
        path.display(),
        set.environments.len(),
        set.manifold.len(),
        set.validity.len(),
        set.distance.len(),
        CVAE_FILE
    );
    Ok(())
}

fn cmd_train(
    scenario_id: ScenarioId,
    model: &str,
    data: &Path,
    out: &Path,
    cfg: TrainConfig,
) -> Result<(), Error> {
    let scenario = ScenarioDef::new(scenario_id);
    let set = read_dataset(&data.join(DATASET_FILE))?;
    if set.scenario != scenario_id {
        return Err(Error::config(format!(
            "dataset is for scenario {}, not {}",
            set.scenario, scenario_id
        )));
    }
    match model {
        "cvae" => {
            let qs: Vec<Configuration> = set.manifold.iter().map(|m| m.q.clone()).collect();
            let cs: Vec<Vec<f64>> = set.manifold.iter().map(|m| m.c.clone()).collect();
            let (model, report) = train_cvae(
                &qs,
                &cs,
                scenario.latent_dim(),
                scenario.q_norm(),
                scenario.c_norm(),
                &cfg,
            )?;
            println!(
                "cvae: train loss {:.5}, validation recon mse {:.5}",
                report.final_train_loss, report.validation_recon_mse
            );
            save_cvae(out, &model)?;
        }
        "validity" => {
            let grids: Vec<&latent_cmp::envfield::OccupancyGrid> =
                set.environments.iter().map(|e| &e.grid).collect();
            let refs: Vec<ValiditySampleRef> = set
                .validity
                .iter()
                .map(|s| ValiditySampleRef {
                    env_idx: s.env_id as usize,
                    c: &s.c,
                    z: &s.z,
                    valid: s.valid,
                })
                .collect();
            let (model, report) =
                train_validity(&grids, &refs, scenario.c_norm(), scenario.latent_dim(), &cfg)?;
            println!(
                "validity: holdout accuracy {:.3} ({:.1}% positive labels)",
                report.holdout_accuracy,
                100.0 * report.positive_fraction
            );
            save_validity(out, &model)?;
        }
        "distance" => {
            let sdfs: Vec<&latent_cmp::envfield::SignedDistanceField> =
                set.environments.iter().map(|e| &e.sdf).collect();
            let refs: Vec<DistanceSampleRef> = set
                .distance
                .iter()
                .map(|s| DistanceSampleRef {
                    env_idx: s.env_id as usize,
                    c: &s.c,
                    z: &s.z,
                    d_min: s.d_min,
                })
                .collect();
            let (model, report) = train_distance(
                &sdfs,
                &refs,
                scenario.c_norm(),
                scenario.latent_dim(),
                scenario.sdf_scale(),
                &cfg,
            )?;
            println!(
                "distance: holdout rmse {:.4} m, sign agreement {:.3}",
                report.holdout_rmse, report.holdout_sign_agreement
            );
            save_distance(out, &model)?;
        }
        other => {
            return Err(Error::config(format!(
                "unknown model '{other}' (expected cvae, validity or distance)"
            )))
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Returns true when the plan solved within the limit.
fn cmd_plan(
    scenario_id: ScenarioId,
    problem_path: &Path,
    planner: &str,
    interval: Option<usize>,
    models_dir: Option<&Path>,
    time_limit: f64,
    seed: u64,
) -> Result<bool, Error> {
    let scenario = ScenarioDef::new(scenario_id);
    let text = std::fs::read_to_string(problem_path)?;
    let problem: ProblemInstance =
        serde_json::from_str(&text).map_err(|e| Error::format(e.to_string()))?;
    if problem.scenario != scenario_id {
        return Err(Error::config(format!(
            "problem file is for scenario {}, not {}",
            problem.scenario, scenario_id
        )));
    }
    let mut choice: PlannerChoice = planner.parse()?;
    if let (PlannerChoice::LcbirrtLpo(_), Some(iv)) = (&choice, interval) {
        choice = PlannerChoice::LcbirrtLpo(iv);
    }
    let cfg = PlannerConfig {
        time_limit,
        seed,
        interval: choice.interval(),
        ..PlannerConfig::default()
    };
    let query = PlanQuery {
        scenario: &scenario,
        c: problem.c.clone(),
        q_init: &problem.q_init,
        q_goal: &problem.q_goal,
        env: &problem.env,
    };
    let result = match choice {
        PlannerChoice::Cbirrt2 => plan_cbirrt2(&query, &cfg)?,
        _ => {
            let dir = models_dir
                .ok_or_else(|| Error::config("latent planners need --models <dir>"))?;
            let set = load_models(dir, &scenario)?;
            let grid = scenario.make_grid(&problem.env)?;
            let sdf = latent_cmp::envfield::compute_sdf(&grid);
            let bound = TaskModels::bind(&set.cvae, &set.validity, &set.distance, &grid, &sdf)?;
            plan_lcbirrt(&query, &bound, &cfg)?
        }
    };
    let solved = result.solved();
    println!(
        "{}",
        serde_json::to_string_pretty(&result).map_err(|e| Error::format(e.to_string()))?
    );
    Ok(solved)
}

fn cmd_bench(
    scenario_id: ScenarioId,
    planner_names: &[String],
    problem_count: usize,
    models_dir: &Path,
    out: &Path,
    time_limit: f64,
    seed: u64,
) -> Result<(), Error> {
    let scenario = ScenarioDef::new(scenario_id);
    let planners: Vec<PlannerChoice> = planner_names
        .iter()
        .map(|p| p.parse())
        .collect::<Result<_, _>>()?;
    if planners.is_empty() {
        return Err(Error::config("no planners given"));
    }
    let models = if planners.iter().any(PlannerChoice::needs_models) {
        Some(load_models(models_dir, &scenario)?)
    } else {
        None
    };
    eprintln!("generating {problem_count} problems...");
    let problems = gen_problems(&scenario, problem_count, seed)?;
    std::fs::create_dir_all(out)?;
    // Keep the instances next to the results so single problems can be
    // replayed with `plan`.
    std::fs::write(
        out.join("problems.json"),
        serde_json::to_string_pretty(&problems).map_err(|e| Error::format(e.to_string()))?,
    )?;
    let cfg = PlannerConfig {
        time_limit,
        ..PlannerConfig::default()
    };
    eprintln!(
        "running {} planner(s) x {} problems...",
        planners.len(),
        problems.len()
    );
    let records = run_benchmark(
        &scenario,
        &problems,
        &planners,
        models.as_ref(),
        &cfg,
        seed,
        threads_from_env(),
    )?;
    let unsound = records.iter().filter(|r| !r.sound).count();
    if unsound > 0 {
        eprintln!("warning: {unsound} solved runs failed the independent path validator");
    }
    let files = emit_report(&records, out)?;
    let summaries = latent_cmp::bench::summarize(&records)?;
    print!("{}", latent_cmp::report::summary_markdown(&summaries));
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_report(input: &Path, out: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(input)?;
    let records = records_from_csv(&text)?;
    let files = emit_report(&records, out)?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData {
            scenario,
            out,
            envs,
            manifold,
            per_env,
            seed,
        } => {
            cmd_gen_data(scenario, &out, envs, manifold, per_env, seed)?;
            Ok(0)
        }
        Command::Train {
            scenario,
            model,
            data,
            out,
            epochs,
            lr,
            batch,
            seed,
        } => {
            let cfg = TrainConfig {
                epochs,
                learning_rate: lr,
                batch_size: batch,
                seed,
                ..TrainConfig::default()
            };
            cmd_train(scenario, &model, &data, &out, cfg)?;
            Ok(0)
        }
        Command::Plan {
            scenario,
            problem,
            planner,
            interval,
            models,
            time_limit,
            seed,
        } => {
            let solved = cmd_plan(
                scenario,
                &problem,
                &planner,
                interval,
                models.as_deref(),
                time_limit,
                seed,
            )?;
            Ok(if solved { 0 } else { 1 })
        }
        Command::Bench {
            scenario,
            planners,
            problems,
            models,
            out,
            time_limit,
            seed,
        } => {
            cmd_bench(
                scenario, &planners, problems, &models, &out, time_limit, seed,
            )?;
            Ok(0)
        }
        Command::Report { input, out } => {
            cmd_report(&input, &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
