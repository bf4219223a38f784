use latent_cmp::bench::*;
use latent_cmp::data::*;
use latent_cmp::nn::*;
use latent_cmp::planner::PlannerConfig;
use latent_cmp::robot::Configuration;
use latent_cmp::scenario::*;
use std::time::Instant;

fn main() {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or("s2".into()).parse::<ScenarioId>().unwrap();
    let n_envs: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(32);
    let per_env: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(80);
    let d_epochs: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(18);
    let scenario = ScenarioDef::new(id);
    let seed = 2026u64 ^ (id.tag() as u64) << 32;
    let t0 = Instant::now();
    let manifold = gen_manifold_dataset(&scenario, 8_000, seed).unwrap();
    let qs: Vec<Configuration> = manifold.iter().map(|m| m.q.clone()).collect();
    let cs: Vec<Vec<f64>> = manifold.iter().map(|m| m.c.clone()).collect();
    let (cvae, rep) = train_cvae(&qs, &cs, scenario.latent_dim(), scenario.q_norm(), scenario.c_norm(),
        &TrainConfig { epochs: 36, seed, ..TrainConfig::default() }).unwrap();
    eprintln!("[{:?}] cvae trained val_mse={:.5}", t0.elapsed(), rep.validation_recon_mse);

    // prior decode->project rate
    use rand::SeedableRng; use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut ok = 0;
    for _ in 0..400 {
        let c = scenario.sample_c(&mut rng);
        let z: Vec<f64> = (0..scenario.latent_dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let spec = scenario.constraint_spec(&c).with_max_iters(50);
        if latent_cmp::constraint::project(&spec, &scenario.system, &cvae.decode(&z, &c)).unwrap().converged { ok += 1; }
    }
    eprintln!("prior decode->project: {ok}/400");

    let envs = gen_environments(&scenario, n_envs, seed + 1).unwrap();
    let vs = gen_validity_dataset(&envs, &cvae, &scenario, per_env, seed + 2).unwrap();
    eprintln!("[{:?}] validity labels: {} ({}% positive)", t0.elapsed(), vs.len(),
        100 * vs.iter().filter(|v| v.valid).count() / vs.len());
    let grids: Vec<_> = envs.iter().map(|e| &e.grid).collect();
    let vrefs: Vec<_> = vs.iter().map(|s| ValiditySampleRef { env_idx: s.env_id as usize, c: &s.c, z: &s.z, valid: s.valid }).collect();
    let pair_cfg = TrainConfig { epochs: 18, seed: seed + 3, ..TrainConfig::default() };
    let (validity, vrep) = train_validity(&grids, &vrefs, scenario.c_norm(), scenario.latent_dim(), &pair_cfg).unwrap();
    eprintln!("[{:?}] validity acc={:.3} pos={:.2}", t0.elapsed(), vrep.holdout_accuracy, vrep.positive_fraction);

    let (ds, warn) = gen_distance_dataset(&envs, &cvae, &scenario, per_env, seed + 4).unwrap();
    eprintln!("[{:?}] distance labels: {} ({} warnings)", t0.elapsed(), ds.len(), warn.len());
    let sdfs: Vec<_> = envs.iter().map(|e| &e.sdf).collect();
    let drefs: Vec<_> = ds.iter().map(|s| DistanceSampleRef { env_idx: s.env_id as usize, c: &s.c, z: &s.z, d_min: s.d_min }).collect();
    let d_cfg = TrainConfig { epochs: d_epochs, seed: seed + 3, ..TrainConfig::default() };
    let (distance, drep) = train_distance(&sdfs, &drefs, scenario.c_norm(), scenario.latent_dim(), scenario.sdf_scale(), &d_cfg).unwrap();
    eprintln!("[{:?}] distance rmse={:.4} sign={:.3}", t0.elapsed(), drep.holdout_rmse, drep.holdout_sign_agreement);

    let models = ModelSet { cvae, validity, distance };
    let problems = gen_problems(&scenario, 15, 2026 + id.tag() as u64).unwrap();
    eprintln!("[{:?}] problems ready", t0.elapsed());
    let planners = [PlannerChoice::Lcbirrt, PlannerChoice::LcbirrtLpo(10), PlannerChoice::LcbirrtLpo(2)];
    let records = run_benchmark(&scenario, &problems, &planners, Some(&models), &PlannerConfig::default(), 2026, None).unwrap();
    eprintln!("[{:?}] bench done", t0.elapsed());
    for s in summarize(&records).unwrap() {
        eprintln!("{:>16}: success {:.2} time {:.2}±{:.2} search {:.3} check {:.3} replans {:.2}",
            s.planner, s.success_rate, s.mean_time, s.std_time, s.mean_search, s.mean_check, s.mean_replans);
    }
    let unsound = records.iter().filter(|r| !r.sound).count();
    eprintln!("unsound: {unsound}");
}
