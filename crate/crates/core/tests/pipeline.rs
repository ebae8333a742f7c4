use std::path::Path;

use evac_core::bathtub::CohortState;
use evac_core::control::{evaluate_policy, mpc_run, optimize_bangbang, BangBangPolicy, MpcConfig, ScenarioSet};
use evac_core::demand::GbmParams;
use evac_core::scenario::ScenarioConfig;

fn shipped(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn shipped_amager_file_matches_builtin_defaults() {
    let cfg = ScenarioConfig::from_toml(&shipped("amager.toml")).unwrap();
    assert_eq!(cfg, ScenarioConfig::amager());
    assert_eq!(cfg.hash(), ScenarioConfig::amager().hash());
}

#[test]
fn shipped_dumbbell_file_builds_a_distribution() {
    let cfg = ScenarioConfig::from_toml(&shipped("dumbbell.toml")).unwrap();
    let dist = cfg.distribution(1.0).unwrap();
    assert!((dist.cdf.last().unwrap() - 1.0).abs() < 1e-12);
    assert!(cfg.distribution(0.5).is_err());
}

fn small_amager() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::amager();
    cfg.scenarios = 8;
    cfg.search.grid_cutoff = 6;
    cfg.search.grid_switch = 6;
    cfg.search.polls = 10;
    cfg.search.max_evaluations = 100;
    cfg
}

#[test]
fn optimum_beats_no_control_on_amager() {
    let cfg = small_amager();
    let set = cfg.scenario_set(&cfg.distribution(1.0).unwrap()).unwrap();
    let best = optimize_bangbang(&set, cfg.risk.weight, cfg.risk.alpha, &cfg.search_config()).unwrap();
    assert!(best.objective < best.no_control_objective);
    let again = evaluate_policy(&best.policy, &set, cfg.risk.weight, cfg.risk.alpha).unwrap();
    assert_eq!(again.objective, best.objective);
    let none = evaluate_policy(&BangBangPolicy::no_control(), &set, cfg.risk.weight, cfg.risk.alpha).unwrap();
    assert_eq!(none.objective, best.no_control_objective);
}

#[test]
fn thread_count_does_not_change_objectives() {
    let cfg = small_amager();
    let set = cfg.scenario_set(&cfg.distribution(1.0).unwrap()).unwrap();
    let policy = BangBangPolicy::new(4.0, 0.05).unwrap();
    let eval = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| evaluate_policy(&policy, &set, cfg.risk.weight, cfg.risk.alpha).unwrap())
    };
    let (one, three) = (eval(1), eval(3));
    assert_eq!(one.samples.values, three.samples.values);
    assert_eq!(one.objective.to_bits(), three.objective.to_bits());
}

#[test]
fn noiseless_closed_loop_starts_from_the_open_loop_optimum() {
    let cfg = small_amager();
    let dist = cfg.distribution(1.0).unwrap();
    let surface = cfg.surface(&dist).unwrap();
    let network = cfg.network_params().unwrap();
    let still = GbmParams { drift: 0.0, volatility: 0.0 };
    let horizon = cfg.network.horizon_h;
    let mut mpc = MpcConfig::new(horizon, cfg.seed);
    mpc.realizations = 1;
    mpc.inner_scenarios = 1;
    mpc.update_step = 5.0 / 60.0;
    mpc.search = cfg.search_config();
    let report = mpc_run(&CohortState::new(), &surface, &still, &network, &mpc).unwrap();

    let set = ScenarioSet::new(vec![1], still, surface, network, horizon, CohortState::new()).unwrap();
    let open = optimize_bangbang(&set, mpc.weight, mpc.alpha, &mpc.search).unwrap();
    assert_eq!(report.first_policy, Some(open.policy));
    assert!((report.first_objective.unwrap() - open.objective).abs() <= 1e-9 * open.objective);
    // Without noise the plan carried forward is always available, so feedback cannot do worse.
    assert!(report.realized_objective <= open.objective * (1.0 + 1e-9), "{} > {}", report.realized_objective, open.objective);
    assert_eq!(report.failed, 0);
}

#[test]
fn overrides_change_the_hash_but_not_the_base() {
    let base = ScenarioConfig::amager();
    let tweaked = base.with_overrides(&["demand.volatility=0.1".to_string()]).unwrap();
    assert_eq!(tweaked.demand.volatility, 0.1);
    assert_ne!(tweaked.hash(), base.hash());
    assert_eq!(base, ScenarioConfig::amager());
}
