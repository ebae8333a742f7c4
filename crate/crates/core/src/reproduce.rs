//! Reproduction targets: each runs a study end to end and grades it with explicit checks.

use crate::bathtub::{Cohort, CohortState, NetworkParams};
use crate::control::{brute_force_optimal, mpc_run, optimize_bangbang, BangBangPolicy, BruteForceInstance, BruteForceResult, MpcReport};
use crate::error::{domain, EvacError, Result};
use crate::nfd::SpeedDensityModel;
use crate::scenario::ScenarioConfig;
use serde::Serialize;

/// One graded quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: format!("{target} ± {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn holds(name: &str, value: f64, expected: &str, passed: bool) -> Self {
        Self { name: name.into(), value, expected: expected.into(), passed }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Counterexample,
    Tables,
    MpcFigures,
    Propositions,
}

impl std::str::FromStr for Target {
    type Err = EvacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counterexample" => Ok(Target::Counterexample),
            "tables" => Ok(Target::Tables),
            "mpc-figures" => Ok(Target::MpcFigures),
            "propositions" => Ok(Target::Propositions),
            other => domain(format!(
                "unknown target `{other}` (expected counterexample, tables, mpc-figures or propositions)"
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Releasing cohorts one after another on the unit Greenshields network.

/// Release times and clearance times of cohorts released in stages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StagedRun {
    pub release: Vec<f64>,
    /// Time at which cumulative completions first reach the stage's cumulative mass.
    pub clear: Vec<f64>,
    /// Time-integrated count of vehicles not yet arrived (waiting or travelling).
    pub delay: f64,
}

/// Releases stage `k` once `trigger_k` vehicles have completed, advancing exactly between events.
pub fn staged_release(stages: &[(f64, Vec<Cohort>)], params: &NetworkParams) -> Result<StagedRun> {
    let mass: Vec<f64> = stages.iter().map(|(_, c)| c.iter().map(|c| c.count).sum()).collect();
    let cumulative: Vec<f64> = mass.iter().scan(0.0, |acc, m| {
        *acc += m;
        Some(*acc)
    }).collect();
    let tol = 1e-12;
    let mut state = CohortState::new();
    let mut release = vec![f64::NAN; stages.len()];
    let mut clear = vec![f64::NAN; stages.len()];
    let mut next = 0;
    loop {
        while next < stages.len() && state.completed() >= stages[next].0 - tol {
            release[next] = state.clock();
            state.inject(&stages[next].1)?;
            next += 1;
        }
        for (k, c) in cumulative.iter().enumerate() {
            if clear[k].is_nan() && k < next && state.completed() >= c - tol {
                clear[k] = state.clock();
            }
        }
        if next == stages.len() && state.is_empty() {
            break;
        }
        if state.is_empty() {
            return domain(format!("stage {next} waits for completions that can no longer happen"));
        }
        if !(params.speed(state.active()) > 0.0) {
            return domain(format!("network jammed with {} vehicles", state.active()));
        }
        let waiting: f64 = mass[next..].iter().sum();
        state.advance_to_event(params, f64::MAX, waiting);
    }
    Ok(StagedRun { release, clear, delay: state.delay() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub lengths: [f64; 3],
    pub travel_times: [f64; 3],
    pub delay: f64,
    pub perturbation: f64,
    pub perturbed_delay: f64,
    /// Finite-difference derivative of the delay in the perturbation size.
    pub derivative: f64,
    pub checks: Vec<Check>,
}

/// Unit lane length, `V = 1 - rho`; time steps are event-driven so `dt` is only a cap.
pub fn unit_greenshields() -> NetworkParams {
    NetworkParams {
        lane_km: 1.0,
        model: SpeedDensityModel::Linear { free_flow_speed: 1.0, jam_density: 1.0 },
        exit_capacity: 1.0,
        dt: f64::MAX,
    }
}

/// Three equal cohorts at 1, 10 and 19 km released one after another, and the same
/// schedule with `eps` vehicles of the middle cohort moved into the first release.
pub fn counterexample(eps: f64) -> Result<CounterexampleReport> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return domain(format!("perturbation must lie in (0, 1/3), got {eps}"));
    }
    let third = 1.0 / 3.0;
    let lengths = [1.0, 10.0, 19.0];
    let params = unit_greenshields();
    let base = staged_release(
        &[
            (0.0, vec![Cohort::new(third, lengths[0])]),
            (third, vec![Cohort::new(third, lengths[1])]),
            (2.0 * third, vec![Cohort::new(third, lengths[2])]),
        ],
        &params,
    )?;
    let perturbed = staged_release(
        &[
            (0.0, vec![Cohort::new(third, lengths[0]), Cohort::new(eps, lengths[1])]),
            (third, vec![Cohort::new(third - eps, lengths[1])]),
            (2.0 * third, vec![Cohort::new(third, lengths[2])]),
        ],
        &params,
    )?;
    let travel_times = [0, 1, 2].map(|k| base.clear[k] - base.release[k]);
    let derivative = (perturbed.delay - base.delay) / eps;
    let checks = vec![
        Check::within("short cohort travel time", travel_times[0], 1.5, 1e-6),
        Check::within("medium cohort travel time", travel_times[1], 15.0, 1e-6),
        Check::within("long cohort travel time", travel_times[2], 28.5, 1e-6),
        Check::within("delay derivative", derivative, 6.75, 0.05 * 6.75),
    ];
    Ok(CounterexampleReport {
        lengths,
        travel_times,
        delay: base.delay,
        perturbation: eps,
        perturbed_delay: perturbed.delay,
        derivative,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Risk-averse bang-bang optimum over the (alpha, mixture) grid.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub alpha: f64,
    pub lambda_mix: f64,
    pub policy: BangBangPolicy,
    pub objective: f64,
    pub no_control_objective: f64,
    pub improvement: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablesReport {
    pub scenarios: usize,
    pub cells: Vec<TableCell>,
    pub mean_improvement: f64,
    pub checks: Vec<Check>,
}

/// Smallest relative improvement over no control demanded in every cell.
pub const MIN_IMPROVEMENT: f64 = 0.15;

/// Optimizes every `(alpha, lambda_mix)` cell of the configuration's grids.
pub fn tables(cfg: &ScenarioConfig) -> Result<TablesReport> {
    let lambdas = &cfg.distribution.lambda_grid;
    let mixtures = cfg.mixture_tables(lambdas)?;
    let search = cfg.search_config();
    let mut cells = Vec::new();
    for &lambda_mix in lambdas {
        let dist = mixtures.distribution(lambda_mix)?;
        let set = cfg.scenario_set(&dist)?;
        for &alpha in &cfg.risk.alpha_grid {
            let res = optimize_bangbang(&set, cfg.risk.weight, alpha, &search)?;
            cells.push(TableCell {
                alpha,
                lambda_mix,
                policy: res.policy,
                objective: res.objective,
                no_control_objective: res.no_control_objective,
                improvement: res.improvement(),
                evaluations: res.evaluations,
            });
        }
    }
    if cells.is_empty() {
        return domain("the alpha and mixture grids must not be empty");
    }
    cells.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(b.lambda_mix.total_cmp(&a.lambda_mix)));
    let mean_improvement = cells.iter().map(|c| c.improvement).sum::<f64>() / cells.len() as f64;
    let worst = cells.iter().map(|c| c.improvement).fold(f64::INFINITY, f64::min);
    let checks = vec![Check::holds(
        "smallest improvement over no control",
        worst,
        &format!(">= {MIN_IMPROVEMENT}"),
        worst >= MIN_IMPROVEMENT,
    )];
    Ok(TablesReport { scenarios: cfg.scenarios, cells, mean_improvement, checks })
}

// ---------------------------------------------------------------------------
// Closed-loop trajectories at two noise levels.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcRun {
    pub volatility: f64,
    pub report: MpcReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcFiguresReport {
    pub runs: Vec<MpcRun>,
    /// First update time (min) at which the averaged switch time is zero, per run.
    pub release_complete_min: Vec<Option<f64>>,
    /// Largest pointwise gap between the first two runs relative to the larger maximum.
    pub switch_gap: f64,
    pub cutoff_gap: f64,
    pub checks: Vec<Check>,
}

/// Slack on the non-increasing switch-time check, as a share of its maximum.
pub const SWITCH_SLACK: f64 = 0.02;
/// Latest allowed completion of the release, min.
pub const RELEASE_DEADLINE_MIN: f64 = 30.0;
/// Largest allowed relative gap between noise levels.
pub const NOISE_GAP: f64 = 0.15;

fn worst_increase(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// MPC runs at each volatility in `volatilities`, graded on trajectory shape.
pub fn mpc_figures(cfg: &ScenarioConfig, volatilities: &[f64]) -> Result<MpcFiguresReport> {
    if volatilities.is_empty() {
        return domain("need at least one volatility");
    }
    let dist = cfg.distribution(cfg.distribution.lambda_mix)?;
    let surface = cfg.surface(&dist)?;
    let network = cfg.network_params()?;
    let mpc = cfg.mpc_config();
    let mut runs = Vec::new();
    for &volatility in volatilities {
        let gbm = crate::demand::GbmParams { drift: cfg.demand.drift, volatility };
        let report = mpc_run(&CohortState::new(), &surface, &gbm, &network, &mpc)?;
        runs.push(MpcRun { volatility, report });
    }
    let mut checks = Vec::new();
    let mut release_complete_min = Vec::new();
    for run in &runs {
        let t: Vec<f64> = run.report.steps.iter().map(|s| s.switch_in).collect();
        let x: Vec<f64> = run.report.steps.iter().map(|s| s.cutoff).collect();
        let t_max = t.iter().cloned().fold(0.0, f64::max);
        let rise = worst_increase(&t);
        let tag = format!("sigma={}", run.volatility);
        checks.push(Check::holds(
            &format!("{tag}: largest rise of averaged switch time (h)"),
            rise,
            &format!("<= {SWITCH_SLACK} x max"),
            rise <= SWITCH_SLACK * t_max + 1e-12,
        ));
        let done = run.report.steps.iter().find(|s| s.switch_in <= 1e-12).map(|s| s.t * 60.0);
        release_complete_min.push(done);
        checks.push(Check::holds(
            &format!("{tag}: release complete (min)"),
            done.unwrap_or(f64::INFINITY),
            &format!("<= {RELEASE_DEADLINE_MIN}"),
            done.is_some_and(|m| m <= RELEASE_DEADLINE_MIN),
        ));
        let drop = worst_increase(&x.iter().map(|v| -v).collect::<Vec<_>>());
        checks.push(Check::holds(
            &format!("{tag}: largest drop of averaged cutoff (km)"),
            drop,
            "<= 0",
            drop <= 1e-9,
        ));
        checks.push(Check::holds(
            &format!("{tag}: failed realizations"),
            run.report.failed as f64,
            "0",
            run.report.failed == 0,
        ));
    }
    let (mut switch_gap, mut cutoff_gap) = (0.0, 0.0);
    if runs.len() >= 2 {
        let pick = |r: &MpcRun, f: fn(&crate::control::MpcStep) -> f64| r.report.steps.iter().map(f).collect::<Vec<_>>();
        switch_gap = relative_gap(&pick(&runs[0], |s| s.switch_in), &pick(&runs[1], |s| s.switch_in));
        cutoff_gap = relative_gap(&pick(&runs[0], |s| s.cutoff), &pick(&runs[1], |s| s.cutoff));
        checks.push(Check::holds("switch-time gap between noise levels", switch_gap, &format!("< {NOISE_GAP}"), switch_gap < NOISE_GAP));
        checks.push(Check::holds("cutoff gap between noise levels", cutoff_gap, &format!("< {NOISE_GAP}"), cutoff_gap < NOISE_GAP));
    }
    Ok(MpcFiguresReport { runs, release_complete_min, switch_gap, cutoff_gap, checks })
}

// ---------------------------------------------------------------------------
// Exhaustive structure checks on a small congested instance.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionsReport {
    pub result: BruteForceResult,
    pub checks: Vec<Check>,
}

/// Four equal bins at 1..4 km on the unit Greenshields network, four release slots one hour apart.
///
/// Trip lengths are uniform on a lattice (increasing hazard) and 0.8 vehicles on a
/// unit lane length keeps the network on the congested branch when everything is released.
pub fn proposition_instance() -> BruteForceInstance {
    BruteForceInstance {
        masses: vec![0.2; 4],
        lengths: vec![1.0, 2.0, 3.0, 4.0],
        slots: vec![0.0, 1.0, 2.0, 3.0],
        network: NetworkParams { dt: 1.0, ..unit_greenshields() },
        horizon: 100.0,
    }
}

pub fn propositions() -> Result<PropositionsReport> {
    let result = brute_force_optimal(&proposition_instance())?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let checks = vec![
        Check::holds("controls enumerated", result.enumerated as f64, "65536", result.enumerated == 65_536),
        Check::holds("optimum is a threshold in trip length", flag(result.threshold_in_x), "1", result.threshold_in_x),
        Check::holds("optimum is monotone in time", flag(result.monotone), "1", result.monotone),
        Check::holds("optimum switches once", flag(result.single_switch), "1", result.single_switch),
    ];
    Ok(PropositionsReport { result, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_release_delay_by_hand() {
        // Phases of 1.5, 15 and 28.5 h with 1, 2/3 and 1/3 vehicles not yet arrived.
        let r = counterexample(1e-3).unwrap();
        assert!((r.delay - 21.0).abs() < 1e-9, "{}", r.delay);
        assert!((r.travel_times[2] - 28.5).abs() < 1e-9);
    }

    #[test]
    fn perturbation_bounds() {
        assert!(counterexample(0.0).is_err());
        assert!(counterexample(0.5).is_err());
    }

    #[test]
    fn staged_release_reports_stuck_stages() {
        let stages = [(0.0, vec![Cohort::new(0.5, 1.0)]), (5.0, vec![Cohort::new(0.5, 1.0)])];
        assert!(staged_release(&stages, &unit_greenshields()).is_err());
        let jammed = [(0.0, vec![Cohort::new(1.0, 1.0)])];
        assert!(staged_release(&jammed, &unit_greenshields()).is_err());
    }

    #[test]
    fn targets_parse() {
        assert_eq!("mpc-figures".parse::<Target>().unwrap(), Target::MpcFigures);
        assert!("figures".parse::<Target>().is_err());
    }

    #[test]
    fn gaps() {
        assert_eq!(worst_increase(&[3.0, 2.0, 2.5, 0.0]), 0.5);
        assert!((relative_gap(&[1.0, 2.0], &[1.0, 1.8]) - 0.1).abs() < 1e-12);
    }
}
