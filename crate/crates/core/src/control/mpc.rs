//! Receding-horizon gating: re-optimize the bang-bang policy at every update.

use super::optimize::optimize_from;
use super::{derive_seed, BangBangPolicy, ScenarioSet, SearchConfig};
use crate::bathtub::{CohortState, NetworkParams};
use crate::demand::{DemandNoise, DemandSurface, GbmParams};
use crate::error::{domain, Result};
use crate::risk;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    /// Time between re-optimizations, h.
    pub update_step: f64,
    /// Look-ahead of each inner problem, h; `None` uses the remaining horizon.
    pub lookahead: Option<f64>,
    /// Total simulated time, h.
    pub horizon: f64,
    pub realizations: usize,
    /// Demand samples per inner optimization.
    pub inner_scenarios: usize,
    pub search: SearchConfig,
    pub weight: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl MpcConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            update_step: 1.0 / 60.0,
            lookahead: None,
            horizon,
            realizations: 200,
            inner_scenarios: 10,
            search: SearchConfig { grid_cutoff: 10, grid_switch: 10, polls: 30, max_evaluations: 400 },
            weight: 1.0 / 3.0,
            alpha: 0.8,
            seed,
        }
    }
}

/// Averaged state of the closed loop at one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpcStep {
    pub k: usize,
    /// Update time, h.
    pub t: f64,
    /// Planned time until the switch, h; zero once everything is released.
    pub switch_in: f64,
    /// Largest trip length admitted so far or by the current plan, km.
    pub cutoff: f64,
    pub active: f64,
    pub waiting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcReport {
    pub steps: Vec<MpcStep>,
    pub realizations: usize,
    pub failed: usize,
    /// Realized delay per successful realization, veh·h.
    pub realized_delay: Vec<f64>,
    pub realized_objective: f64,
    /// Decision and predicted objective of the first update of realization 0.
    pub first_policy: Option<BangBangPolicy>,
    pub first_objective: Option<f64>,
}

struct Realization {
    steps: Vec<MpcStep>,
    delay: f64,
    first: (BangBangPolicy, f64),
}

fn run_realization(
    r: usize,
    cfg: &MpcConfig,
    gbm: &GbmParams,
    surface0: &DemandSurface,
    initial: &CohortState,
    network: &NetworkParams,
) -> Result<Realization> {
    let seed = derive_seed(cfg.seed, r as u64);
    let mut surface = surface0.clone();
    let mut state = initial.clone();
    let mut noise = DemandNoise::new(seed, surface.bins());
    let d_max = surface.edges()[surface.bins()];
    let dt = network.dt;
    let per_update = (cfg.update_step / dt).round().max(1.0) as usize;
    let updates = (cfg.horizon / cfg.update_step - 1e-9).ceil() as usize;
    let mut steps = Vec::with_capacity(updates);
    let mut plan: Option<BangBangPolicy> = None;
    let mut admitted: f64 = 0.0;
    let mut first = None;
    let mut clock = 0.0;
    for k in 0..updates {
        let t_k = k as f64 * cfg.update_step;
        let waiting = surface.total();
        let policy = if surface.all_drained() {
            None
        } else {
            let remaining = cfg.horizon - t_k;
            let look = cfg.lookahead.unwrap_or(remaining).min(remaining);
            let inner_seed = derive_seed(seed, 1 + k as u64);
            let seeds = (0..cfg.inner_scenarios as u64).map(|j| derive_seed(inner_seed, j)).collect();
            let set = ScenarioSet::new(seeds, *gbm, surface.clone(), *network, look, state.clone())?;
            let carry: Vec<BangBangPolicy> = plan
                .map(|p| BangBangPolicy { cutoff: p.cutoff, switch_time: (p.switch_time - cfg.update_step).max(0.0) })
                .into_iter()
                .collect();
            let res = optimize_from(&set, cfg.weight, cfg.alpha, &cfg.search, &carry)?;
            if first.is_none() {
                first = Some((res.policy, res.objective));
            }
            Some(res.policy)
        };
        let (switch_in, cutoff) = match policy {
            Some(p) if p.switch_time > 0.0 => {
                admitted = admitted.max(p.cutoff);
                (p.switch_time, admitted)
            }
            _ => {
                admitted = d_max;
                (0.0, d_max)
            }
        };
        steps.push(MpcStep { k, t: t_k, switch_in, cutoff, active: state.active(), waiting });
        plan = policy;
        for j in 0..per_update {
            let left = cfg.horizon - clock;
            if left <= 1e-12 {
                break;
            }
            let h = dt.min(left);
            let inflow = match &policy {
                Some(p) => surface.release(p, j as f64 * dt),
                None => Vec::new(),
            };
            state.step(network, &inflow, h, surface.total(), &mut ())?;
            surface.evolve(gbm, h, &mut noise);
            clock += h;
        }
    }
    let first = first.unwrap_or((BangBangPolicy::no_control(), 0.0));
    Ok(Realization { steps, delay: state.delay() - initial.delay(), first })
}

/// Closed-loop runs over independent demand realizations, averaged per update.
pub fn mpc_run(
    initial: &CohortState,
    surface: &DemandSurface,
    gbm: &GbmParams,
    network: &NetworkParams,
    cfg: &MpcConfig,
) -> Result<MpcReport> {
    if !(cfg.update_step > 0.0) || cfg.lookahead.is_some_and(|h| h < cfg.update_step) {
        return domain("update step must be positive and no longer than the look-ahead");
    }
    if cfg.realizations == 0 || cfg.inner_scenarios == 0 {
        return domain("need at least one realization and one inner scenario");
    }
    gbm.validate()?;
    network.validate()?;
    let runs: Vec<Result<Realization>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| run_realization(r, cfg, gbm, surface, initial, network))
        .collect();
    let first = runs.first().and_then(|r| r.as_ref().ok()).map(|r| r.first);
    let ok: Vec<Realization> = runs.into_iter().filter_map(|r| r.ok()).collect();
    let failed = cfg.realizations - ok.len();
    if ok.is_empty() {
        return domain("every realization failed");
    }
    let n = ok.len() as f64;
    let updates = ok[0].steps.len();
    let steps = (0..updates)
        .map(|k| {
            let avg = |f: &dyn Fn(&MpcStep) -> f64| ok.iter().map(|r| f(&r.steps[k])).sum::<f64>() / n;
            MpcStep {
                k,
                t: ok[0].steps[k].t,
                switch_in: avg(&|s| s.switch_in),
                cutoff: avg(&|s| s.cutoff),
                active: avg(&|s| s.active),
                waiting: avg(&|s| s.waiting),
            }
        })
        .collect();
    let realized_delay: Vec<f64> = ok.iter().map(|r| r.delay).collect();
    let realized_objective = risk::objective(&realized_delay, cfg.weight, cfg.alpha)?;
    Ok(MpcReport {
        steps,
        realizations: ok.len(),
        failed,
        realized_delay,
        realized_objective,
        first_policy: first.map(|f| f.0),
        first_objective: first.map(|f| f.1),
    })
}
