//! Coarse grid plus compass pattern search over bang-bang policies.

use super::{evaluate_policy, BangBangPolicy, ScenarioSet};
use crate::error::{EvacError, Result};
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub grid_cutoff: usize,
    pub grid_switch: usize,
    /// Maximum number of pattern-search polls after the grid.
    pub polls: usize,
    /// Cap on distinct objective evaluations, grid included.
    pub max_evaluations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { grid_cutoff: 20, grid_switch: 20, polls: 60, max_evaluations: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub cutoff: f64,
    pub switch_time: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub policy: BangBangPolicy,
    pub objective: f64,
    /// Objective of releasing everything at once on the same scenarios.
    pub no_control_objective: f64,
    /// Distinct simulated evaluations.
    pub evaluations: usize,
    pub grid: Vec<GridPoint>,
}

impl OptimizeResult {
    /// Relative objective reduction over no control.
    pub fn improvement(&self) -> f64 {
        if self.no_control_objective > 0.0 {
            1.0 - self.objective / self.no_control_objective
        } else {
            0.0
        }
    }
}

/// Candidate ordering: lower objective, then earlier switch, then wider cutoff.
fn better(a: &GridPoint, b: &GridPoint) -> bool {
    let scale = a.objective.abs().max(b.objective.abs()).max(1e-300);
    let diff = a.objective - b.objective;
    if diff.abs() > 1e-12 * scale {
        return diff < 0.0;
    }
    if a.switch_time != b.switch_time {
        return a.switch_time < b.switch_time;
    }
    a.cutoff > b.cutoff
}

struct Evaluator<'a> {
    set: &'a ScenarioSet,
    weight: f64,
    alpha: f64,
    cache: HashMap<(usize, usize), f64>,
    budget: usize,
}

impl Evaluator<'_> {
    /// Policies releasing the same bins at the same step are indistinguishable.
    fn key(&self, p: &BangBangPolicy) -> (usize, usize) {
        let edges = self.set.surface.edges();
        let early = edges[1..].iter().take_while(|u| **u <= p.cutoff + 1e-9).count();
        let dt = self.set.network.dt;
        let step = (p.switch_time / dt - 1e-9).ceil().max(0.0) as usize;
        (early, step)
    }

    fn eval(&mut self, p: BangBangPolicy) -> Result<Option<GridPoint>> {
        let key = self.key(&p);
        let objective = match self.cache.get(&key) {
            Some(v) => *v,
            None => {
                if self.cache.len() >= self.budget {
                    return Ok(None);
                }
                let v = evaluate_policy(&p, self.set, self.weight, self.alpha)?.objective;
                self.cache.insert(key, v);
                v
            }
        };
        Ok(Some(GridPoint { cutoff: p.cutoff, switch_time: p.switch_time, objective }))
    }
}

/// Best bang-bang policy over `[0, max_cutoff] x [0, horizon]`.
pub fn optimize_bangbang(set: &ScenarioSet, weight: f64, alpha: f64, cfg: &SearchConfig) -> Result<OptimizeResult> {
    optimize_from(set, weight, alpha, cfg, &[])
}

pub(crate) fn optimize_from(
    set: &ScenarioSet,
    weight: f64,
    alpha: f64,
    cfg: &SearchConfig,
    extra: &[BangBangPolicy],
) -> Result<OptimizeResult> {
    if cfg.grid_cutoff < 2 || cfg.grid_switch < 2 {
        return Err(EvacError::InvalidConfig(vec!["search grid needs at least 2x2 points".into()]));
    }
    let x_hi = set.max_cutoff;
    let t_hi = set.horizon;
    let xs = crate::quad::linspace(0.0, x_hi, cfg.grid_cutoff);
    let ts = crate::quad::linspace(0.0, t_hi, cfg.grid_switch);
    let mut ev = Evaluator { set, weight, alpha, cache: HashMap::new(), budget: cfg.max_evaluations };
    let mut grid = Vec::with_capacity(xs.len() * ts.len());
    for &t in &ts {
        for &x in &xs {
            let Some(g) = ev.eval(BangBangPolicy { cutoff: x, switch_time: t })? else {
                return Err(EvacError::Budget(format!(
                    "{} evaluations do not cover the {}x{} grid",
                    cfg.max_evaluations, cfg.grid_cutoff, cfg.grid_switch
                )));
            };
            grid.push(g);
        }
    }
    let no_control = ev.eval(BangBangPolicy { cutoff: x_hi, switch_time: 0.0 })?.expect("cached").objective;
    let mut best = grid[0];
    for g in &grid[1..] {
        if better(g, &best) {
            best = *g;
        }
    }
    for p in extra {
        let p = BangBangPolicy { cutoff: p.cutoff.clamp(0.0, x_hi), switch_time: p.switch_time.clamp(0.0, t_hi) };
        if let Some(g) = ev.eval(p)? {
            if better(&g, &best) {
                best = g;
            }
        }
    }

    // Compass search; steps shrink to one bin width and one time step.
    let min_x = set.surface.edges()[1] - set.surface.edges()[0];
    let min_t = set.network.dt;
    let mut sx = 0.5 * (xs[1] - xs[0]);
    let mut st = 0.5 * (ts[1] - ts[0]);
    'search: for _ in 0..cfg.polls {
        let mut moved = false;
        let mut cand = best;
        for (dx, dt) in [(sx, 0.0), (-sx, 0.0), (0.0, st), (0.0, -st)] {
            let p = BangBangPolicy {
                cutoff: (best.cutoff + dx).clamp(0.0, x_hi),
                switch_time: (best.switch_time + dt).clamp(0.0, t_hi),
            };
            let Some(g) = ev.eval(p)? else { break 'search };
            if better(&g, &cand) && g.objective < best.objective {
                cand = g;
                moved = true;
            }
        }
        if moved {
            best = cand;
        } else if sx <= min_x && st <= min_t {
            break;
        } else {
            sx = (0.5 * sx).max(min_x);
            st = (0.5 * st).max(min_t);
        }
    }
    Ok(OptimizeResult {
        policy: BangBangPolicy { cutoff: best.cutoff, switch_time: best.switch_time },
        objective: best.objective,
        no_control_objective: no_control,
        evaluations: ev.cache.len(),
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathtub::{CohortState, NetworkParams};
    use crate::control::derive_seed;
    use crate::demand::{DemandSurface, GbmParams};
    use crate::nfd::SpeedDensityModel;

    fn set(masses: Vec<f64>, lane_km: f64) -> ScenarioSet {
        let n = masses.len();
        let surface = DemandSurface::from_masses(crate::quad::linspace(0.0, 4.0, n + 1), masses).unwrap();
        let network = NetworkParams {
            lane_km,
            model: SpeedDensityModel::triangular_from_capacity(50.0, 1500.0, 120.0).unwrap(),
            exit_capacity: 1e6,
            dt: 1.0 / 360.0,
        };
        let seeds = (0..8).map(|i| derive_seed(1, i)).collect();
        ScenarioSet::new(seeds, GbmParams { drift: 0.0, volatility: 0.05 }, surface, network, 0.5, CohortState::new()).unwrap()
    }

    #[test]
    fn zero_demand_picks_earliest_widest() {
        let s = set(vec![0.0; 8], 10.0);
        let r = optimize_bangbang(&s, 1.0 / 3.0, 0.8, &SearchConfig::default()).unwrap();
        assert_eq!(r.policy.switch_time, 0.0);
        assert_eq!(r.policy.cutoff, s.max_cutoff);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn free_flow_prefers_immediate_release() {
        let s = set(vec![0.01; 8], 1000.0);
        let r = optimize_bangbang(&s, 1.0 / 3.0, 0.8, &SearchConfig::default()).unwrap();
        // Exhaustive check over the grid: nothing beats releasing at once.
        assert!(r.grid.iter().all(|g| g.objective >= r.objective - 1e-12));
        assert!((r.objective - r.no_control_objective).abs() < 1e-12 * r.objective);
        assert_eq!(r.policy.switch_time, 0.0);
    }

    #[test]
    fn never_worse_than_no_control() {
        let s = set(vec![300.0; 8], 5.0);
        let r = optimize_bangbang(&s, 1.0 / 3.0, 0.8, &SearchConfig { grid_cutoff: 6, grid_switch: 6, polls: 20, max_evaluations: 500 }).unwrap();
        assert!(r.objective <= r.no_control_objective);
    }

    #[test]
    fn budget_smaller_than_grid_is_an_error() {
        let s = set(vec![300.0; 8], 5.0);
        let cfg = SearchConfig { grid_cutoff: 10, grid_switch: 10, polls: 5, max_evaluations: 20 };
        assert!(matches!(optimize_bangbang(&s, 0.3, 0.8, &cfg), Err(EvacError::Budget(_))));
    }
}
