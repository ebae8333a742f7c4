//! Release policies, Monte Carlo policy evaluation and the optimizers built on it.

mod diagnostics;
mod mpc;
mod optimize;
mod oracle;

pub use diagnostics::{costate_trajectory, service_rate, ControlDiagnostics, CostateTrajectory};
pub use mpc::{mpc_run, MpcConfig, MpcReport, MpcStep};
pub use optimize::{optimize_bangbang, GridPoint, OptimizeResult, SearchConfig};
pub use oracle::{brute_force_optimal, BruteForceInstance, BruteForceResult};

use crate::bathtub::{CohortState, NetworkParams, TraceSink};
use crate::demand::{DemandNoise, DemandSurface, GbmParams, ReleaseRule};
use crate::error::{domain, Result};
use crate::risk::{self, DelaySamples};
use rayon::prelude::*;
use serde::Serialize;

/// Release everything up to `cutoff` km at once, the rest at `switch_time` h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BangBangPolicy {
    pub cutoff: f64,
    pub switch_time: f64,
}

impl BangBangPolicy {
    pub fn new(cutoff: f64, switch_time: f64) -> Result<Self> {
        if !(cutoff >= 0.0) || !(switch_time >= 0.0) {
            return domain(format!("invalid policy ({cutoff}, {switch_time})"));
        }
        Ok(Self { cutoff, switch_time })
    }

    /// Everything released at time zero.
    pub fn no_control() -> Self {
        Self { cutoff: f64::INFINITY, switch_time: 0.0 }
    }
}

impl ReleaseRule for BangBangPolicy {
    fn release_time(&self, _bin: usize, upper: f64) -> f64 {
        if upper <= self.cutoff + 1e-9 {
            0.0
        } else {
            self.switch_time
        }
    }
}

/// Non-decreasing release time per demand bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReleaseTimeMap {
    times: Vec<f64>,
}

impl ReleaseTimeMap {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !(*t >= 0.0)) {
            return domain("release times must be non-negative");
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return domain("release times must be non-decreasing in trip length");
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

impl ReleaseRule for ReleaseTimeMap {
    fn release_time(&self, bin: usize, _upper: f64) -> f64 {
        self.times[bin]
    }
}

/// Seed of child stream `index` derived from `parent` (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Would-be mass of every bin at the start of every step, as if nothing were released.
///
/// Waiting bins evolve independently of the policy, so one path per scenario
/// serves every policy evaluated on it.
#[derive(Debug, Clone)]
struct DemandPath {
    bins: usize,
    mass: Vec<f64>,
}

impl DemandPath {
    fn generate(surface: &DemandSurface, gbm: &GbmParams, steps: &[f64], seed: u64) -> Self {
        let bins = surface.bins();
        let mut s = surface.clone();
        let mut noise = DemandNoise::new(seed, bins);
        let mut mass = Vec::with_capacity(bins * (steps.len() + 1));
        mass.extend_from_slice(s.masses());
        for &h in steps {
            s.evolve(gbm, h, &mut noise);
            mass.extend_from_slice(s.masses());
        }
        Self { bins, mass }
    }

    #[inline]
    fn at(&self, step: usize, bin: usize) -> f64 {
        self.mass[step * self.bins + bin]
    }
}

/// Monte Carlo scenarios sharing demand, network and horizon.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub seeds: Vec<u64>,
    pub gbm: GbmParams,
    pub surface: DemandSurface,
    pub network: NetworkParams,
    /// Horizon, h.
    pub horizon: f64,
    pub initial: CohortState,
    /// Upper end of the cutoff search range, km.
    pub max_cutoff: f64,
    steps: Vec<f64>,
    paths: Vec<DemandPath>,
}

impl ScenarioSet {
    pub fn new(
        seeds: Vec<u64>,
        gbm: GbmParams,
        surface: DemandSurface,
        network: NetworkParams,
        horizon: f64,
        initial: CohortState,
    ) -> Result<Self> {
        if seeds.is_empty() {
            return domain("scenario set must contain at least one seed");
        }
        if !(horizon > 0.0) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        gbm.validate()?;
        network.validate()?;
        let steps = step_lengths(horizon, network.dt);
        let max_cutoff = surface.edges()[surface.bins()];
        // Deterministic demand needs a single path.
        let paths = if gbm.is_deterministic() {
            vec![DemandPath::generate(&surface, &gbm, &steps, 0)]
        } else {
            seeds.par_iter().map(|&s| DemandPath::generate(&surface, &gbm, &steps, s)).collect()
        };
        Ok(Self { seeds, gbm, surface, network, horizon, initial, max_cutoff, steps, paths })
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    fn path(&self, scenario: usize) -> &DemandPath {
        if self.paths.len() == 1 {
            &self.paths[0]
        } else {
            &self.paths[scenario]
        }
    }

    /// Delay (veh·h) of one scenario under `rule`, optionally recording the trace.
    pub fn run(&self, rule: &impl ReleaseRule, scenario: usize, sink: &mut impl TraceSink) -> Result<f64> {
        let path = self.path(scenario);
        let surface = &self.surface;
        let bins = surface.bins();
        let upper = &surface.edges()[1..];
        let release: Vec<f64> = (0..bins).map(|k| rule.release_time(k, upper[k])).collect();
        let mut released = vec![false; bins];
        let mut state = self.initial.clone();
        let start = state.delay();
        let dt = self.network.dt;
        let mut inflow = Vec::new();
        for (j, &h) in self.steps.iter().enumerate() {
            let t = j as f64 * dt;
            let eps = 1e-12 * t.max(1.0);
            inflow.clear();
            let mut waiting = 0.0;
            let mut pending = false;
            for k in 0..bins {
                if released[k] {
                    continue;
                }
                let m = path.at(j, k);
                if release[k] <= t + eps {
                    released[k] = true;
                    if m > 0.0 {
                        inflow.push(crate::bathtub::Cohort::new(m, surface.midpoint(k)));
                    }
                } else if m > 0.0 {
                    waiting += m;
                    pending = true;
                }
            }
            state.step(&self.network, &inflow, h, waiting, sink)?;
            if !pending && state.is_empty() {
                break;
            }
        }
        Ok(state.delay() - start)
    }

    /// Delay of one scenario evolving the demand surface step by step.
    ///
    /// Reference implementation of [`ScenarioSet::run`]; both give identical results.
    pub fn run_online(&self, rule: &impl ReleaseRule, scenario: usize, sink: &mut impl TraceSink) -> Result<f64> {
        let seed = if self.gbm.is_deterministic() { 0 } else { self.seeds[scenario] };
        let mut surface = self.surface.clone();
        let mut noise = DemandNoise::new(seed, surface.bins());
        let mut state = self.initial.clone();
        let start = state.delay();
        for (j, &h) in self.steps.iter().enumerate() {
            let t = j as f64 * self.network.dt;
            let inflow = surface.release(rule, t);
            state.step(&self.network, &inflow, h, surface.total(), sink)?;
            surface.evolve(&self.gbm, h, &mut noise);
            if surface.all_drained() && state.is_empty() {
                break;
            }
        }
        Ok(state.delay() - start)
    }
}

fn step_lengths(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    (0..n).map(|j| dt.min(horizon - j as f64 * dt)).collect()
}

/// Objective value and the per-scenario delays behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub mean: f64,
    pub avar: f64,
    pub samples: DelaySamples,
}

/// Risk-averse objective of `rule` over every scenario of `set`.
pub fn evaluate_policy(rule: &(impl ReleaseRule + Sync), set: &ScenarioSet, weight: f64, alpha: f64) -> Result<Evaluation> {
    let values: Vec<f64> = (0..set.len())
        .into_par_iter()
        .map(|i| set.run(rule, i, &mut ()))
        .collect::<Result<Vec<_>>>()?;
    let objective = risk::objective(&values, weight, alpha)?;
    let avar = risk::avar(&values, alpha)?;
    let samples = DelaySamples::new(values, set.seeds.clone())?;
    Ok(Evaluation { objective, mean: samples.mean(), avar, samples })
}
