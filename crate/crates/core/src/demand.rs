//! Un-released demand held at the origins, binned by trip length.
//!
//! Each bin's mass follows a geometric Brownian motion until a release rule
//! drains the whole bin into the network as one cohort.

use crate::bathtub::Cohort;
use crate::error::{domain, Result};
use crate::geometry::TripLengthDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    /// Drift per hour.
    pub drift: f64,
    /// Volatility per square-root hour, before the bin-width scaling.
    pub volatility: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.volatility >= 0.0) || !self.drift.is_finite() {
            return domain(format!("invalid demand noise parameters {self:?}"));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.volatility == 0.0
    }
}

/// One independent normal stream per bin.
///
/// Keeping streams per bin means the `j`-th draw of bin `k` is the same under
/// every release policy, whichever other bins are still waiting.
#[derive(Debug, Clone)]
pub struct DemandNoise {
    streams: Vec<ChaCha8Rng>,
}

impl DemandNoise {
    pub fn new(seed: u64, bins: usize) -> Self {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let streams = (0..bins as u64)
            .map(|k| {
                let mut r = base.clone();
                r.set_stream(k);
                r
            })
            .collect();
        Self { streams }
    }

    #[inline]
    pub fn normal(&mut self, bin: usize) -> f64 {
        StandardNormal.sample(&mut self.streams[bin])
    }
}

/// Decides when each demand bin is admitted to the network.
pub trait ReleaseRule {
    /// Release time (h) of the bin `[lower, upper)` with index `bin`; infinite means never.
    fn release_time(&self, bin: usize, upper: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandSurface {
    edges: Vec<f64>,
    mass: Vec<f64>,
    drained: Vec<bool>,
    clock: f64,
}

/// `bins` equal-width bins covering `[0, d_max]`.
pub fn uniform_edges(d_max: f64, bins: usize) -> Vec<f64> {
    crate::quad::linspace(0.0, d_max, bins + 1)
}

/// Spreads `total` vehicles over the bins according to `dist`.
pub fn init_surface(total: f64, dist: &TripLengthDistribution, edges: &[f64]) -> Result<DemandSurface> {
    if !(total >= 0.0) {
        return domain(format!("total demand must be non-negative, got {total}"));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("bin edges must be strictly increasing with at least one bin");
    }
    if edges[0] > dist.d[0] + 1e-12 || edges[edges.len() - 1] < dist.max_distance() * (1.0 - 1e-9) {
        return domain(format!(
            "bins [{}, {}] do not cover the distribution support [{}, {}]",
            edges[0],
            edges[edges.len() - 1],
            dist.d[0],
            dist.max_distance()
        ));
    }
    let mass: Vec<f64> = edges
        .windows(2)
        .map(|w| total * (dist.cdf_at(w[1]) - dist.cdf_at(w[0])).max(0.0))
        .collect();
    let n = mass.len();
    Ok(DemandSurface { edges: edges.to_vec(), mass, drained: vec![false; n], clock: 0.0 })
}

impl DemandSurface {
    /// Surface with explicit masses per bin.
    pub fn from_masses(edges: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if edges.len() != mass.len() + 1 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("need strictly increasing edges, one more than masses");
        }
        if mass.iter().any(|m| !(*m >= 0.0)) {
            return domain("bin masses must be non-negative");
        }
        let n = mass.len();
        Ok(Self { edges, mass, drained: vec![false; n], clock: 0.0 })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn is_drained(&self, bin: usize) -> bool {
        self.drained[bin]
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    /// Vehicles still waiting to be released.
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn all_drained(&self) -> bool {
        self.drained.iter().zip(&self.mass).all(|(d, m)| *d || *m == 0.0)
    }

    /// Advances every waiting bin by one log-normal step of length `dt` hours.
    pub fn evolve(&mut self, p: &GbmParams, dt: f64, noise: &mut DemandNoise) {
        self.clock += dt;
        if p.volatility == 0.0 {
            if p.drift != 0.0 {
                let g = (p.drift * dt).exp();
                self.mass.iter_mut().for_each(|m| *m *= g);
            }
            return;
        }
        let sqrt_dt = dt.sqrt();
        for k in 0..self.mass.len() {
            if self.drained[k] || self.mass[k] == 0.0 {
                continue;
            }
            let s = p.volatility / (self.edges[k + 1] - self.edges[k]).sqrt();
            let z = noise.normal(k);
            self.mass[k] *= ((p.drift - 0.5 * s * s) * dt + s * sqrt_dt * z).exp();
        }
    }

    /// Drains every bin whose release time has come, returning one cohort per bin.
    pub fn release(&mut self, rule: &impl ReleaseRule, t: f64) -> Vec<Cohort> {
        let mut out = Vec::new();
        let eps = 1e-12 * t.abs().max(1.0);
        for k in 0..self.mass.len() {
            if self.drained[k] || rule.release_time(k, self.edges[k + 1]) > t + eps {
                continue;
            }
            self.drained[k] = true;
            if self.mass[k] > 0.0 {
                out.push(Cohort::new(self.mass[k], self.midpoint(k)));
            }
            self.mass[k] = 0.0;
        }
        out
    }

    /// Earliest release time among bins still waiting.
    pub fn next_release(&self, rule: &impl ReleaseRule) -> f64 {
        (0..self.mass.len())
            .filter(|&k| !self.drained[k] && self.mass[k] > 0.0)
            .map(|k| rule.release_time(k, self.edges[k + 1]))
            .fold(f64::INFINITY, f64::min)
    }
}
