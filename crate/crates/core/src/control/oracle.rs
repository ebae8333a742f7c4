//! Exhaustive search over binary release grids on tiny instances.

use crate::bathtub::{simulate, Cohort, CohortState, NetworkParams};
use crate::error::{domain, EvacError, Result};
use serde::Serialize;
use std::collections::HashMap;

/// Deterministic instance with `slots.len()` decision times and `masses.len()` distance bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceInstance {
    pub masses: Vec<f64>,
    /// Trip length of each bin, increasing, km.
    pub lengths: Vec<f64>,
    /// Decision times, increasing, starting at 0, h.
    pub slots: Vec<f64>,
    pub network: NetworkParams,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// `control[s][j]`: bin `j` admitted at or before slot `s`.
    pub control: Vec<Vec<bool>>,
    /// First slot at which each bin is admitted; `None` if never.
    pub release_slot: Vec<Option<usize>>,
    pub delay: f64,
    pub enumerated: usize,
    pub distinct_schedules: usize,
    pub threshold_in_x: bool,
    pub monotone: bool,
    pub single_switch: bool,
}

impl BruteForceInstance {
    fn validate(&self) -> Result<()> {
        let (nt, nx) = (self.slots.len(), self.masses.len());
        if nt == 0 || nx == 0 || self.lengths.len() != nx {
            return domain("instance needs slots and matching bin masses and lengths");
        }
        if nt * nx > 20 {
            return Err(EvacError::TooLarge(format!("{nt}x{nx} grid has 2^{} controls", nt * nx)));
        }
        if self.slots[0] != 0.0 || self.slots.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("slots must start at 0 and increase");
        }
        if self.lengths.windows(2).any(|w| !(w[1] > w[0])) || self.lengths[0] <= 0.0 {
            return domain("bin lengths must be positive and increasing");
        }
        if self.slots[nt - 1] > self.horizon {
            return domain("slots must lie within the horizon");
        }
        Ok(())
    }

    /// Total delay when bin `j` enters at slot `release[j]` (never if `None`).
    pub fn delay(&self, release: &[Option<usize>]) -> Result<f64> {
        let schedule: Vec<(f64, Vec<Cohort>)> = self
            .slots
            .iter()
            .enumerate()
            .map(|(s, &t)| {
                let cs = (0..self.masses.len())
                    .filter(|&j| release[j] == Some(s))
                    .map(|j| Cohort::new(self.masses[j], self.lengths[j]))
                    .collect();
                (t, cs)
            })
            .collect();
        let waiting = |t: f64| -> f64 {
            (0..self.masses.len())
                .filter(|&j| release[j].map_or(true, |s| self.slots[s] > t))
                .map(|j| self.masses[j])
                .sum()
        };
        Ok(simulate(CohortState::new(), &self.network, &schedule, waiting, self.horizon)?.delay)
    }
}

/// Enumerates every binary grid `u(slot, bin)`; a bin counts as admitted from its first 1 on.
pub fn brute_force_optimal(inst: &BruteForceInstance) -> Result<BruteForceResult> {
    inst.validate()?;
    let (nt, nx) = (inst.slots.len(), inst.masses.len());
    let total = 1usize << (nt * nx);
    let mut cache: HashMap<Vec<Option<usize>>, f64> = HashMap::new();
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    for code in 0..total {
        let release: Vec<Option<usize>> = (0..nx)
            .map(|j| (0..nt).find(|&s| code >> (s * nx + j) & 1 == 1))
            .collect();
        let d = match cache.get(&release) {
            Some(d) => *d,
            None => {
                let d = inst.delay(&release)?;
                cache.insert(release.clone(), d);
                d
            }
        };
        let rank = |r: &[Option<usize>]| r.iter().map(|s| s.unwrap_or(nt)).collect::<Vec<_>>();
        let replace = match &best {
            None => true,
            Some((bd, br)) => d < *bd - 1e-12 * bd.abs() || ((d - bd).abs() <= 1e-12 * bd.abs() && rank(&release) < rank(br)),
        };
        if replace {
            best = Some((d, release));
        }
    }
    let (delay, release_slot) = best.expect("at least one control");
    let control: Vec<Vec<bool>> = (0..nt)
        .map(|s| release_slot.iter().map(|r| r.is_some_and(|v| v <= s)).collect())
        .collect();
    let threshold_in_x = control.iter().all(|row| row.windows(2).all(|w| w[0] || !w[1]));
    let key = |r: &Option<usize>| r.unwrap_or(usize::MAX);
    let monotone = release_slot.windows(2).all(|w| key(&w[0]) <= key(&w[1]));
    let mut distinct: Vec<usize> = release_slot.iter().map(key).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let single_switch = distinct.len() == 1 || (distinct.len() == 2 && distinct[0] == 0);
    Ok(BruteForceResult {
        control,
        release_slot,
        delay,
        enumerated: total,
        distinct_schedules: cache.len(),
        threshold_in_x,
        monotone,
        single_switch,
    })
}
