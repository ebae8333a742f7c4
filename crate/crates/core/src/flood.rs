//! Storm-surge front on a sloped dry bed and the static flood-risk field.
//!
//! Hydraulics run in SI units (m, s); the risk field is exposed in km.

use crate::error::{domain, Result};
use crate::geometry::{PlanarDensity, Point};
use crate::quad::interp;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurgeParams {
    /// Still-water depth of the surge, m.
    pub still_water_depth: f64,
    /// Ground elevation at the far (western) rim, m.
    pub max_elevation: f64,
    /// Disk radius, m.
    pub radius: f64,
}

impl SurgeParams {
    pub fn new(still_water_depth: f64, max_elevation: f64, radius_km: f64) -> Result<Self> {
        if !(still_water_depth > 0.0 && max_elevation > 0.0 && radius_km > 0.0) {
            return domain("surge depth, elevation and radius must be positive");
        }
        Ok(Self { still_water_depth, max_elevation, radius: radius_km * 1000.0 })
    }

    /// Ground slope rising from the shoreline at `x = R` to the far rim.
    pub fn slope(&self) -> f64 {
        self.max_elevation / (2.0 * self.radius)
    }

    fn celerity(&self) -> f64 {
        (GRAVITY * self.still_water_depth).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalMode {
    /// Closed-form arrival-time expression.
    ClosedForm,
    /// Numerical inverse of the front position.
    Inverted,
}

/// Front position (m, along the east-west axis) at time `t` seconds.
pub fn front_position(t: f64, p: &SurgeParams) -> f64 {
    let t = t.max(0.0);
    let c = p.celerity();
    let k = 2.0 * p.slope() * GRAVITY / c;
    // sqrt(1 + k t) - 1 rewritten to avoid cancellation for small t.
    let bracket = k * t / ((1.0 + k * t).sqrt() + 1.0);
    p.radius - c * t * bracket
}

/// First arrival time (s) of water at abscissa `x` (m).
pub fn arrival_time(x: f64, p: &SurgeParams, mode: ArrivalMode) -> Result<f64> {
    if x < -p.radius * (1.0 + 1e-12) || x > p.radius * (1.0 + 1e-12) {
        return domain(format!("abscissa {x} m lies outside the disk"));
    }
    let gap = (p.radius - x).max(0.0);
    if gap == 0.0 {
        return Ok(0.0);
    }
    Ok(match mode {
        ArrivalMode::ClosedForm => {
            let u = 2.0 * p.slope() * gap / p.still_water_depth;
            (gap / p.celerity()) * (u / ((1.0 + u).sqrt() + 1.0))
        }
        ArrivalMode::Inverted => {
            let mut hi = 1.0;
            while front_position(hi, p) > x {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            while hi - lo > 1e-9 * hi {
                let mid = 0.5 * (lo + hi);
                if front_position(mid, p) > x {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    })
}

/// Fraction of the disk lying east of the front at time `t` seconds.
pub fn flooded_ratio(t: f64, p: &SurgeParams) -> f64 {
    segment_fraction(front_position(t, p) / p.radius)
}

/// Area fraction of the unit disk with `x >= u`.
pub fn segment_fraction(u: f64) -> f64 {
    if u >= 1.0 {
        return 0.0;
    }
    if u <= -1.0 {
        return 1.0;
    }
    ((u.acos() - u * (1.0 - u * u).sqrt()) / PI).clamp(0.0, 1.0)
}

/// Polar midpoint grid used to normalize and export the risk field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self { radial: 200, angular: 360 }
    }
}

/// Normalized origin density proportional to the inverse flood arrival time.
#[derive(Debug, Clone)]
pub struct RiskField {
    radius: f64,
    floor: f64,
    grid: PolarGrid,
    /// Abscissae (km) and unnormalized weights `1 / max(t_f, floor)`.
    x_nodes: Vec<f64>,
    w_nodes: Vec<f64>,
    norm: f64,
    /// Normalized density at polar cell centres, radial-major.
    cells: Vec<f64>,
}

const X_NODES: usize = 4001;

impl RiskField {
    /// Builds the field from an arrival-time function of the abscissa in km.
    pub fn from_arrival_times(
        arrival: impl Fn(f64) -> f64,
        radius_km: f64,
        grid: PolarGrid,
        floor_s: f64,
    ) -> Result<Self> {
        if !(floor_s > 0.0) {
            return domain(format!("arrival-time floor must be positive, got {floor_s}"));
        }
        if grid.radial == 0 || grid.angular == 0 {
            return domain("polar grid must be non-empty");
        }
        let x_nodes = crate::quad::linspace(-radius_km, radius_km, X_NODES);
        let w_nodes: Vec<f64> = x_nodes.iter().map(|&x| 1.0 / arrival(x).max(floor_s)).collect();
        let dr = radius_km / grid.radial as f64;
        let dt = TAU / grid.angular as f64;
        let mut raw = Vec::with_capacity(grid.radial * grid.angular);
        let mut total = 0.0;
        for i in 0..grid.radial {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..grid.angular {
                let th = (j as f64 + 0.5) * dt;
                let w = interp(&x_nodes, &w_nodes, r * th.cos());
                total += w * r * dr * dt;
                raw.push(w);
            }
        }
        let cells = raw.into_iter().map(|w| w / total).collect();
        Ok(Self { radius: radius_km, floor: floor_s, grid, x_nodes, w_nodes, norm: total, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn grid(&self) -> PolarGrid {
        self.grid
    }

    /// Cell centres `(r, θ)` and normalized densities, radial-major.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let dr = self.radius / self.grid.radial as f64;
        let dt = TAU / self.grid.angular as f64;
        let na = self.grid.angular;
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, w)| (((k / na) as f64 + 0.5) * dr, ((k % na) as f64 + 0.5) * dt, *w))
    }

    /// Midpoint-rule integral of the field over the disk.
    pub fn total_mass(&self) -> f64 {
        let dr = self.radius / self.grid.radial as f64;
        let dt = TAU / self.grid.angular as f64;
        self.cells().map(|(r, _, w)| w * r * dr * dt).sum()
    }

    /// Angular integral `g(r) = ∫ ρ(r, θ) dθ` at the radial cell centres.
    pub fn radial_profile(&self) -> Vec<(f64, f64)> {
        let dt = TAU / self.grid.angular as f64;
        let na = self.grid.angular;
        let dr = self.radius / self.grid.radial as f64;
        (0..self.grid.radial)
            .map(|i| {
                let g: f64 = self.cells[i * na..(i + 1) * na].iter().sum::<f64>() * dt;
                ((i as f64 + 0.5) * dr, g)
            })
            .collect()
    }

    /// Radial profile as a function, linearly interpolated and held constant at the ends.
    pub fn radial_function(&self) -> impl Fn(f64) -> f64 + Sync {
        let (r, g): (Vec<f64>, Vec<f64>) = self.radial_profile().into_iter().unzip();
        move |x| interp(&r, &g, x)
    }
}

impl PlanarDensity for RiskField {
    fn density(&self, p: Point) -> f64 {
        if p.norm() > self.radius {
            return 0.0;
        }
        interp(&self.x_nodes, &self.w_nodes, p.x) / self.norm
    }
}

/// Risk field from the surge arrival times.
pub fn build_risk_field(
    p: &SurgeParams,
    radius_km: f64,
    grid: PolarGrid,
    floor_s: f64,
    mode: ArrivalMode,
) -> Result<RiskField> {
    let arrival = |x_km: f64| arrival_time((x_km * 1000.0).clamp(-p.radius, p.radius), p, mode).unwrap_or(0.0);
    RiskField::from_arrival_times(arrival, radius_km, grid, floor_s)
}

/// Time (s) for the front to reach the far rim.
pub fn crossing_time(p: &SurgeParams, mode: ArrivalMode) -> f64 {
    arrival_time(-p.radius, p, mode).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amager() -> SurgeParams {
        SurgeParams::new(3.0, 10.0, 5.54).unwrap()
    }

    #[test]
    fn front_starts_at_shoreline_and_moves_west() {
        let p = amager();
        assert_eq!(front_position(0.0, &p), p.radius);
        let drop = p.radius - front_position(1.0, &p);
        assert!(drop > 0.0 && drop < 0.05, "{drop}");
        let mut prev = p.radius;
        for k in 1..2000 {
            let x = front_position(k as f64 * 2.0, &p);
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn inversion_round_trip() {
        let p = amager();
        for k in 0..=100 {
            let x = -p.radius + 2.0 * p.radius * k as f64 / 100.0;
            let t = arrival_time(x, &p, ArrivalMode::Inverted).unwrap();
            assert!((front_position(t, &p) - x).abs() < 1e-4 * p.radius);
        }
        assert_eq!(arrival_time(p.radius, &p, ArrivalMode::Inverted).unwrap(), 0.0);
        assert_eq!(arrival_time(p.radius, &p, ArrivalMode::ClosedForm).unwrap(), 0.0);
        assert!(arrival_time(2.0 * p.radius, &p, ArrivalMode::ClosedForm).is_err());
    }

    #[test]
    fn closed_form_crossing_time() {
        let p = amager();
        let t = crossing_time(&p, ArrivalMode::ClosedForm) / 3600.0;
        assert!((t - 1.0035).abs() < 1e-3, "{t}");
        let t = crossing_time(&p, ArrivalMode::Inverted) / 3600.0;
        assert!((t - 0.405).abs() < 5e-3, "{t}");
    }

    #[test]
    fn segment_fractions() {
        assert_eq!(segment_fraction(1.0), 0.0);
        assert!((segment_fraction(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(segment_fraction(-1.0), 1.0);
        assert_eq!(flooded_ratio(0.0, &amager()), 0.0);
    }

    #[test]
    fn risk_field_normalized_and_east_heavy() {
        let p = amager();
        let f = build_risk_field(&p, 5.54, PolarGrid::default(), 60.0, ArrivalMode::Inverted).unwrap();
        assert!((f.total_mass() - 1.0).abs() < 1e-9);
        let east = f.density(Point::new(5.5, 0.0));
        let west = f.density(Point::new(-5.5, 0.0));
        assert!(east > west);
        let mass: f64 = {
            let prof = f.radial_profile();
            let dr = 5.54 / prof.len() as f64;
            prof.iter().map(|(r, g)| g * r * dr).sum()
        };
        assert!((mass - 1.0).abs() < 1e-4);
        assert!(f.x_nodes.windows(2).zip(f.w_nodes.windows(2)).all(|(_, w)| w[1] >= w[0]));
    }

    #[test]
    fn rescaling_arrival_times_leaves_field_unchanged() {
        let base = |x: f64| (5.54 - x) * 300.0 + 5.0;
        let a = RiskField::from_arrival_times(base, 5.54, PolarGrid { radial: 50, angular: 90 }, 60.0).unwrap();
        let b = RiskField::from_arrival_times(|x| 7.5 * base(x), 5.54, PolarGrid { radial: 50, angular: 90 }, 450.0).unwrap();
        for ((_, _, u), (_, _, v)) in a.cells().zip(b.cells()) {
            assert!((u - v).abs() < 1e-9 * u.max(1.0));
        }
    }

    #[test]
    fn rejects_non_positive_floor() {
        assert!(RiskField::from_arrival_times(|_| 1.0, 5.54, PolarGrid::default(), 0.0).is_err());
    }
}
