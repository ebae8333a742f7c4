//! Evacuation-zone geometry and the min-distance-to-exit trip-length distribution.
//!
//! A trip is modelled as the straight-line distance from a point of the zone
//! to its nearest exit. For a disk with exits on the boundary, the set of
//! points within `d` of some exit is a union of caps, so its measure reduces
//! to a one-dimensional integral over the radius.

mod distribution;
mod dumbbell;

pub use distribution::{is_ifr, IfrVerdict, TripLengthDistribution, HAZARD_FLOOR};
pub use dumbbell::{dumbbell_distribution, DumbbellZone, GeodesicRaster};

use crate::error::{domain, EvacError, Result};
use crate::quad::{adaptive_simpson, clustered_gauss_legendre, gauss_legendre};
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Disk-shaped zone with exits on its boundary circle.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskZone {
    radius: f64,
    angles: Vec<f64>,
}

impl DiskZone {
    /// Builds a zone from exit angles in radians; angles are wrapped to `[0, 2π)` and sorted.
    pub fn new(radius: f64, angles: &[f64]) -> Result<Self> {
        if !(radius > 0.0) {
            return domain(format!("radius must be positive, got {radius}"));
        }
        if angles.is_empty() {
            return domain("a zone needs at least one exit");
        }
        let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(TAU)).collect();
        a.sort_by(f64::total_cmp);
        if a.windows(2).any(|w| w[1] - w[0] < 1e-12) {
            return domain("duplicate exit angles");
        }
        Ok(Self { radius, angles: a })
    }

    pub fn from_degrees(radius: f64, degrees: &[f64]) -> Result<Self> {
        let rad: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
        Self::new(radius, &rad)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn exits(&self) -> Vec<Point> {
        self.angles
            .iter()
            .map(|t| Point::new(self.radius * t.cos(), self.radius * t.sin()))
            .collect()
    }

    /// Consecutive circular gaps between exits (sums to 2π).
    pub fn gaps(&self) -> Vec<f64> {
        circular_gaps(&self.angles)
    }

    pub fn nearest_exit_distance(&self, p: Point) -> f64 {
        self.exits().iter().map(|c| c.dist(&p)).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from any point of the disk to its nearest exit.
    pub fn max_min_distance(&self) -> f64 {
        let widest = self.gaps().into_iter().fold(0.0, f64::max);
        let boundary = 2.0 * self.radius * (widest / 4.0).sin();
        let exits = self.exits();
        let mut interior: f64 = 0.0;
        for i in 0..=60 {
            let r = self.radius * i as f64 / 60.0;
            for j in 0..360 {
                let t = j as f64 * TAU / 360.0;
                let p = Point::new(r * t.cos(), r * t.sin());
                let d = exits.iter().map(|c| c.dist(&p)).fold(f64::INFINITY, f64::min);
                interior = interior.max(d);
            }
        }
        boundary.max(interior)
    }
}

fn circular_gaps(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                sorted[i + 1] - sorted[i]
            } else {
                sorted[0] + TAU - sorted[n - 1]
            }
        })
        .collect()
}

/// Gaps between consecutive angles, including the wrap-around gap.
pub fn angular_gaps(angles: &[f64]) -> Result<Vec<f64>> {
    if angles.len() < 2 {
        return domain("need at least two angles");
    }
    let zone = DiskZone::new(1.0, angles)?;
    Ok(zone.gaps())
}

/// Projects a boundary point onto the circle of radius `radius` around `centroid`.
pub fn project_exit(centroid: Point, boundary_point: Point, radius: f64) -> Result<Point> {
    let dx = boundary_point.x - centroid.x;
    let dy = boundary_point.y - centroid.y;
    if dx == 0.0 && dy == 0.0 {
        return domain("boundary point coincides with the centroid");
    }
    let t = dy.atan2(dx);
    Ok(Point::new(radius * t.cos(), radius * t.sin()))
}

/// Half-angle of the arc of the circle of radius `r` lying within `d` of a boundary exit.
pub fn cap_half_angle(r: f64, d: f64, radius: f64) -> f64 {
    if r <= 0.0 {
        return if d < radius { 0.0 } else { PI };
    }
    if d < (radius - r).abs() {
        return 0.0;
    }
    if d > radius + r {
        return PI;
    }
    let c = (r * r + radius * radius - d * d) / (2.0 * r * radius);
    c.clamp(-1.0, 1.0).acos()
}

/// Angular measure of the radius-`r` circle within `d` of some exit.
///
/// Caps of equal half-width centred on the sorted exits overlap only with
/// their neighbours, so the union is the sum over gaps of `min(2α, gap)`.
pub fn union_angle(r: f64, d: f64, zone: &DiskZone) -> f64 {
    let alpha = cap_half_angle(r, d, zone.radius);
    if alpha <= 0.0 {
        return 0.0;
    }
    let covered: f64 = zone.gaps().iter().map(|g| g.min(2.0 * alpha)).sum();
    covered.min(TAU)
}

/// Radii at which the union-angle integrand has kinks, inside `(lo, hi)`.
fn kinks(d: f64, zone: &DiskZone, lo: f64, hi: f64) -> Vec<f64> {
    let big_r = zone.radius;
    let mut pts = vec![lo, hi];
    if d > big_r {
        pts.push(d - big_r);
    }
    for g in zone.gaps() {
        let half = (g / 2.0).min(PI);
        let disc = d * d - big_r * big_r * half.sin().powi(2);
        if disc >= 0.0 {
            let s = disc.sqrt();
            pts.push(big_r * half.cos() - s);
            pts.push(big_r * half.cos() + s);
        }
    }
    let mut inside: Vec<f64> = pts.into_iter().filter(|p| *p >= lo && *p <= hi).collect();
    inside.sort_by(f64::total_cmp);
    inside.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    inside
}

/// Panels per kink-free segment of the radial integral.
const RADIAL_PANELS: usize = 24;

fn radial_integral(d: f64, zone: &DiskZone, weight: &impl Fn(f64) -> f64) -> f64 {
    let big_r = zone.radius;
    let lo = (big_r - d).max(0.0);
    let integrand = |r: f64| weight(r) * r * union_angle(r, d, zone);
    let pts = kinks(d, zone, lo, big_r);
    pts.windows(2).map(|w| clustered_gauss_legendre(integrand, w[0], w[1], RADIAL_PANELS)).sum()
}

/// CDF of the nearest-exit distance for a uniformly distributed origin.
pub fn cdf_uniform(d: f64, zone: &DiskZone) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 2.0 * zone.radius {
        return 1.0;
    }
    let area = PI * zone.radius * zone.radius;
    (radial_integral(d, zone, &|_| 1.0) / area).clamp(0.0, 1.0)
}

/// Mass `∫ g(r) r dr` of a radial density over `[0, R]`.
pub fn radial_mass(g: &impl Fn(f64) -> f64, radius: f64) -> f64 {
    adaptive_simpson(&|r: f64| g(r) * r, 0.0, radius, 1e-12)
}

/// CDF of the nearest-exit distance for an origin density `g(r) / 2π` depending on radius only.
pub fn cdf_radial(d: f64, zone: &DiskZone, g: &impl Fn(f64) -> f64) -> Result<f64> {
    let mass = radial_mass(g, zone.radius);
    if (mass - 1.0).abs() > 1e-4 {
        return domain(format!("radial density is not normalized: mass {mass}"));
    }
    if d <= 0.0 {
        return Ok(0.0);
    }
    let v = radial_integral(d.min(2.0 * zone.radius), zone, g) / TAU;
    Ok(v.clamp(0.0, 1.0))
}

/// Origin density on the plane, in 1/km².
pub trait PlanarDensity: Sync {
    fn density(&self, p: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Sync> PlanarDensity for F {
    fn density(&self, p: Point) -> f64 {
        self(p)
    }
}

/// Uniform origin density over a disk.
#[derive(Debug, Clone, Copy)]
pub struct UniformDisk {
    pub radius: f64,
}

impl PlanarDensity for UniformDisk {
    fn density(&self, _p: Point) -> f64 {
        1.0 / (PI * self.radius * self.radius)
    }
}

/// Resolution of the ray quadrature used for general densities.
#[derive(Debug, Clone, Copy)]
pub struct RayQuadrature {
    /// Number of equally spaced ray directions.
    pub rays: usize,
    /// Node spacing of the per-ray antiderivative table, in km.
    pub max_panel: f64,
}

impl Default for RayQuadrature {
    fn default() -> Self {
        Self { rays: 1440, max_panel: 0.01 }
    }
}

/// Sub-intervals of `[0, R]` along direction `theta` lying within `d` of some exit.
fn ray_cover(theta: f64, d: f64, zone: &DiskZone) -> Vec<(f64, f64)> {
    let big_r = zone.radius;
    let mut iv: Vec<(f64, f64)> = zone
        .angles
        .iter()
        .filter_map(|phi| {
            let c = (theta - phi).cos();
            let disc = d * d - big_r * big_r * (1.0 - c * c);
            if disc < 0.0 {
                return None;
            }
            let s = disc.sqrt();
            let a = (big_r * c - s).max(0.0);
            let b = (big_r * c + s).min(big_r);
            (b > a).then_some((a, b))
        })
        .collect();
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Antiderivative of `density * r` along one ray, tabulated on equal nodes.
///
/// Between nodes it is evaluated by cubic Hermite interpolation, using the
/// integrand itself as the derivative, so endpoint lookups cost O(1).
struct RayTable {
    step: f64,
    /// Cumulative integral at each node.
    cum: Vec<f64>,
    /// Integrand at each node.
    slope: Vec<f64>,
}

impl RayTable {
    fn build(density: &dyn PlanarDensity, theta: f64, radius: f64, spacing: f64) -> Self {
        let n = (radius / spacing).ceil().max(1.0) as usize;
        let step = radius / n as f64;
        let (sn, cs) = theta.sin_cos();
        let g = |r: f64| density.density(Point::new(r * cs, r * sn)) * r;
        let mut cum = Vec::with_capacity(n + 1);
        let mut slope = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for j in 0..=n {
            let r = j as f64 * step;
            if j > 0 {
                acc += gauss_legendre(g, r - step, r, step);
            }
            cum.push(acc);
            slope.push(g(r));
        }
        Self { step, cum, slope }
    }

    fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    fn at(&self, r: f64) -> f64 {
        let last = self.cum.len() - 1;
        let x = (r / self.step).clamp(0.0, last as f64);
        let j = (x.floor() as usize).min(last.saturating_sub(1));
        let t = x - j as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h = self.step;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.cum[j]
            + (t3 - 2.0 * t2 + t) * h * self.slope[j]
            + (-2.0 * t3 + 3.0 * t2) * self.cum[j + 1]
            + (t3 - t2) * h * self.slope[j + 1]
    }
}

fn ray_tables(zone: &DiskZone, density: &dyn PlanarDensity, quad: RayQuadrature) -> Vec<(f64, RayTable)> {
    let dtheta = TAU / quad.rays as f64;
    (0..quad.rays)
        .into_par_iter()
        .map(|k| {
            let theta = (k as f64 + 0.5) * dtheta;
            (theta, RayTable::build(density, theta, zone.radius, quad.max_panel))
        })
        .collect()
}

/// Probability mass of `density` inside the disk under the ray quadrature.
pub fn planar_mass(zone: &DiskZone, density: &dyn PlanarDensity, quad: RayQuadrature) -> f64 {
    let dtheta = TAU / quad.rays as f64;
    ray_tables(zone, density, quad).iter().map(|(_, t)| t.total()).sum::<f64>() * dtheta
}

/// CDF values at each of `ds` for a general origin density.
///
/// The density must integrate to one within 1e-3; the result is divided by
/// the measured mass so the last value is exactly one once `d` covers the disk.
pub fn cdf_general_many(
    ds: &[f64],
    zone: &DiskZone,
    density: &dyn PlanarDensity,
    quad: RayQuadrature,
) -> Result<Vec<f64>> {
    if quad.rays == 0 || !(quad.max_panel > 0.0) {
        return Err(EvacError::Domain("ray quadrature needs rays and a positive spacing".into()));
    }
    let tables = ray_tables(zone, density, quad);
    let mass: f64 = tables.iter().map(|(_, t)| t.total()).sum::<f64>();
    let dtheta = TAU / quad.rays as f64;
    if (mass * dtheta - 1.0).abs() > 1e-3 {
        return Err(EvacError::Domain(format!("planar density is not normalized: mass {}", mass * dtheta)));
    }
    // Per-ray contributions in ray order, then summed sequentially for reproducibility.
    let per_ray: Vec<Vec<f64>> = tables
        .par_iter()
        .map(|(theta, table)| {
            ds.iter()
                .map(|&d| {
                    if d <= 0.0 {
                        return 0.0;
                    }
                    ray_cover(*theta, d, zone).into_iter().map(|(a, b)| table.at(b) - table.at(a)).sum()
                })
                .collect()
        })
        .collect();
    Ok((0..ds.len())
        .map(|i| {
            let v: f64 = per_ray.iter().map(|r| r[i]).sum();
            (v / mass).clamp(0.0, 1.0)
        })
        .collect())
}

pub fn cdf_general(d: f64, zone: &DiskZone, density: &dyn PlanarDensity) -> Result<f64> {
    Ok(cdf_general_many(&[d], zone, density, RayQuadrature::default())?[0])
}

/// Origin density entering the risk-weighted part of the mixture.
#[derive(Clone, Copy)]
pub enum RiskComponent<'a> {
    /// No risk component; only `lambda_mix = 1` is available.
    None,
    /// General planar density integrated by ray quadrature.
    Planar(&'a dyn PlanarDensity, RayQuadrature),
    /// Density depending on radius only, given as `g(r)` with `∫ g r dr = 1`.
    Radial(&'a (dyn Fn(f64) -> f64 + Sync)),
}

/// Uniform and risk-weighted CDF tables on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTables {
    pub grid: Vec<f64>,
    pub uniform: Vec<f64>,
    pub risk: Option<Vec<f64>>,
}

impl MixtureTables {
    pub fn compute(zone: &DiskZone, risk: RiskComponent<'_>, grid: &[f64]) -> Result<Self> {
        validate_grid(grid, zone.max_min_distance())?;
        let uniform: Vec<f64> = grid.iter().map(|&d| cdf_uniform(d, zone)).collect();
        let risk = match risk {
            RiskComponent::None => None,
            RiskComponent::Planar(density, quad) => Some(cdf_general_many(grid, zone, density, quad)?),
            RiskComponent::Radial(g) => {
                let g = |r: f64| g(r);
                Some(grid.iter().map(|&d| cdf_radial(d, zone, &g)).collect::<Result<Vec<_>>>()?)
            }
        };
        Ok(Self { grid: grid.to_vec(), uniform, risk })
    }

    /// Mixture `lambda F_U + (1 - lambda) F_R` as a tabulated distribution.
    pub fn distribution(&self, lambda_mix: f64) -> Result<TripLengthDistribution> {
        if !(0.0..=1.0).contains(&lambda_mix) {
            return domain(format!("mixture weight must lie in [0, 1], got {lambda_mix}"));
        }
        let cdf: Vec<f64> = match (&self.risk, lambda_mix == 1.0) {
            (_, true) => self.uniform.clone(),
            (Some(r), false) => self
                .uniform
                .iter()
                .zip(r)
                .map(|(u, r)| lambda_mix * u + (1.0 - lambda_mix) * r)
                .collect(),
            (None, false) => return domain("mixture weight below one needs a risk density"),
        };
        if let Some(w) = cdf.windows(2).position(|w| w[1] - w[0] > 0.05) {
            return Err(EvacError::GridTooCoarse(format!(
                "CDF jumps by more than 0.05 between d={} and d={}; refine the grid",
                self.grid[w], self.grid[w + 1]
            )));
        }
        TripLengthDistribution::from_cdf(self.grid.clone(), cdf, lambda_mix)
    }
}

fn validate_grid(grid: &[f64], d_max: f64) -> Result<()> {
    if grid.len() < 3 {
        return domain("distance grid needs at least three nodes");
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("distance grid must be strictly increasing");
    }
    if grid[0].abs() > 1e-12 {
        return domain("distance grid must start at 0");
    }
    if grid[grid.len() - 1] < d_max * (1.0 - 1e-9) {
        return domain(format!(
            "distance grid ends at {} but the farthest point is {d_max} from an exit",
            grid[grid.len() - 1]
        ));
    }
    Ok(())
}

/// Builds the mixture trip-length distribution on `grid`.
pub fn build_distribution(
    zone: &DiskZone,
    lambda_mix: f64,
    risk: RiskComponent<'_>,
    grid: &[f64],
) -> Result<TripLengthDistribution> {
    let risk = if lambda_mix == 1.0 { RiskComponent::None } else { risk };
    MixtureTables::compute(zone, risk, grid)?.distribution(lambda_mix)
}

/// Uniform grid from zero to the farthest point of the zone.
pub fn default_grid(zone: &DiskZone, nodes: usize) -> Vec<f64> {
    crate::quad::linspace(0.0, zone.max_min_distance(), nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amager_zone() -> DiskZone {
        DiskZone::from_degrees(5.54, &[92.9, 145.3, 194.3]).unwrap()
    }

    #[test]
    fn gaps_examples() {
        let g = angular_gaps(&[0.0, PI]).unwrap();
        assert!((g[0] - PI).abs() < 1e-12 && (g[1] - PI).abs() < 1e-12);
        let g = angular_gaps(&[0.0, PI / 2.0, PI, 1.5 * PI]).unwrap();
        assert!(g.iter().all(|x| (x - PI / 2.0).abs() < 1e-12));
        assert!(angular_gaps(&[1.0, 1.0]).is_err());
        assert!(angular_gaps(&[1.0]).is_err());
        let total: f64 = amager_zone().gaps().iter().sum();
        assert!((total - TAU).abs() < 1e-12);
    }

    #[test]
    fn projection() {
        let p = project_exit(Point::new(0.0, 0.0), Point::new(0.0, 2.0), 5.54).unwrap();
        assert!(p.x.abs() < 1e-12 && (p.y - 5.54).abs() < 1e-12);
        let p = project_exit(Point::new(1.0, 1.0), Point::new(-3.0, 7.0), 5.54).unwrap();
        assert!((p.norm() - 5.54).abs() < 1e-12);
        assert!(project_exit(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 5.54).is_err());
    }

    #[test]
    fn cap_angle_examples() {
        assert_eq!(cap_half_angle(5.54, 0.0, 5.54), 0.0);
        assert!((cap_half_angle(5.54, 11.08, 5.54) - PI).abs() < 1e-12);
        assert!((cap_half_angle(3.0, 4.0, 5.54) - 0.777394).abs() < 1e-6);
        assert_eq!(cap_half_angle(0.0, 1.0, 5.54), 0.0);
        assert_eq!(cap_half_angle(0.0, 6.0, 5.54), PI);
    }

    #[test]
    fn union_angle_limits() {
        let z = amager_zone();
        assert_eq!(union_angle(2.0, 1.0, &z), 0.0);
        assert!((union_angle(5.0, 11.0, &z) - TAU).abs() < 1e-12);
    }

    #[test]
    fn union_angle_matches_three_exit_formula() {
        let z = amager_zone();
        for &(r, d) in &[(5.0, 1.0), (4.0, 3.0), (2.0, 5.0), (5.5, 2.4)] {
            let a = cap_half_angle(r, d, z.radius());
            let g = z.gaps();
            let three_exit = 6.0 * a - g.iter().map(|gij| (2.0 * a - gij).max(0.0)).sum::<f64>();
            assert!((union_angle(r, d, &z) - three_exit.min(TAU)).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_uniform_endpoints() {
        let z = amager_zone();
        assert_eq!(cdf_uniform(0.0, &z), 0.0);
        assert_eq!(cdf_uniform(11.08, &z), 1.0);
        assert!((cdf_uniform(z.max_min_distance(), &z) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_exit_matches_lens_area() {
        let big_r = 2.0;
        let z = DiskZone::new(big_r, &[0.3]).unwrap();
        for &d in &[0.5, 1.0, 2.0, 3.0, 3.9] {
            // Intersection of the disk with a disk of radius d centred on its boundary.
            let a1 = d * d * (d / (2.0 * big_r)).acos();
            let a2 = big_r * big_r * (1.0 - d * d / (2.0 * big_r * big_r)).acos();
            let a3 = 0.5 * d * (4.0 * big_r * big_r - d * d).sqrt();
            let exact = (a1 + a2 - a3) / (PI * big_r * big_r);
            assert!((cdf_uniform(d, &z) - exact).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn radial_reduces_to_uniform() {
        let z = amager_zone();
        let r2 = z.radius() * z.radius();
        let g = |_r: f64| 2.0 / r2;
        for &d in &[0.3, 1.0, 3.0, 7.0] {
            assert!((cdf_radial(d, &z, &g).unwrap() - cdf_uniform(d, &z)).abs() < 1e-6);
        }
        assert!(cdf_radial(1.0, &z, &|_r: f64| 1.0).is_err());
    }

    #[test]
    fn general_reduces_to_uniform() {
        let z = amager_zone();
        let u = UniformDisk { radius: z.radius() };
        let ds = [0.5, 2.0, 4.0, 8.0];
        let v = cdf_general_many(&ds, &z, &u, RayQuadrature::default()).unwrap();
        for (d, f) in ds.iter().zip(v) {
            assert!((f - cdf_uniform(*d, &z)).abs() < 1e-3, "d={d}");
        }
    }

    #[test]
    fn general_rejects_unnormalized() {
        let z = amager_zone();
        let twice = |_p: Point| 2.0 / (PI * 5.54 * 5.54);
        assert!(cdf_general(1.0, &z, &twice).is_err());
    }

    #[test]
    fn grid_must_reach_farthest_point() {
        let z = amager_zone();
        assert!(build_distribution(&z, 1.0, RiskComponent::None, &[0.0, 1.0, 2.0]).is_err());
        let coarse = crate::quad::linspace(0.0, z.max_min_distance(), 6);
        assert!(matches!(
            build_distribution(&z, 1.0, RiskComponent::None, &coarse),
            Err(EvacError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn farthest_point_is_opposite_widest_gap() {
        let z = amager_zone();
        let widest: f64 = z.gaps().into_iter().fold(0.0, f64::max);
        assert!((z.max_min_distance() - 2.0 * 5.54 * (widest / 4.0).sin()).abs() < 1e-9);
    }
}
