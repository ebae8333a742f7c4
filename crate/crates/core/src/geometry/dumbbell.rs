//! Non-convex counterexample zone: two disks joined by a thin corridor.

use super::{distribution::TripLengthDistribution, Point};
use crate::error::{domain, EvacError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, PartialEq)]
pub struct DumbbellZone {
    pub left_center: Point,
    pub right_center: Point,
    pub disk_radius: f64,
    pub corridor_half_width: f64,
    pub exit: Point,
    /// Raster cell size in km.
    pub resolution: f64,
    /// Histogram bin width for the tabulated distribution, in km.
    pub bin_width: f64,
}

impl Default for DumbbellZone {
    fn default() -> Self {
        Self {
            left_center: Point::new(-3.0, 0.0),
            right_center: Point::new(3.0, 0.0),
            disk_radius: 1.0,
            corridor_half_width: 0.1,
            exit: Point::new(-3.0, 0.0),
            resolution: 0.02,
            bin_width: 0.05,
        }
    }
}

impl DumbbellZone {
    pub fn contains(&self, p: Point) -> bool {
        if p.dist(&self.left_center) <= self.disk_radius || p.dist(&self.right_center) <= self.disk_radius {
            return true;
        }
        let (ax, ay) = (self.left_center.x, self.left_center.y);
        let (bx, by) = (self.right_center.x - ax, self.right_center.y - ay);
        let len2 = bx * bx + by * by;
        let t = ((p.x - ax) * bx + (p.y - ay) * by) / len2;
        if !(0.0..=1.0).contains(&t) {
            return false;
        }
        let off = ((p.x - ax) * by - (p.y - ay) * bx).abs() / len2.sqrt();
        off <= self.corridor_half_width
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.corridor_half_width > 0.0 && self.disk_radius > 0.0 && self.bin_width > 0.0) {
            return domain("dumbbell dimensions must be positive");
        }
        if self.resolution > self.corridor_half_width / 4.0 {
            return domain(format!(
                "raster resolution {} exceeds a quarter of the corridor half-width {}",
                self.resolution, self.corridor_half_width
            ));
        }
        if !self.contains(self.exit) {
            return domain("exit lies outside the zone");
        }
        Ok(())
    }
}

/// Shortest-path distances from the exit on an 8-connected raster.
#[derive(Debug, Clone)]
pub struct GeodesicRaster {
    /// Centre of cell (0, 0); the exit sits on a cell centre.
    origin: Point,
    resolution: f64,
    nx: usize,
    ny: usize,
    /// Distance per cell, `None` outside the zone.
    dist: Vec<Option<f64>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GeodesicRaster {
    pub fn build(zone: &DumbbellZone) -> Result<Self> {
        zone.validate()?;
        let h = zone.resolution;
        let r = zone.disk_radius;
        let xmin = zone.left_center.x.min(zone.right_center.x) - r;
        let xmax = zone.left_center.x.max(zone.right_center.x) + r;
        let ymin = zone.left_center.y.min(zone.right_center.y) - r;
        let ymax = zone.left_center.y.max(zone.right_center.y) + r;
        // Align the lattice so the exit is a cell centre.
        let i0 = ((zone.exit.x - xmin) / h).ceil() as i64;
        let j0 = ((zone.exit.y - ymin) / h).ceil() as i64;
        let origin = Point::new(zone.exit.x - i0 as f64 * h, zone.exit.y - j0 as f64 * h);
        let nx = ((xmax - origin.x) / h).floor() as usize + 1;
        let ny = ((ymax - origin.y) / h).floor() as usize + 1;
        let inside: Vec<bool> = (0..nx * ny)
            .map(|k| zone.contains(Point::new(origin.x + (k / ny) as f64 * h, origin.y + (k % ny) as f64 * h)))
            .collect();
        let start = i0 as usize * ny + j0 as usize;
        let mut dist = vec![f64::INFINITY; nx * ny];
        dist[start] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, start));
        let diag = h * std::f64::consts::SQRT_2;
        while let Some(Entry(d, k)) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            let (i, j) = ((k / ny) as i64, (k % ny) as i64);
            for di in -1..=1i64 {
                for dj in -1..=1i64 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                        continue;
                    }
                    let m = a as usize * ny + b as usize;
                    if !inside[m] {
                        continue;
                    }
                    let nd = d + if di != 0 && dj != 0 { diag } else { h };
                    if nd < dist[m] {
                        dist[m] = nd;
                        heap.push(Entry(nd, m));
                    }
                }
            }
        }
        let unreachable = inside.iter().zip(&dist).filter(|(i, d)| **i && d.is_infinite()).count();
        if unreachable > 0 {
            return Err(EvacError::Disconnected(format!("{unreachable} cells cannot reach the exit")));
        }
        let dist = inside.iter().zip(dist).map(|(i, d)| i.then_some(d)).collect();
        Ok(Self { origin, resolution: h, nx, ny, dist })
    }

    /// Distance at the cell containing `p`, if it is inside the zone.
    pub fn distance_at(&self, p: Point) -> Option<f64> {
        let i = ((p.x - self.origin.x) / self.resolution).round();
        let j = ((p.y - self.origin.y) / self.resolution).round();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        self.dist[i as usize * self.ny + j as usize]
    }

    pub fn cell_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.dist.iter().filter_map(|d| *d)
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }
}

/// Tabulates the geodesic distance distribution of a uniformly distributed origin.
pub fn dumbbell_distribution(zone: &DumbbellZone) -> Result<TripLengthDistribution> {
    let raster = GeodesicRaster::build(zone)?;
    let mut ds: Vec<f64> = raster.cell_distances().collect();
    ds.sort_by(f64::total_cmp);
    let n = ds.len() as f64;
    let w = zone.bin_width;
    let nodes = (ds[ds.len() - 1] / w).floor() as usize + 2;
    let grid: Vec<f64> = (0..nodes).map(|k| k as f64 * w).collect();
    let cdf = grid.iter().map(|&g| ds.partition_point(|&x| x < g) as f64 / n).collect();
    TripLengthDistribution::from_cdf(grid, cdf, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_and_far_disk_distances() {
        let zone = DumbbellZone::default();
        let r = GeodesicRaster::build(&zone).unwrap();
        assert_eq!(r.distance_at(zone.exit), Some(0.0));
        let far = r.distance_at(Point::new(3.0, 0.0)).unwrap();
        assert!((far - 6.0).abs() < 2.0 * zone.resolution, "{far}");
        assert_eq!(r.distance_at(Point::new(0.0, 0.5)), None);
    }

    #[test]
    fn coarse_raster_rejected() {
        let zone = DumbbellZone { resolution: 0.05, ..DumbbellZone::default() };
        assert!(GeodesicRaster::build(&zone).is_err());
    }

    #[test]
    fn slanted_corridor_stays_connected() {
        let zone = DumbbellZone { right_center: Point::new(3.0, 1.5), ..DumbbellZone::default() };
        let r = GeodesicRaster::build(&zone).unwrap();
        let far = r.distance_at(Point::new(3.0, 1.5)).unwrap();
        let straight = Point::new(-3.0, 0.0).dist(&Point::new(3.0, 1.5));
        // Octile paths overshoot the Euclidean length by at most about 8%.
        assert!(far >= straight - 1e-9 && far < straight * 1.09, "{far}");
    }
}
