//! Service-rate curve and costate integration for checking switching structure.

use crate::error::{domain, Result};
use crate::geometry::TripLengthDistribution;
use crate::nfd::SpeedDensityModel;
use crate::quad::interp;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlDiagnostics {
    /// Minimum time headway, h.
    pub headway: f64,
    /// Network accumulation grid, veh.
    pub deltas: Vec<f64>,
    /// Service rate at each accumulation.
    pub service: Vec<f64>,
    /// Finite-difference slope of the service rate.
    pub slope: Vec<f64>,
}

/// `∫_0^x F(l) dl` for the piecewise-linear CDF, with `F = 1` beyond the table.
fn cdf_integral(dist: &TripLengthDistribution, x: f64) -> f64 {
    let (d, f) = (&dist.d, &dist.cdf);
    let mut acc = 0.0;
    for i in 0..d.len() - 1 {
        if x <= d[i] {
            return acc;
        }
        let hi = x.min(d[i + 1]);
        let fh = interp(d, f, hi);
        acc += 0.5 * (f[i] + fh) * (hi - d[i]);
    }
    acc + (x - d[d.len() - 1]).max(0.0)
}

/// Service rate `S(Δ) = ∫ min(V(Δ/L), l/T_h) f(l) dl` on the accumulation grid.
///
/// Integrating by parts gives `S = V - (1/T_h) ∫_0^{T_h V} F(l) dl`, exact for the tabulated CDF.
pub fn service_rate(
    dist: &TripLengthDistribution,
    model: &SpeedDensityModel,
    lane_km: f64,
    headway: f64,
    deltas: &[f64],
) -> Result<ControlDiagnostics> {
    if !(headway > 0.0) {
        return domain(format!("headway must be positive, got {headway}"));
    }
    if !(lane_km > 0.0) {
        return domain("lane length must be positive");
    }
    if deltas.len() < 3 || deltas.windows(2).any(|w| !(w[1] > w[0])) || deltas[0] < 0.0 {
        return domain("accumulation grid must be non-negative, strictly increasing, with at least three nodes");
    }
    let service: Vec<f64> = deltas
        .iter()
        .map(|&delta| {
            let v = model.speed_unchecked(delta / lane_km);
            (v - cdf_integral(dist, headway * v) / headway).max(0.0)
        })
        .collect();
    let n = deltas.len();
    let slope = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (service[b] - service[a]) / (deltas[b] - deltas[a])
        })
        .collect();
    Ok(ControlDiagnostics { headway, deltas: deltas.to_vec(), service, slope })
}

impl ControlDiagnostics {
    /// Largest second difference relative to the largest service rate; concave curves give values ≤ 0.
    pub fn max_second_difference(&self) -> f64 {
        let scale = self.service.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-300);
        self.service
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) / scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn slope_at(&self, delta: f64) -> f64 {
        interp(&self.deltas, &self.slope, delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostateTrajectory {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    /// Number of strict sign changes of `p`.
    pub crossings: usize,
}

/// Integrates `p' = -1 + p S'(Δ(t))`, `p(T) = 0` backwards with classical RK4.
///
/// `times`/`accumulation` sample `Δ(t)`; it is interpolated linearly between samples.
pub fn costate_trajectory(
    diag: &ControlDiagnostics,
    times: &[f64],
    accumulation: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<CostateTrajectory> {
    if times.is_empty() || times.len() != accumulation.len() {
        return domain("accumulation trajectory needs matching, non-empty samples");
    }
    if !(dt > 0.0 && horizon > 0.0) {
        return domain("step and horizon must be positive");
    }
    let delta = |t: f64| interp(times, accumulation, t);
    // In reversed time s = T - t the equation reads dp/ds = 1 - p S'(Δ(T - s)).
    let rhs = |s: f64, p: f64| 1.0 - p * diag.slope_at(delta(horizon - s));
    let n = (horizon / dt).ceil() as usize;
    let mut ts = vec![horizon];
    let mut ps = vec![0.0];
    let mut p = 0.0;
    for k in 0..n {
        let s = k as f64 * dt;
        let h = dt.min(horizon - s);
        let k1 = rhs(s, p);
        let k2 = rhs(s + 0.5 * h, p + 0.5 * h * k1);
        let k3 = rhs(s + 0.5 * h, p + 0.5 * h * k2);
        let k4 = rhs(s + h, p + h * k3);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ts.push(horizon - s - h);
        ps.push(p);
    }
    ts.reverse();
    ps.reverse();
    let mut crossings = 0;
    let mut sign = 0.0f64;
    for &v in &ps {
        if v != 0.0 {
            if sign != 0.0 && v.signum() != sign {
                crossings += 1;
            }
            sign = v.signum();
        }
    }
    Ok(CostateTrajectory { t: ts, p: ps, crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::linspace;

    fn uniform(len: f64) -> TripLengthDistribution {
        TripLengthDistribution::from_cdf_fn(linspace(0.0, len, 101), |x| x / len).unwrap()
    }

    #[test]
    fn empty_network_is_fastest_and_jam_stops_service() {
        let m = SpeedDensityModel::linear(60.0, 100.0).unwrap();
        let deltas = linspace(0.0, 1000.0, 51);
        let d = service_rate(&uniform(5.0), &m, 10.0, 2.0 / 3600.0, &deltas).unwrap();
        let th: f64 = 2.0 / 3600.0;
        let expect = 60.0 - (60.0 * th).powi(2) / (2.0 * 5.0 * th);
        assert!((d.service[0] - expect).abs() < 1e-12);
        assert!(d.service.iter().all(|s| *s <= d.service[0]));
        assert_eq!(d.service[50], 0.0);
    }

    #[test]
    fn linear_diagram_gives_concave_service() {
        let m = SpeedDensityModel::linear(60.0, 100.0).unwrap();
        let d = service_rate(&uniform(5.0), &m, 10.0, 2.0 / 3600.0, &linspace(0.0, 1000.0, 201)).unwrap();
        assert!(d.max_second_difference() <= 1e-6);
    }

    #[test]
    fn flat_service_gives_linear_costate() {
        let d = ControlDiagnostics { headway: 1.0, deltas: vec![0.0, 1.0, 2.0], service: vec![1.0; 3], slope: vec![0.0; 3] };
        let c = costate_trajectory(&d, &[0.0, 2.0], &[1.0, 1.0], 2.0, 0.1).unwrap();
        assert_eq!(*c.p.last().unwrap(), 0.0);
        for (t, p) in c.t.iter().zip(&c.p) {
            assert!((p - (2.0 - t)).abs() < 1e-12);
        }
        assert_eq!(c.crossings, 0);
    }

    #[test]
    fn crossing_counter_sees_sign_changes() {
        // S' = 2 makes p' = -1 + 2p, whose solution from p(T)=0 stays positive.
        let d = ControlDiagnostics { headway: 1.0, deltas: vec![0.0, 1.0], service: vec![0.0, 2.0], slope: vec![2.0, 2.0] };
        let c = costate_trajectory(&d, &[0.0, 1.0], &[0.5, 0.5], 1.0, 0.01).unwrap();
        assert_eq!(c.crossings, 0);
        assert!(c.p[0] > 0.0);
    }
}
