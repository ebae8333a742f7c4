//! Risk functionals over Monte Carlo delay samples.

use crate::error::{domain, Result};

/// Delay totals (veh·h), one per scenario, with the seeds that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySamples {
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl DelaySamples {
    pub fn new(values: Vec<f64>, seeds: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return domain("delay samples must be non-empty");
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return domain(format!("delay samples must be non-negative, got {v}"));
        }
        Ok(Self { values, seeds })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let seeds = (0..values.len() as u64).collect();
        Self::new(values, seeds)
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Empirical average value at risk at confidence `alpha`.
///
/// Exact minimum of `eta + E[(D - eta)+] / (1 - alpha)` over `eta` for the
/// empirical measure: the worst `(1 - alpha) N` samples averaged, with the
/// boundary sample entering with a fractional weight.
pub fn avar(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return domain("avar needs at least one sample");
    }
    if !(0.0..1.0).contains(&alpha) {
        return domain(format!("confidence level must lie in [0, 1), got {alpha}"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len() as f64;
    let tail = (1.0 - alpha) * n;
    let mut remaining = tail;
    let mut acc = 0.0;
    for &v in &sorted {
        if remaining <= 0.0 {
            break;
        }
        let w = remaining.min(1.0);
        acc += w * v;
        remaining -= w;
    }
    Ok(acc / tail)
}

/// Risk-averse objective `mean + weight * avar`.
pub fn objective(values: &[f64], weight: f64, alpha: f64) -> Result<f64> {
    if !(weight >= 0.0) {
        return domain(format!("risk weight must be non-negative, got {weight}"));
    }
    let tail = avar(values, alpha)?;
    Ok(mean(values) + weight * tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ru_grid(values: &[f64], alpha: f64) -> f64 {
        // Convex piecewise-linear in eta with kinks at the samples.
        let n = values.len() as f64;
        values
            .iter()
            .map(|&eta| eta + values.iter().map(|v| (v - eta).max(0.0)).sum::<f64>() / ((1.0 - alpha) * n))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn five_point_example() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((avar(&s, 0.8).unwrap() - 5.0).abs() < 1e-12);
        assert!((avar(&s, 0.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((objective(&s, 1.0 / 3.0, 0.8).unwrap() - (3.0 + 5.0 / 3.0)).abs() < 1e-12);
        assert!((objective(&s, 0.0, 0.8).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_tail() {
        // Worst 1.5 samples of {1, 2, 3, 4}: (4 + 0.5 * 3) / 1.5.
        let v = avar(&[1.0, 2.0, 3.0, 4.0], 0.625).unwrap();
        assert!((v - 5.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(avar(&[], 0.5).is_err());
        assert!(avar(&[1.0], 1.0).is_err());
        assert!(avar(&[1.0], -0.1).is_err());
        assert!(objective(&[1.0], -1.0, 0.5).is_err());
        assert!(DelaySamples::from_values(vec![-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn matches_rockafellar_uryasev_minimum(values in prop::collection::vec(0.0f64..100.0, 1..40), alpha in 0.0f64..0.99) {
            let a = avar(&values, alpha).unwrap();
            prop_assert!((a - ru_grid(&values, alpha)).abs() < 1e-6 * (1.0 + a));
        }

        #[test]
        fn coherent_monotone_and_equivariant(values in prop::collection::vec(0.0f64..100.0, 1..40), a1 in 0.0f64..0.98, a2 in 0.0f64..0.98, c in -50.0f64..50.0) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let m = mean(&values);
            prop_assert!(avar(&values, lo).unwrap() >= m - 1e-9);
            prop_assert!(avar(&values, hi).unwrap() >= avar(&values, lo).unwrap() - 1e-9);
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            prop_assert!((avar(&shifted, hi).unwrap() - avar(&values, hi).unwrap() - c).abs() < 1e-9);
        }

        #[test]
        fn positively_homogeneous(values in prop::collection::vec(0.0f64..100.0, 1..40), k in 0.1f64..10.0) {
            let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
            let a = objective(&values, 1.0 / 3.0, 0.8).unwrap();
            prop_assert!((objective(&scaled, 1.0 / 3.0, 0.8).unwrap() - k * a).abs() < 1e-9 * (1.0 + k * a));
        }

        #[test]
        fn constant_samples(c in 0.0f64..100.0, n in 1usize..20, alpha in 0.0f64..0.99) {
            let v = vec![c; n];
            prop_assert!((avar(&v, alpha).unwrap() - c).abs() < 1e-9 * (1.0 + c));
        }
    }
}
