use crate::error::{domain, Result};
use crate::quad::interp;

/// Survival probability below which the hazard is left undefined.
pub const HAZARD_FLOOR: f64 = 1e-6;

/// Tabulated trip-length distribution with density and hazard rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TripLengthDistribution {
    pub d: Vec<f64>,
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
    /// `pdf / (1 - cdf)`; `None` where the survival probability is below [`HAZARD_FLOOR`].
    pub hazard: Vec<Option<f64>>,
    pub lambda_mix: f64,
}

impl TripLengthDistribution {
    /// Tabulates density by central differences (one-sided at the ends) and the hazard by ratio.
    pub fn from_cdf(d: Vec<f64>, cdf: Vec<f64>, lambda_mix: f64) -> Result<Self> {
        let n = d.len();
        if n < 3 || cdf.len() != n {
            return domain("distribution tables need at least three matching nodes");
        }
        if d.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("distance grid must be strictly increasing");
        }
        if cdf[0].abs() > 1e-6 || (cdf[n - 1] - 1.0).abs() > 1e-6 {
            return domain(format!(
                "CDF must run from 0 to 1, got {} .. {}",
                cdf[0],
                cdf[n - 1]
            ));
        }
        // Quadrature round-off can produce 1e-16 dips; the running maximum removes them.
        let mut cdf = cdf;
        for i in 1..n {
            if cdf[i] < cdf[i - 1] {
                if cdf[i - 1] - cdf[i] > 1e-9 {
                    return domain(format!("CDF decreases at d={}", d[i]));
                }
                cdf[i] = cdf[i - 1];
            }
        }
        let pdf: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = match i {
                    0 => (0, 1),
                    _ if i == n - 1 => (n - 2, n - 1),
                    _ => (i - 1, i + 1),
                };
                (cdf[b] - cdf[a]) / (d[b] - d[a])
            })
            .collect();
        let hazard = cdf
            .iter()
            .zip(&pdf)
            .map(|(f_cum, f)| {
                let s = 1.0 - f_cum;
                (s >= HAZARD_FLOOR).then(|| f / s)
            })
            .collect();
        Ok(Self { d, cdf, pdf, hazard, lambda_mix })
    }

    /// Tabulates an analytic CDF on `d`.
    pub fn from_cdf_fn(d: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let cdf = d.iter().map(|&x| f(x)).collect();
        Self::from_cdf(d, cdf, 1.0)
    }

    /// CDF by linear interpolation; 0 below the grid and 1 above it.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x >= self.d[self.d.len() - 1] {
            return 1.0;
        }
        interp(&self.d, &self.cdf, x)
    }

    pub fn max_distance(&self) -> f64 {
        self.d[self.d.len() - 1]
    }

    /// Mean trip length by integrating the survival function.
    pub fn mean(&self) -> f64 {
        let surv: Vec<f64> = self.cdf.iter().map(|f| 1.0 - f).collect();
        crate::quad::trapezoid(&self.d, &surv)
    }
}

/// Outcome of an increasing-failure-rate check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfrVerdict {
    pub ifr: bool,
    /// Grid index and distance where the hazard first drops.
    pub first_violation: Option<(usize, f64)>,
}

/// True if the tabulated hazard never falls below its running maximum by more than the relative tolerance `tol`.
///
/// Comparing against the running maximum rather than the previous node catches slow declines.
pub fn is_ifr(dist: &TripLengthDistribution, tol: f64) -> IfrVerdict {
    let mut peak = f64::NEG_INFINITY;
    for (i, h) in dist.hazard.iter().enumerate() {
        let Some(h) = *h else { continue };
        if h < peak * (1.0 - tol) {
            return IfrVerdict { ifr: false, first_violation: Some((i, dist.d[i])) };
        }
        peak = peak.max(h);
    }
    IfrVerdict { ifr: true, first_violation: None }
}
