//! Network fundamental diagrams: speed and flow as functions of density.
//!
//! Units are fixed across the crate: km, hours, veh/km/lane, veh/h/lane.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Speed-density relationship of the whole network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpeedDensityModel {
    /// Free flow up to the critical density, then a linear congested branch.
    Triangular {
        free_flow_speed: f64,
        wave_speed: f64,
        jam_density: f64,
    },
    /// Free flow up to `rho_low`, capacity plateau, congested branch from `rho_high`.
    Trapezoidal {
        capacity: f64,
        rho_low: f64,
        rho_high: f64,
        jam_density: f64,
    },
    /// Greenshields: `v_f (1 - rho / rho_j)`.
    Linear { free_flow_speed: f64, jam_density: f64 },
}

impl SpeedDensityModel {
    /// Triangular diagram from free-flow speed, capacity and jam density.
    ///
    /// The wave speed follows from requiring both branches to meet at capacity.
    pub fn triangular_from_capacity(free_flow_speed: f64, capacity: f64, jam_density: f64) -> Result<Self> {
        if !(free_flow_speed > 0.0 && capacity > 0.0 && jam_density > 0.0) {
            return domain("triangular parameters must be positive");
        }
        let rho_c = capacity / free_flow_speed;
        if rho_c >= jam_density {
            return domain(format!(
                "inconsistent triangular diagram: critical density {rho_c} >= jam density {jam_density}"
            ));
        }
        Ok(SpeedDensityModel::Triangular {
            free_flow_speed,
            wave_speed: capacity / (jam_density - rho_c),
            jam_density,
        })
    }

    pub fn linear(free_flow_speed: f64, jam_density: f64) -> Result<Self> {
        let m = SpeedDensityModel::Linear { free_flow_speed, jam_density };
        m.validate()?;
        Ok(m)
    }

    pub fn trapezoidal(capacity: f64, rho_low: f64, rho_high: f64, jam_density: f64) -> Result<Self> {
        let m = SpeedDensityModel::Trapezoidal { capacity, rho_low, rho_high, jam_density };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpeedDensityModel::Triangular { free_flow_speed, wave_speed, jam_density } => {
                free_flow_speed > 0.0 && wave_speed > 0.0 && jam_density > 0.0
            }
            SpeedDensityModel::Trapezoidal { capacity, rho_low, rho_high, jam_density } => {
                capacity > 0.0 && rho_low > 0.0 && rho_low <= rho_high && rho_high < jam_density
            }
            SpeedDensityModel::Linear { free_flow_speed, jam_density } => {
                free_flow_speed > 0.0 && jam_density > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            domain(format!("invalid speed-density parameters: {self:?}"))
        }
    }

    pub fn jam_density(&self) -> f64 {
        match *self {
            SpeedDensityModel::Triangular { jam_density, .. }
            | SpeedDensityModel::Trapezoidal { jam_density, .. }
            | SpeedDensityModel::Linear { jam_density, .. } => jam_density,
        }
    }

    pub fn free_flow_speed(&self) -> f64 {
        match *self {
            SpeedDensityModel::Triangular { free_flow_speed, .. }
            | SpeedDensityModel::Linear { free_flow_speed, .. } => free_flow_speed,
            SpeedDensityModel::Trapezoidal { capacity, rho_low, .. } => capacity / rho_low,
        }
    }

    /// Speed at density `rho`; panics-free variant used in hot loops.
    ///
    /// Negative densities are treated as zero.
    #[inline]
    pub fn speed_unchecked(&self, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        match *self {
            SpeedDensityModel::Triangular { free_flow_speed, wave_speed, jam_density } => {
                if rho >= jam_density {
                    return 0.0;
                }
                let rho_c = wave_speed * jam_density / (free_flow_speed + wave_speed);
                if rho <= rho_c {
                    free_flow_speed
                } else {
                    wave_speed * (jam_density - rho) / rho
                }
            }
            SpeedDensityModel::Trapezoidal { capacity, rho_low, rho_high, jam_density } => {
                if rho >= jam_density {
                    0.0
                } else if rho <= rho_low {
                    capacity / rho_low
                } else if rho <= rho_high {
                    capacity / rho
                } else {
                    capacity * (jam_density - rho) / ((jam_density - rho_high) * rho)
                }
            }
            SpeedDensityModel::Linear { free_flow_speed, jam_density } => {
                if rho >= jam_density {
                    0.0
                } else {
                    free_flow_speed * (1.0 - rho / jam_density)
                }
            }
        }
    }

    pub fn speed(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 || rho.is_nan() {
            return domain(format!("density must be non-negative, got {rho}"));
        }
        Ok(self.speed_unchecked(rho))
    }

    pub fn flow(&self, rho: f64) -> Result<f64> {
        Ok(rho * self.speed(rho)?)
    }

    /// Density range on which flow attains its maximum.
    pub fn critical_interval(&self) -> (f64, f64) {
        match *self {
            SpeedDensityModel::Triangular { free_flow_speed, wave_speed, jam_density } => {
                let c = wave_speed * jam_density / (free_flow_speed + wave_speed);
                (c, c)
            }
            SpeedDensityModel::Trapezoidal { rho_low, rho_high, .. } => (rho_low, rho_high),
            SpeedDensityModel::Linear { jam_density, .. } => (jam_density / 2.0, jam_density / 2.0),
        }
    }

    /// Argmax of flow; the plateau midpoint for the trapezoidal diagram.
    pub fn critical_density(&self) -> f64 {
        let (a, b) = self.critical_interval();
        0.5 * (a + b)
    }

    pub fn capacity(&self) -> f64 {
        let rho = self.critical_density();
        rho * self.speed_unchecked(rho)
    }
}
