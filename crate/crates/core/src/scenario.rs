//! Declarative scenario files: one TOML document per study, Amager defaults built in.

use crate::bathtub::{CohortState, NetworkParams};
use crate::control::{derive_seed, MpcConfig, ScenarioSet, SearchConfig};
use crate::demand::{init_surface, uniform_edges, DemandSurface, GbmParams};
use crate::error::{EvacError, Result};
use crate::flood::{build_risk_field, ArrivalMode, PolarGrid, RiskField, SurgeParams};
use crate::geometry::{
    default_grid, dumbbell_distribution, DiskZone, DumbbellZone, MixtureTables, Point, RayQuadrature,
    RiskComponent, TripLengthDistribution,
};
use crate::nfd::SpeedDensityModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Master seed; every scenario and realization seed derives from it.
    pub seed: u64,
    /// Monte Carlo demand scenarios per policy evaluation.
    pub scenarios: usize,
    #[serde(default)]
    pub zone: ZoneConfig,
    #[serde(default)]
    pub population: PopulationConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default = "amager_bridges")]
    pub bridges: Vec<BridgeConfig>,
    #[serde(default)]
    pub demand: DemandConfig,
    #[serde(default)]
    pub distribution: DistributionConfig,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub flood: FloodConfig,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub mpc: MpcSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ZoneConfig {
    Disk {
        radius_km: f64,
        /// Exit bearings measured counter-clockwise from east.
        exit_angles_deg: Vec<f64>,
    },
    Dumbbell {
        left_center: [f64; 2],
        right_center: [f64; 2],
        disk_radius: f64,
        corridor_half_width: f64,
        exit: [f64; 2],
        resolution: f64,
        bin_width: f64,
    },
}

impl Default for ZoneConfig {
    fn default() -> Self {
        ZoneConfig::Disk { radius_km: 5.54, exit_angles_deg: vec![92.9, 145.3, 194.3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub residents: f64,
    /// Vehicles per resident.
    pub motorization: f64,
    pub area_km2: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self { residents: 225_746.0, motorization: 0.6, area_km2: 96.29 }
    }
}

/// Network fundamental diagram as written in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NfdConfig {
    Triangular { free_flow_speed: f64, capacity: f64, jam_density: f64 },
    Linear { free_flow_speed: f64, jam_density: f64 },
    Trapezoidal { capacity: f64, rho_low: f64, rho_high: f64, jam_density: f64 },
}

impl NfdConfig {
    pub fn to_model(&self) -> Result<SpeedDensityModel> {
        match *self {
            NfdConfig::Triangular { free_flow_speed, capacity, jam_density } => {
                SpeedDensityModel::triangular_from_capacity(free_flow_speed, capacity, jam_density)
            }
            NfdConfig::Linear { free_flow_speed, jam_density } => SpeedDensityModel::linear(free_flow_speed, jam_density),
            NfdConfig::Trapezoidal { capacity, rho_low, rho_high, jam_density } => {
                SpeedDensityModel::trapezoidal(capacity, rho_low, rho_high, jam_density)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub lane_km: f64,
    pub dt_s: f64,
    pub horizon_h: f64,
    /// Minimum time headway used by the service-rate diagnostic.
    pub headway_s: f64,
    pub nfd: NfdConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            lane_km: 2442.1,
            dt_s: 10.0,
            horizon_h: 1.0,
            headway_s: 2.0,
            nfd: NfdConfig::Triangular { free_flow_speed: 65.0, capacity: 1600.0, jam_density: 120.0 },
        }
    }
}

/// Outbound bridge capacity under full contraflow, one lane kept for emergency use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    pub name: String,
    pub lanes_per_direction: u32,
    #[serde(default = "two")]
    pub directions: u32,
    #[serde(default = "one")]
    pub structures: u32,
    #[serde(default = "one")]
    pub reserved_lanes: u32,
    /// Discharge per lane, veh/h.
    pub lane_capacity: f64,
    /// Published capacity, veh/h, used in place of the formula when present.
    #[serde(default)]
    pub stated_capacity: Option<f64>,
}

fn one() -> u32 {
    1
}

fn two() -> u32 {
    2
}

impl BridgeConfig {
    pub fn formula_capacity(&self) -> f64 {
        let lanes = self.lanes_per_direction * self.directions * self.structures;
        lanes.saturating_sub(self.reserved_lanes) as f64 * self.lane_capacity
    }

    pub fn capacity(&self) -> f64 {
        self.stated_capacity.unwrap_or_else(|| self.formula_capacity())
    }
}

fn bridge(name: &str, lanes: u32, structures: u32, lane_capacity: f64, stated: f64) -> BridgeConfig {
    BridgeConfig {
        name: name.into(),
        lanes_per_direction: lanes,
        directions: 2,
        structures,
        reserved_lanes: 1,
        lane_capacity,
        stated_capacity: Some(stated),
    }
}

fn amager_bridges() -> Vec<BridgeConfig> {
    vec![
        bridge("E20", 4, 1, 2400.0, 16_800.0),
        bridge("Langebro", 6, 1, 2000.0, 22_000.0),
        bridge("Kalvebod", 3, 2, 2400.0, 31_200.0),
        bridge("Knippelsbro", 3, 1, 2000.0, 10_000.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandConfig {
    /// GBM drift per hour.
    pub drift: f64,
    /// GBM volatility per square-root hour.
    pub volatility: f64,
    /// Trip-length bins of the waiting-demand surface.
    pub bins: usize,
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self { drift: 0.0, volatility: 0.03, bins: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionConfig {
    /// Uniform share of the origin mixture used by simulate/optimize/mpc.
    pub lambda_mix: f64,
    /// Mixture weights tabulated by the distribution command and the tables.
    pub lambda_grid: Vec<f64>,
    /// Nodes of the distance grid.
    pub grid_nodes: usize,
    /// Rays of the planar quadrature for the risk-weighted component.
    pub rays: usize,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        Self { lambda_mix: 1.0, lambda_grid: vec![1.0, 2.0 / 3.0, 1.0 / 3.0], grid_nodes: 401, rays: 1440 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Weight of AVaR against the mean in the objective.
    pub weight: f64,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self { weight: 1.0 / 3.0, alpha: 0.8, alpha_grid: vec![0.8, 0.95, 0.99] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloodConfig {
    pub still_water_depth_m: f64,
    pub max_elevation_m: f64,
    /// Lower bound on arrival times before taking reciprocals, s.
    pub arrival_floor_s: f64,
    pub mode: ArrivalMode,
    pub radial_cells: usize,
    pub angular_cells: usize,
}

impl Default for FloodConfig {
    fn default() -> Self {
        Self {
            still_water_depth_m: 3.0,
            max_elevation_m: 10.0,
            arrival_floor_s: 60.0,
            mode: ArrivalMode::Inverted,
            radial_cells: 200,
            angular_cells: 360,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub grid_cutoff: usize,
    pub grid_switch: usize,
    pub polls: usize,
    pub max_evaluations: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        let s = SearchConfig::default();
        Self { grid_cutoff: s.grid_cutoff, grid_switch: s.grid_switch, polls: s.polls, max_evaluations: s.max_evaluations }
    }
}

impl From<SearchSection> for SearchConfig {
    fn from(s: SearchSection) -> Self {
        SearchConfig { grid_cutoff: s.grid_cutoff, grid_switch: s.grid_switch, polls: s.polls, max_evaluations: s.max_evaluations }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub update_min: f64,
    /// Look-ahead of each inner problem, h; absent means the remaining horizon.
    pub lookahead_h: Option<f64>,
    pub realizations: usize,
    pub inner_scenarios: usize,
    pub search: SearchSection,
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            update_min: 1.0,
            lookahead_h: None,
            realizations: 200,
            inner_scenarios: 10,
            search: SearchSection { grid_cutoff: 10, grid_switch: 10, polls: 30, max_evaluations: 400 },
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::amager()
    }
}

/// One bridge in the capacity report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeCapacity {
    pub name: String,
    pub formula: f64,
    pub stated: Option<f64>,
    pub used: f64,
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub bridges: Vec<BridgeCapacity>,
    pub total: f64,
    pub formula_total: f64,
    pub vehicles: f64,
    /// Lower bound on clearance, vehicles over total capacity, min.
    pub clearance_bound_min: f64,
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive, got {v}"));
    }
}

fn at_least(errs: &mut Vec<String>, name: &str, v: usize, min: usize) {
    if v < min {
        errs.push(format!("{name} must be at least {min}, got {v}"));
    }
}

impl ScenarioConfig {
    /// Amager island: three-exit disk, triangular NFD, Øresund surge.
    pub fn amager() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 20_240_611,
            scenarios: 500,
            zone: ZoneConfig::default(),
            population: PopulationConfig::default(),
            network: NetworkConfig::default(),
            bridges: amager_bridges(),
            demand: DemandConfig::default(),
            distribution: DistributionConfig::default(),
            risk: RiskConfig::default(),
            flood: FloodConfig::default(),
            search: SearchSection::default(),
            mpc: MpcSection::default(),
        }
    }

    /// Parses and validates a scenario document.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses a document after applying `key.path=value` overrides to it.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value =
            text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| config_error(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = doc.try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides to an already built configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::from_toml_with_overrides(&self.to_toml(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configuration serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            e.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        at_least(&mut e, "scenarios", self.scenarios, 1);
        match &self.zone {
            ZoneConfig::Disk { radius_km, exit_angles_deg } => {
                positive(&mut e, "zone.radius_km", *radius_km);
                if exit_angles_deg.is_empty() {
                    e.push("zone.exit_angles_deg must list at least one exit".into());
                } else if let Err(err) = DiskZone::from_degrees(*radius_km, exit_angles_deg) {
                    e.push(format!("zone: {err}"));
                }
            }
            ZoneConfig::Dumbbell { .. } => {
                if let Err(err) = self.dumbbell().and_then(|z| z.validate()) {
                    e.push(format!("zone: {err}"));
                }
            }
        }
        let p = &self.population;
        positive(&mut e, "population.residents", p.residents);
        positive(&mut e, "population.area_km2", p.area_km2);
        if !(p.motorization > 0.0 && p.motorization <= 1.0) {
            e.push(format!("population.motorization must lie in (0, 1], got {}", p.motorization));
        }
        let n = &self.network;
        positive(&mut e, "network.lane_km", n.lane_km);
        positive(&mut e, "network.dt_s", n.dt_s);
        positive(&mut e, "network.horizon_h", n.horizon_h);
        positive(&mut e, "network.headway_s", n.headway_s);
        if n.dt_s / 3600.0 > n.horizon_h {
            e.push("network.dt_s must not exceed the horizon".into());
        }
        if let Err(err) = n.nfd.to_model() {
            e.push(format!("network.nfd: {err}"));
        }
        if self.bridges.is_empty() {
            e.push("bridges must list at least one bridge".into());
        }
        for b in &self.bridges {
            positive(&mut e, &format!("bridges[{}].lane_capacity", b.name), b.lane_capacity);
            if let Some(s) = b.stated_capacity {
                positive(&mut e, &format!("bridges[{}].stated_capacity", b.name), s);
            }
            if b.capacity() <= 0.0 {
                e.push(format!("bridges[{}] has no usable capacity", b.name));
            }
        }
        let d = &self.demand;
        if !(d.volatility >= 0.0 && d.volatility.is_finite()) {
            e.push(format!("demand.volatility must be non-negative, got {}", d.volatility));
        }
        if !d.drift.is_finite() {
            e.push("demand.drift must be finite".into());
        }
        at_least(&mut e, "demand.bins", d.bins, 1);
        let m = &self.distribution;
        for (i, l) in std::iter::once(m.lambda_mix).chain(m.lambda_grid.iter().copied()).enumerate() {
            if !(0.0..=1.0).contains(&l) {
                let name = if i == 0 { "distribution.lambda_mix".to_string() } else { format!("distribution.lambda_grid[{}]", i - 1) };
                e.push(format!("{name} must lie in [0, 1], got {l}"));
            }
        }
        at_least(&mut e, "distribution.grid_nodes", m.grid_nodes, 3);
        at_least(&mut e, "distribution.rays", m.rays, 8);
        let r = &self.risk;
        if !(0.0..=1.0).contains(&r.weight) {
            e.push(format!("risk.weight must lie in [0, 1], got {}", r.weight));
        }
        for (name, a) in std::iter::once(("risk.alpha".to_string(), r.alpha))
            .chain(r.alpha_grid.iter().enumerate().map(|(i, a)| (format!("risk.alpha_grid[{i}]"), *a)))
        {
            if !(0.0..1.0).contains(&a) {
                e.push(format!("{name} must lie in [0, 1), got {a}"));
            }
        }
        let f = &self.flood;
        positive(&mut e, "flood.still_water_depth_m", f.still_water_depth_m);
        positive(&mut e, "flood.max_elevation_m", f.max_elevation_m);
        positive(&mut e, "flood.arrival_floor_s", f.arrival_floor_s);
        at_least(&mut e, "flood.radial_cells", f.radial_cells, 1);
        at_least(&mut e, "flood.angular_cells", f.angular_cells, 1);
        for (name, s) in [("search", &self.search), ("mpc.search", &self.mpc.search)] {
            at_least(&mut e, &format!("{name}.grid_cutoff"), s.grid_cutoff, 2);
            at_least(&mut e, &format!("{name}.grid_switch"), s.grid_switch, 2);
            if s.max_evaluations < s.grid_cutoff * s.grid_switch {
                e.push(format!("{name}.max_evaluations must cover the {}x{} grid", s.grid_cutoff, s.grid_switch));
            }
        }
        let c = &self.mpc;
        positive(&mut e, "mpc.update_min", c.update_min);
        if c.update_min * 60.0 < n.dt_s {
            e.push("mpc.update_min must be at least one time step".into());
        }
        if let Some(h) = c.lookahead_h {
            if !(h * 60.0 >= c.update_min) {
                e.push("mpc.lookahead_h must be at least one update step".into());
            }
        }
        at_least(&mut e, "mpc.realizations", c.realizations, 1);
        at_least(&mut e, "mpc.inner_scenarios", c.inner_scenarios, 1);
        if e.is_empty() {
            Ok(())
        } else {
            Err(EvacError::InvalidConfig(e))
        }
    }

    pub fn vehicles(&self) -> f64 {
        self.population.residents * self.population.motorization
    }

    pub fn exit_capacity(&self) -> f64 {
        self.bridges.iter().map(BridgeConfig::capacity).sum()
    }

    pub fn capacities(&self) -> CapacityReport {
        let bridges: Vec<BridgeCapacity> = self
            .bridges
            .iter()
            .map(|b| BridgeCapacity {
                name: b.name.clone(),
                formula: b.formula_capacity(),
                stated: b.stated_capacity,
                used: b.capacity(),
                mismatch: b.stated_capacity.is_some_and(|s| (s - b.formula_capacity()).abs() > 0.5),
            })
            .collect();
        let total = self.exit_capacity();
        CapacityReport {
            formula_total: bridges.iter().map(|b| b.formula).sum(),
            total,
            vehicles: self.vehicles(),
            clearance_bound_min: 60.0 * self.vehicles() / total,
            bridges,
        }
    }

    pub fn disk(&self) -> Result<DiskZone> {
        match &self.zone {
            ZoneConfig::Disk { radius_km, exit_angles_deg } => DiskZone::from_degrees(*radius_km, exit_angles_deg),
            ZoneConfig::Dumbbell { .. } => Err(config_error("this operation needs a disk zone".into())),
        }
    }

    pub fn dumbbell(&self) -> Result<DumbbellZone> {
        match &self.zone {
            ZoneConfig::Dumbbell { left_center, right_center, disk_radius, corridor_half_width, exit, resolution, bin_width } => {
                Ok(DumbbellZone {
                    left_center: Point::new(left_center[0], left_center[1]),
                    right_center: Point::new(right_center[0], right_center[1]),
                    disk_radius: *disk_radius,
                    corridor_half_width: *corridor_half_width,
                    exit: Point::new(exit[0], exit[1]),
                    resolution: *resolution,
                    bin_width: *bin_width,
                })
            }
            ZoneConfig::Disk { .. } => Err(config_error("this operation needs a dumbbell zone".into())),
        }
    }

    pub fn model(&self) -> Result<SpeedDensityModel> {
        self.network.nfd.to_model()
    }

    pub fn network_params(&self) -> Result<NetworkParams> {
        let p = NetworkParams {
            lane_km: self.network.lane_km,
            model: self.model()?,
            exit_capacity: self.exit_capacity(),
            dt: self.network.dt_s / 3600.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gbm(&self) -> GbmParams {
        GbmParams { drift: self.demand.drift, volatility: self.demand.volatility }
    }

    pub fn surge(&self) -> Result<SurgeParams> {
        let radius = match &self.zone {
            ZoneConfig::Disk { radius_km, .. } => *radius_km,
            ZoneConfig::Dumbbell { .. } => return Err(config_error("the flood model needs a disk zone".into())),
        };
        SurgeParams::new(self.flood.still_water_depth_m, self.flood.max_elevation_m, radius)
    }

    pub fn risk_field(&self) -> Result<RiskField> {
        let p = self.surge()?;
        let grid = PolarGrid { radial: self.flood.radial_cells, angular: self.flood.angular_cells };
        build_risk_field(&p, p.radius / 1000.0, grid, self.flood.arrival_floor_s, self.flood.mode)
    }

    /// Uniform and risk-weighted CDF tables; the risk part only when some weight needs it.
    pub fn mixture_tables(&self, lambdas: &[f64]) -> Result<MixtureTables> {
        let zone = self.disk()?;
        let grid = default_grid(&zone, self.distribution.grid_nodes);
        if lambdas.iter().all(|&l| l == 1.0) {
            return MixtureTables::compute(&zone, RiskComponent::None, &grid);
        }
        let field = self.risk_field()?;
        let quad = RayQuadrature { rays: self.distribution.rays, ..RayQuadrature::default() };
        MixtureTables::compute(&zone, RiskComponent::Planar(&field, quad), &grid)
    }

    /// Trip-length distribution of the zone at mixture weight `lambda_mix`.
    pub fn distribution(&self, lambda_mix: f64) -> Result<TripLengthDistribution> {
        match &self.zone {
            ZoneConfig::Disk { .. } => self.mixture_tables(&[lambda_mix])?.distribution(lambda_mix),
            ZoneConfig::Dumbbell { .. } if lambda_mix == 1.0 => dumbbell_distribution(&self.dumbbell()?),
            ZoneConfig::Dumbbell { .. } => Err(config_error("the dumbbell zone only supports lambda_mix = 1".into())),
        }
    }

    /// Waiting demand at time zero, binned over the distribution support.
    pub fn surface(&self, dist: &TripLengthDistribution) -> Result<DemandSurface> {
        init_surface(self.vehicles(), dist, &uniform_edges(dist.max_distance(), self.demand.bins))
    }

    /// Seeds of the Monte Carlo scenarios, derived from the master seed.
    pub fn scenario_seeds(&self) -> Vec<u64> {
        (0..self.scenarios as u64).map(|i| derive_seed(self.seed, i)).collect()
    }

    /// Scenario set for the distribution at `lambda_mix`, starting from an empty network.
    pub fn scenario_set(&self, dist: &TripLengthDistribution) -> Result<ScenarioSet> {
        ScenarioSet::new(
            self.scenario_seeds(),
            self.gbm(),
            self.surface(dist)?,
            self.network_params()?,
            self.network.horizon_h,
            CohortState::new(),
        )
    }

    pub fn search_config(&self) -> SearchConfig {
        self.search.into()
    }

    pub fn mpc_config(&self) -> MpcConfig {
        MpcConfig {
            update_step: self.mpc.update_min / 60.0,
            lookahead: self.mpc.lookahead_h,
            horizon: self.network.horizon_h,
            realizations: self.mpc.realizations,
            inner_scenarios: self.mpc.inner_scenarios,
            search: self.mpc.search.into(),
            weight: self.risk.weight,
            alpha: self.risk.alpha,
            seed: self.seed,
        }
    }
}

fn config_error(msg: String) -> EvacError {
    EvacError::InvalidConfig(vec![msg])
}

/// Sets `a.b.c = value` in a TOML tree; the value is parsed as TOML, falling back to a string.
pub fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{assignment}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("override `{assignment}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = doc;
    for k in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| config_error(format!("override `{path}`: `{k}` is not inside a table")))?;
        node = table.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| config_error(format!("override `{path}` does not address a table entry")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ScenarioConfig::amager();
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn sections_default_when_missing() {
        let cfg = ScenarioConfig::from_toml("schema_version = 1\nseed = 7\nscenarios = 3\n").unwrap();
        assert_eq!(cfg.network, NetworkConfig::default());
        assert_eq!(cfg.bridges.len(), 4);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn vehicles_and_capacity() {
        let cfg = ScenarioConfig::amager();
        assert!((cfg.vehicles() - 135_447.6).abs() < 1e-6);
        let rep = cfg.capacities();
        assert_eq!(rep.total, 80_000.0);
        let formula: Vec<f64> = rep.bridges.iter().map(|b| b.formula).collect();
        assert_eq!(formula, vec![16_800.0, 22_000.0, 26_400.0, 10_000.0]);
        let flagged: Vec<&str> = rep.bridges.iter().filter(|b| b.mismatch).map(|b| b.name.as_str()).collect();
        assert_eq!(flagged, vec!["Kalvebod"]);
        assert!((rep.clearance_bound_min - 101.59).abs() < 0.01);
    }

    #[test]
    fn validation_lists_every_violation() {
        let text = "schema_version = 1\nseed = 1\nscenarios = 0\n[zone]\nkind = \"disk\"\nradius_km = 5.0\nexit_angles_deg = []\n[risk]\nalpha = 1.0\n";
        let Err(EvacError::InvalidConfig(v)) = ScenarioConfig::from_toml(text) else { panic!("expected schema error") };
        assert!(v.iter().any(|m| m.contains("scenarios")));
        assert!(v.iter().any(|m| m.contains("exit_angles_deg")));
        assert!(v.iter().any(|m| m.contains("risk.alpha")));
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert!(ScenarioConfig::from_toml("schema_version = 1\nseed = 1\nscenarios = 1\nbogus = 2\n").is_err());
        assert!(ScenarioConfig::from_toml("schema_version = 9\nseed = 1\nscenarios = 1\n").is_err());
    }

    #[test]
    fn overrides_apply_before_validation() {
        let base = ScenarioConfig::amager();
        let cfg = base
            .with_overrides(&["demand.volatility=0.1".into(), "seed=42".into(), "flood.mode=closed-form".into()])
            .unwrap();
        assert_eq!(cfg.demand.volatility, 0.1);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.flood.mode, ArrivalMode::ClosedForm);
        assert_ne!(cfg.hash(), base.hash());
        assert!(base.with_overrides(&["risk.alpha=2".into()]).is_err());
        assert!(base.with_overrides(&["novalue".into()]).is_err());
    }

    #[test]
    fn dumbbell_zone_parses() {
        let text = "schema_version = 1\nseed = 1\nscenarios = 1\n[zone]\nkind = \"dumbbell\"\nleft_center = [-3.0, 0.0]\nright_center = [3.0, 0.0]\ndisk_radius = 1.0\ncorridor_half_width = 0.1\nexit = [-3.0, 0.0]\nresolution = 0.02\nbin_width = 0.05\n";
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.dumbbell().unwrap(), DumbbellZone::default());
        assert!(cfg.surge().is_err());
    }
}
