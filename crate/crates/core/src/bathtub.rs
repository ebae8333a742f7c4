//! Generalized bathtub dynamics with Lagrangian cohorts.
//!
//! Every active vehicle moves at the common speed `V(active / L)`. Instead of
//! decrementing each cohort's remaining distance, the state keeps a network
//! odometer (distance driven by any vehicle since the start) and stores for
//! each cohort the odometer reading at which it exits. Advancing time is then
//! O(1) and the next completion is the smallest stored reading.

use crate::error::{domain, Result};
use crate::nfd::SpeedDensityModel;
use serde::Serialize;

/// A group of vehicles sharing the same remaining trip length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cohort {
    pub count: f64,
    /// Remaining distance, km.
    pub remaining: f64,
}

impl Cohort {
    pub fn new(count: f64, remaining: f64) -> Self {
        Self { count, remaining }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Total lane length, lane-km.
    pub lane_km: f64,
    pub model: SpeedDensityModel,
    /// Perimeter exit capacity, veh/h (diagnostic only).
    pub exit_capacity: f64,
    /// Nominal time step, h.
    pub dt: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lane_km > 0.0 && self.dt > 0.0 && self.exit_capacity > 0.0) {
            return domain("lane length, time step and exit capacity must be positive");
        }
        self.model.validate()
    }

    #[inline]
    pub fn speed(&self, active: f64) -> f64 {
        self.model.speed_unchecked(active / self.lane_km)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub active: f64,
    pub waiting: f64,
    pub completed: f64,
    /// Vehicles ever present in the network (initial plus injected).
    pub entered: f64,
    pub speed: f64,
    /// Cumulative delay, veh·h.
    pub delay: f64,
}

/// Receives trace points; `()` discards them.
pub trait TraceSink {
    fn record(&mut self, point: TracePoint);
}

impl TraceSink for () {
    #[inline]
    fn record(&mut self, _point: TracePoint) {}
}

impl TraceSink for Vec<TracePoint> {
    fn record(&mut self, point: TracePoint) {
        self.push(point);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CohortState {
    /// `(exit odometer, count)` sorted by decreasing exit odometer.
    queue: Vec<(f64, f64)>,
    odometer: f64,
    active: f64,
    completed: f64,
    initial: f64,
    injected: f64,
    clock: f64,
    delay: f64,
}

impl CohortState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State holding `cohorts` at time zero.
    pub fn with_cohorts(cohorts: &[Cohort]) -> Result<Self> {
        let mut s = Self::new();
        s.push(cohorts)?;
        s.initial = s.injected;
        s.injected = 0.0;
        Ok(s)
    }

    fn push(&mut self, cohorts: &[Cohort]) -> Result<()> {
        for c in cohorts {
            if !(c.count >= 0.0) {
                return domain(format!("cohort count must be non-negative, got {}", c.count));
            }
            if !(c.remaining > 0.0) {
                return domain(format!("cohort distance must be positive, got {}", c.remaining));
            }
        }
        let before = self.queue.len();
        for c in cohorts.iter().filter(|c| c.count > 0.0) {
            self.queue.push((self.odometer + c.remaining, c.count));
            self.active += c.count;
            self.injected += c.count;
        }
        if self.queue.len() > before {
            self.queue.sort_by(|a, b| b.0.total_cmp(&a.0));
        }
        Ok(())
    }

    /// Adds cohorts to the network at the current clock.
    pub fn inject(&mut self, cohorts: &[Cohort]) -> Result<()> {
        self.push(cohorts)
    }

    pub fn active(&self) -> f64 {
        self.active
    }

    pub fn completed(&self) -> f64 {
        self.completed
    }

    /// Vehicles present at construction plus everything injected since.
    pub fn entered(&self) -> f64 {
        self.initial + self.injected
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Active cohorts with their current remaining distances, nearest exit first.
    pub fn cohorts(&self) -> impl Iterator<Item = Cohort> + '_ {
        self.queue.iter().rev().map(|&(exit, count)| Cohort::new(count, exit - self.odometer))
    }

    /// Relative gap in `entered = active + completed`.
    pub fn conservation_error(&self) -> f64 {
        (self.entered() - self.active - self.completed).abs() / self.entered().max(1.0)
    }

    fn point(&self, params: &NetworkParams, waiting: f64) -> TracePoint {
        TracePoint {
            t: self.clock,
            active: self.active,
            waiting,
            completed: self.completed,
            entered: self.entered(),
            speed: params.speed(self.active),
            delay: self.delay,
        }
    }

    /// Advances by at most `max_dt`, stopping early at the next completion.
    ///
    /// Returns the time actually advanced. Cohorts finishing at the stopping
    /// point are completed before returning.
    pub fn advance_to_event(&mut self, params: &NetworkParams, max_dt: f64, waiting: f64) -> f64 {
        let v = params.speed(self.active);
        let Some(&(next_exit, _)) = self.queue.last() else {
            self.clock += max_dt;
            self.delay += waiting * max_dt;
            return max_dt;
        };
        let gap = next_exit - self.odometer;
        let hits = v > 0.0 && v * max_dt >= gap;
        let taken = if hits { gap / v } else { max_dt };
        self.delay += (self.active + waiting) * taken;
        self.clock += taken;
        if hits {
            self.odometer = next_exit;
            let tol = 1e-12 * self.odometer.abs().max(1.0);
            while let Some(&(exit, count)) = self.queue.last() {
                if exit > self.odometer + tol {
                    break;
                }
                self.queue.pop();
                self.active -= count;
                self.completed += count;
            }
            if self.queue.is_empty() {
                // Absorb round-off so an empty network reports exactly zero.
                self.completed += self.active;
                self.active = 0.0;
            }
        } else {
            self.odometer += v * taken;
        }
        taken
    }

    /// One time step: inject `inflow`, then move all vehicles, splitting at completions.
    pub fn step(
        &mut self,
        params: &NetworkParams,
        inflow: &[Cohort],
        dt: f64,
        waiting: f64,
        sink: &mut impl TraceSink,
    ) -> Result<()> {
        if !(dt > 0.0) || dt > params.dt * (1.0 + 1e-12) {
            return domain(format!("step {dt} must lie in (0, {}]", params.dt));
        }
        self.push(inflow)?;
        let mut left = dt;
        while left > 1e-15 * dt {
            let taken = self.advance_to_event(params, left, waiting);
            left -= taken;
            sink.record(self.point(params, waiting));
        }
        Ok(())
    }

    /// Runs `step` with `dt` subdivided to respect the nominal step.
    pub fn run_for(
        &mut self,
        params: &NetworkParams,
        inflow: &[Cohort],
        duration: f64,
        waiting: f64,
        sink: &mut impl TraceSink,
    ) -> Result<()> {
        let mut left = duration;
        let mut first = true;
        while left > 1e-12 * params.dt {
            let dt = left.min(params.dt);
            let batch: &[Cohort] = if first { inflow } else { &[] };
            self.step(params, batch, dt, waiting, sink)?;
            first = false;
            left -= dt;
        }
        if first {
            self.push(inflow)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub points: Vec<TracePoint>,
    /// Cumulative delay over the horizon, veh·h.
    pub delay: f64,
}

/// Simulates a fixed release schedule over `[0, horizon]`.
///
/// Steps are shortened so that scheduled injections fall on step boundaries.
/// `waiting` gives the count of vehicles still held back at time `t`.
pub fn simulate(
    initial: CohortState,
    params: &NetworkParams,
    schedule: &[(f64, Vec<Cohort>)],
    waiting: impl Fn(f64) -> f64,
    horizon: f64,
) -> Result<SimulationTrace> {
    params.validate()?;
    if schedule.windows(2).any(|w| w[1].0 < w[0].0) {
        return domain("release schedule times must be non-decreasing");
    }
    if let Some((t, _)) = schedule.iter().find(|(t, _)| *t < 0.0 || *t > horizon) {
        return domain(format!("release time {t} lies outside [0, {horizon}]"));
    }
    let mut state = initial;
    let mut points = vec![state.point(params, waiting(state.clock))];
    let mut next = 0;
    let eps = 1e-12 * horizon.max(1.0);
    while state.clock < horizon - eps {
        let t = state.clock;
        let mut inflow = Vec::new();
        while next < schedule.len() && schedule[next].0 <= t + eps {
            inflow.extend_from_slice(&schedule[next].1);
            next += 1;
        }
        let mut dt = params.dt.min(horizon - t);
        if next < schedule.len() {
            dt = dt.min(schedule[next].0 - t);
        }
        state.step(params, &inflow, dt, waiting(t), &mut points)?;
    }
    let delay = state.delay;
    Ok(SimulationTrace { points, delay })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitRateCheck {
    pub flagged: bool,
    /// Highest completion rate over any window, veh/h.
    pub max_rate: f64,
    /// `max_rate - capacity` when positive, else 0.
    pub max_exceedance: f64,
}

/// Compares window-averaged completion rates with the perimeter capacity.
pub fn exit_rate_check(trace: &SimulationTrace, capacity: f64, window: f64) -> ExitRateCheck {
    let pts = &trace.points;
    let mut max_rate: f64 = 0.0;
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        let completed_at = |t: f64| {
            let i = pts.partition_point(|p| p.t <= t);
            if i == 0 { pts[0].completed } else { pts[i - 1].completed }
        };
        let mut t = first.t;
        while t < last.t {
            let end = (t + window).min(last.t);
            let rate = (completed_at(end) - completed_at(t)) / (end - t);
            max_rate = max_rate.max(rate);
            t = end;
        }
    }
    let exceed = (max_rate - capacity).max(0.0);
    ExitRateCheck { flagged: exceed > 0.0, max_rate, max_exceedance: exceed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_unit() -> NetworkParams {
        NetworkParams {
            lane_km: 1.0,
            model: SpeedDensityModel::linear(1.0, 1.0).unwrap(),
            exit_capacity: 1e9,
            dt: 0.1,
        }
    }

    #[test]
    fn empty_state_is_inert() {
        let p = linear_unit();
        let mut s = CohortState::new();
        s.step(&p, &[], 0.1, 0.0, &mut ()).unwrap();
        assert_eq!(s.delay(), 0.0);
        assert_eq!(s.active(), 0.0);
    }

    #[test]
    fn lone_cohorts_travel_at_two_thirds() {
        let p = linear_unit();
        for &(len, expect) in &[(1.0, 1.5), (10.0, 15.0)] {
            let mut s = CohortState::with_cohorts(&[Cohort::new(1.0 / 3.0, len)]).unwrap();
            let mut trace = Vec::new();
            while !s.is_empty() {
                s.step(&p, &[], 0.1, 0.0, &mut trace).unwrap();
            }
            let done = trace.iter().find(|q| q.active == 0.0).unwrap();
            assert!((done.t - expect).abs() < 1e-9, "{}", done.t);
        }
    }

    #[test]
    fn rejects_negative_inflow_and_oversized_step() {
        let p = linear_unit();
        let mut s = CohortState::new();
        assert!(s.step(&p, &[Cohort::new(-1.0, 1.0)], 0.1, 0.0, &mut ()).is_err());
        assert!(s.step(&p, &[], 0.2, 0.0, &mut ()).is_err());
    }

    #[test]
    fn gridlock_is_legal() {
        let p = linear_unit();
        let mut s = CohortState::with_cohorts(&[Cohort::new(2.0, 1.0)]).unwrap();
        s.step(&p, &[], 0.1, 0.0, &mut ()).unwrap();
        assert_eq!(s.active(), 2.0);
        assert!((s.delay() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn simulate_zero_demand() {
        let p = linear_unit();
        let tr = simulate(CohortState::new(), &p, &[], |_| 0.0, 2.0).unwrap();
        assert_eq!(tr.delay, 0.0);
        assert!(tr.points.iter().all(|q| q.active == 0.0));
    }

    #[test]
    fn simulate_rejects_unsorted_schedule() {
        let p = linear_unit();
        let sched = vec![(1.0, vec![Cohort::new(0.1, 1.0)]), (0.5, vec![])];
        assert!(simulate(CohortState::new(), &p, &sched, |_| 0.0, 2.0).is_err());
    }

    #[test]
    fn exit_rate_flags_spikes() {
        let p = linear_unit();
        let tr = simulate(CohortState::with_cohorts(&[Cohort::new(0.5, 0.01)]).unwrap(), &p, &[], |_| 0.0, 1.0).unwrap();
        assert!(exit_rate_check(&tr, 1.0, 0.1).flagged);
        assert!(!exit_rate_check(&tr, 100.0, 0.1).flagged);
    }

    #[test]
    fn constant_speed_completion_is_exact() {
        // Density stays below the critical value of a triangular diagram: free-flow speed throughout.
        let p = NetworkParams {
            lane_km: 100.0,
            model: SpeedDensityModel::triangular_from_capacity(60.0, 1800.0, 150.0).unwrap(),
            exit_capacity: 1e9,
            dt: 1.0 / 360.0,
        };
        let s = CohortState::with_cohorts(&[Cohort::new(10.0, 3.3), Cohort::new(5.0, 7.77)]).unwrap();
        let tr = simulate(s, &p, &[], |_| 0.0, 1.0).unwrap();
        let t1 = tr.points.iter().find(|q| q.completed >= 10.0).unwrap().t;
        let t2 = tr.points.iter().find(|q| q.completed >= 15.0).unwrap().t;
        assert!((t1 - 3.3 / 60.0).abs() < 1e-12);
        assert!((t2 - 7.77 / 60.0).abs() < 1e-12);
    }

    fn schedule_strategy() -> impl Strategy<Value = Vec<(f64, Vec<Cohort>)>> {
        prop::collection::vec(
            (0.0f64..2.0, prop::collection::vec((0.0f64..0.3, 0.1f64..5.0), 1..4)),
            0..6,
        )
        .prop_map(|mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v.into_iter()
                .map(|(t, cs)| (t, cs.into_iter().map(|(n, l)| Cohort::new(n, l)).collect()))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn conservation_on_every_trace_point(sched in schedule_strategy()) {
            let p = linear_unit();
            let tr = simulate(CohortState::new(), &p, &sched, |_| 0.0, 3.0).unwrap();
            for q in &tr.points {
                prop_assert!((q.entered - q.active - q.completed).abs() <= 1e-9 * q.entered.max(1.0));
                prop_assert!(q.active >= 0.0);
            }
        }

        #[test]
        fn extra_inflow_never_reduces_delay(sched in schedule_strategy(), extra in (0.0f64..2.0, 0.0f64..0.3, 0.1f64..5.0)) {
            let p = linear_unit();
            let base = simulate(CohortState::new(), &p, &sched, |_| 0.0, 3.0).unwrap().delay;
            let mut more = sched.clone();
            more.push((extra.0, vec![Cohort::new(extra.1, extra.2)]));
            more.sort_by(|a, b| a.0.total_cmp(&b.0));
            let bigger = simulate(CohortState::new(), &p, &more, |_| 0.0, 3.0).unwrap().delay;
            prop_assert!(bigger >= base - 1e-9);
        }

        #[test]
        fn trapezoid_of_trace_matches_delay(sched in schedule_strategy()) {
            let p = linear_unit();
            let tr = simulate(CohortState::new(), &p, &sched, |t| if t < 1.0 { 0.2 } else { 0.0 }, 3.0).unwrap();
            let trap: f64 = tr.points.windows(2).map(|w| 0.5 * (w[0].active + w[0].waiting + w[1].active + w[1].waiting) * (w[1].t - w[0].t)).sum();
            // Each jump of the integrand costs at most half a step in the trapezoid rule.
            let entered = tr.points.last().unwrap().entered;
            prop_assert!((trap - tr.delay).abs() <= (entered + 0.2) * p.dt + 1e-9);
        }
    }
}
