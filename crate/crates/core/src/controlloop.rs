//! Closed-loop simulation of the control service: periodic re-solves, the
//! request/response messages, load and request events, drone travel and the
//! staleness comparison.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{direction_to, project_feasible, Direction, Location3D};
use crate::netmodel::{evaluate_objective, select_serving_cell, AppRequest, NetworkSnapshot};
use crate::solver::{solve_cdcp, Solution, SolverConfig};

/// Drone-side request message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneRequest {
    pub poi: Location3D,
    pub dis_max: f64,
    pub rate_app: f64,
}

impl DroneRequest {
    /// Completes the message with the operator-side limits.
    pub fn into_app_request(self, min_altitude: f64, sinr_min: f64) -> AppRequest {
        AppRequest {
            poi: self.poi,
            dis_max: self.dis_max,
            rate_app: self.rate_app,
            min_altitude,
            sinr_min,
        }
    }
}

impl From<&AppRequest> for DroneRequest {
    fn from(r: &AppRequest) -> Self {
        Self {
            poi: r.poi,
            dis_max: r.dis_max,
            rate_app: r.rate_app,
        }
    }
}

/// Control-service answer; keys are short to keep the message small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlResponse {
    #[serde(rename = "loc")]
    pub location: Location3D,
    #[serde(rename = "dir")]
    pub direction: Direction,
    /// Drone uplink capacity at the answer, bits/s.
    #[serde(rename = "cap")]
    pub expected_uav_capacity: f64,
    /// QoS relaxation, dB.
    #[serde(rename = "relax")]
    pub relaxation: f64,
}

impl ControlResponse {
    pub fn to_wire(&self) -> String {
        serde_json::to_string(self).expect("plain numeric message")
    }
}

pub fn build_response(solution: &Solution, _request: &AppRequest) -> ControlResponse {
    ControlResponse {
        location: solution.location,
        direction: solution.direction,
        expected_uav_capacity: solution.uav_capacity,
        relaxation: solution.relaxation_applied,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    LoadChange { cell: String, load: f64 },
    RequestChange { request: AppRequest },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEvent {
    /// Seconds from the start of the timeline.
    pub time: f64,
    pub kind: EventKind,
}

impl TimelineEvent {
    pub fn describe(&self) -> String {
        match &self.kind {
            EventKind::LoadChange { cell, load } => format!("load {cell}={load}"),
            EventKind::RequestChange { request } => {
                format!("request poi=({}, {}, {})", request.poi.x, request.poi.y, request.poi.z)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Re-solve period, seconds.
    pub interval: f64,
    /// Drone travel speed, m/s.
    pub cruise_speed: f64,
    pub horizon: f64,
    /// Delay between a boundary and the drone receiving its response, seconds.
    pub latency: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            interval: 60.0,
            cruise_speed: 20.0,
            horizon: 120.0,
            latency: 0.0,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval > 0.0) || !self.interval.is_finite() {
            return Err(CdcpError::invalid("loop.interval", "must be positive"));
        }
        if !(self.cruise_speed > 0.0) || !self.cruise_speed.is_finite() {
            return Err(CdcpError::invalid("loop.cruise_speed", "must be positive"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(CdcpError::invalid("loop.horizon", "must be non-negative"));
        }
        if !(self.latency >= 0.0) || !self.latency.is_finite() {
            return Err(CdcpError::invalid("loop.latency", "must be non-negative"));
        }
        Ok(())
    }
}

/// What the control service knows at one instant.
#[derive(Debug, Clone)]
pub struct LoopState {
    pub snapshot: NetworkSnapshot,
    pub request: AppRequest,
}

/// Pure transition: a load change replaces one cell's load, a request change
/// swaps the active request.
pub fn apply_event(state: &LoopState, event: &TimelineEvent) -> Result<LoopState> {
    match &event.kind {
        EventKind::LoadChange { cell, load } => {
            let j = state
                .snapshot
                .index_of(cell)
                .ok_or_else(|| CdcpError::UnknownCell(cell.clone()))?;
            let mut loads: Vec<f64> = (0..state.snapshot.len()).map(|i| state.snapshot.state(i).load).collect();
            loads[j] = *load;
            Ok(LoopState {
                snapshot: state.snapshot.with_loads(&loads)?,
                request: state.request,
            })
        }
        EventKind::RequestChange { request } => {
            request.validate()?;
            Ok(LoopState {
                snapshot: state.snapshot.clone(),
                request: *request,
            })
        }
    }
}

/// Checks event times, ordering and cell references against `snapshot`.
pub fn validate_events(snapshot: &NetworkSnapshot, events: &[TimelineEvent], horizon: f64) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        if !(e.time >= 0.0) || !e.time.is_finite() {
            return Err(CdcpError::invalid(format!("events[{i}].time"), "must be non-negative"));
        }
        if i > 0 && e.time < events[i - 1].time {
            return Err(CdcpError::invalid(format!("events[{i}].time"), "events must be sorted by time"));
        }
        if e.time > horizon {
            return Err(CdcpError::invalid(format!("events[{i}].time"), "must not exceed the horizon"));
        }
        match &e.kind {
            EventKind::LoadChange { cell, load } => {
                if snapshot.index_of(cell).is_none() {
                    return Err(CdcpError::UnknownCell(cell.clone()));
                }
                if !(*load >= 0.0) || !load.is_finite() {
                    return Err(CdcpError::invalid(format!("events[{i}].load"), "must be non-negative"));
                }
            }
            EventKind::RequestChange { request } => request.validate()?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub time: f64,
    /// Network objective at the drone's actual pose, bits/s.
    pub objective: f64,
    pub location: Location3D,
    pub direction: Direction,
    pub serving: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    /// Boundary time of the solve.
    pub time: f64,
    pub response: ControlResponse,
    pub objective: f64,
    pub feasible: bool,
    pub serving: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMarker {
    pub time: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TimelineReport {
    pub samples: Vec<Sample>,
    pub intervals: Vec<IntervalRecord>,
    pub events: Vec<EventMarker>,
}

/// Straight-line leg toward the commanded point.
#[derive(Debug, Clone, Copy)]
struct Leg {
    from: Location3D,
    to: Location3D,
    start: f64,
}

impl Leg {
    fn position(&self, t: f64, speed: f64) -> Location3D {
        let total = self.from.distance(&self.to);
        let travelled = speed * (t - self.start).max(0.0);
        if total == 0.0 || travelled >= total {
            return self.to;
        }
        let f = travelled / total;
        Location3D::new(
            self.from.x + f * (self.to.x - self.from.x),
            self.from.y + f * (self.to.y - self.from.y),
            self.from.z + f * (self.to.z - self.from.z),
        )
    }
}

/// Simulates the loop at one-second resolution over `[0, horizon)`.
///
/// At each boundary `k·interval` the current state is solved and the
/// response reaches the drone `latency` seconds later; events landing
/// mid-interval only take effect at the next boundary. Before the first
/// response the drone hovers at the projected POI facing its serving station.
pub fn run_timeline(
    initial: &LoopState,
    events: &[TimelineEvent],
    loop_config: &LoopConfig,
    solver: &SolverConfig,
) -> Result<TimelineReport> {
    loop_config.validate()?;
    initial.request.validate()?;
    validate_events(&initial.snapshot, events, loop_config.horizon)?;
    let speed = loop_config.cruise_speed;

    let mut state = initial.clone();
    let start = project_feasible(state.request.poi, &state.request.region());
    let mut serving = select_serving_cell(&state.snapshot, start);
    let mut direction = direction_to(start, state.snapshot.station(serving).location)
        .unwrap_or(Direction::new(0.0, FRAC_PI_2));
    let mut leg = Leg {
        from: start,
        to: start,
        start: 0.0,
    };
    let mut report = TimelineReport::default();
    let mut next_event = 0;
    let mut next_boundary = 0usize;
    let mut pending: Option<(f64, Solution)> = None;

    let samples = loop_config.horizon.ceil() as usize;
    for second in 0..samples {
        let t = second as f64;
        loop {
            // earliest of: event, boundary, activation; ties in that order
            let te = events.get(next_event).map_or(f64::INFINITY, |e| e.time);
            let b = next_boundary as f64 * loop_config.interval;
            let tb = if b < loop_config.horizon { b } else { f64::INFINITY };
            let ta = pending.as_ref().map_or(f64::INFINITY, |(at, _)| *at);
            let now = te.min(tb).min(ta);
            if now > t {
                break;
            }
            if te == now {
                let e = &events[next_event];
                state = apply_event(&state, e)?;
                report.events.push(EventMarker {
                    time: e.time,
                    description: e.describe(),
                });
                next_event += 1;
            } else if tb == now {
                let solution = solve_cdcp(&state.snapshot, &state.request, solver)?;
                report.intervals.push(IntervalRecord {
                    time: tb,
                    response: build_response(&solution, &state.request),
                    objective: solution.objective,
                    feasible: solution.feasible,
                    serving: state.snapshot.station(solution.serving).id.clone(),
                });
                pending = Some((tb + loop_config.latency, solution));
                next_boundary += 1;
            } else {
                let (at, solution) = pending.take().expect("activation pending");
                leg = Leg {
                    from: leg.position(at, speed),
                    to: solution.location,
                    start: at,
                };
                direction = solution.direction;
                serving = solution.serving;
            }
        }
        let location = leg.position(t, speed);
        report.samples.push(Sample {
            time: t,
            objective: evaluate_objective(&state.snapshot, serving, location, direction),
            location,
            direction,
            serving: state.snapshot.station(serving).id.clone(),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Staleness {
    /// Objective of the pre-change answer under post-change loads, at its
    /// settled position.
    pub stale_objective: f64,
    /// Objective of a fresh solve under post-change loads.
    pub fresh_objective: f64,
    /// `(fresh − stale) / fresh` in percent.
    pub gap_percent: f64,
}

/// Cost of keeping the pre-change answer after one load shift: `events`
/// are load changes that all land at the same instant.
pub fn staleness_gap(initial: &LoopState, events: &[TimelineEvent], solver: &SolverConfig) -> Result<Staleness> {
    let single_shift = !events.is_empty()
        && events
            .iter()
            .all(|e| matches!(e.kind, EventKind::LoadChange { .. }) && e.time == events[0].time);
    if !single_shift {
        return Err(CdcpError::invalid("events", "one load shift (load changes at a single time) is required"));
    }
    let stale = solve_cdcp(&initial.snapshot, &initial.request, solver)?;
    let post = events.iter().try_fold(initial.clone(), |st, e| apply_event(&st, e))?;
    let fresh = solve_cdcp(&post.snapshot, &post.request, solver)?;
    let stale_objective = evaluate_objective(&post.snapshot, stale.serving, stale.location, stale.direction);
    Ok(Staleness {
        stale_objective,
        fresh_objective: fresh.objective,
        gap_percent: (fresh.objective - stale_objective) / fresh.objective * 100.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{BaseStation, CellState};
    use crate::radio::{AntennaPattern, NoiseModel, PathLossParams};

    fn state() -> LoopState {
        let cells = [("s", 0.0, 0.0, 4.0), ("n1", 1200.0, 900.0, 6.0), ("n2", 1000.0, -1300.0, 6.0)]
            .iter()
            .map(|&(id, x, y, load)| {
                (
                    BaseStation {
                        id: id.to_string(),
                        location: Location3D::new(x, y, 30.0),
                        bandwidth: 1e7,
                        pathloss: PathLossParams::default(),
                    },
                    CellState::with_load(load),
                )
            })
            .collect();
        LoopState {
            snapshot: NetworkSnapshot::new(cells, NoiseModel::default(), 23.0, AntennaPattern::default()).unwrap(),
            request: AppRequest {
                poi: Location3D::new(150.0, 40.0, 60.0),
                dis_max: 80.0,
                rate_app: 1e6,
                min_altitude: 20.0,
                sinr_min: 5.0,
            },
        }
    }

    fn load(time: f64, cell: &str, load: f64) -> TimelineEvent {
        TimelineEvent {
            time,
            kind: EventKind::LoadChange {
                cell: cell.to_string(),
                load,
            },
        }
    }

    fn config(interval: f64, horizon: f64) -> LoopConfig {
        LoopConfig {
            interval,
            horizon,
            ..LoopConfig::default()
        }
    }

    #[test]
    fn stationary_without_events() {
        let r = run_timeline(&state(), &[], &config(30.0, 60.0), &SolverConfig::default()).unwrap();
        assert_eq!(r.intervals.len(), 2);
        assert_eq!(r.intervals[0].response, r.intervals[1].response);
        assert_eq!(r.samples.len(), 60);
    }

    #[test]
    fn mid_interval_event_waits_for_boundary() {
        let events = [load(45.0, "n1", 0.0)];
        let r = run_timeline(&state(), &events, &config(30.0, 90.0), &SolverConfig::default()).unwrap();
        assert_eq!(r.intervals.len(), 3);
        assert_eq!(r.intervals[0].response, r.intervals[1].response);
        assert_ne!(r.intervals[1].response, r.intervals[2].response);
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.events[0].time, 45.0);
    }

    #[test]
    fn travel_time_matches_speed() {
        let leg = Leg {
            from: Location3D::new(0.0, 0.0, 50.0),
            to: Location3D::new(200.0, 0.0, 50.0),
            start: 3.0,
        };
        assert_eq!(leg.position(13.0, 20.0), leg.to);
        assert!(leg.position(12.0, 20.0).x < 200.0);
        assert_eq!(leg.position(8.0, 20.0).x, 100.0);
    }

    #[test]
    fn drone_never_teleports() {
        let mut s = state();
        s.request.poi = Location3D::new(100.0, 0.0, 100.0);
        let events = [TimelineEvent {
            time: 20.0,
            kind: EventKind::RequestChange {
                request: AppRequest {
                    poi: Location3D::new(-300.0, 200.0, 80.0),
                    ..s.request
                },
            },
        }];
        let cfg = LoopConfig {
            latency: 1.5,
            ..config(20.0, 80.0)
        };
        let r = run_timeline(&s, &events, &cfg, &SolverConfig::default()).unwrap();
        for w in r.samples.windows(2) {
            assert!(w[0].location.distance(&w[1].location) <= cfg.cruise_speed + 1e-9);
        }
        let last = r.samples.last().unwrap();
        assert!(last.location.distance(&r.intervals.last().unwrap().response.location) < 1e-9);
    }

    #[test]
    fn events_are_last_write_and_idempotent() {
        let s = state();
        let a = apply_event(&s, &load(0.0, "n2", 0.0)).unwrap();
        let b = apply_event(&a, &load(0.0, "n2", 5.0)).unwrap();
        assert_eq!(b.snapshot.state(2).load, 5.0);
        let c = apply_event(&b, &load(0.0, "n2", 5.0)).unwrap();
        assert_eq!(c.snapshot.state(2).load, 5.0);
        assert!(matches!(
            apply_event(&s, &load(0.0, "zz", 1.0)),
            Err(CdcpError::UnknownCell(_))
        ));
    }

    #[test]
    fn unknown_cell_rejected_up_front() {
        let err = run_timeline(&state(), &[load(5.0, "zz", 1.0)], &config(30.0, 60.0), &SolverConfig::default());
        assert!(matches!(err, Err(CdcpError::UnknownCell(_))));
    }

    #[test]
    fn staleness_no_op_and_shift() {
        let s = state();
        let solver = SolverConfig::default();
        let noop = staleness_gap(&s, &[load(10.0, "n1", 6.0)], &solver).unwrap();
        assert!(noop.gap_percent.abs() < 1e-9);
        let shift = staleness_gap(&s, &[load(10.0, "n1", 0.0)], &solver).unwrap();
        assert!(shift.gap_percent >= -1.0);
        assert!(shift.fresh_objective >= shift.stale_objective * 0.99);
        assert!(staleness_gap(&s, &[], &solver).is_err());
        assert!(staleness_gap(&s, &[load(1.0, "n1", 0.0), load(2.0, "n2", 9.0)], &solver).is_err());
        let both = staleness_gap(&s, &[load(5.0, "n1", 0.0), load(5.0, "n2", 12.0)], &solver).unwrap();
        assert!(both.fresh_objective >= both.stale_objective * 0.99);
    }

    #[test]
    fn response_is_small_and_passes_relaxation() {
        let s = state();
        let sol = solve_cdcp(&s.snapshot, &s.request, &SolverConfig::default()).unwrap();
        let r = build_response(&sol, &s.request);
        assert_eq!(r.relaxation, sol.relaxation_applied);
        assert_eq!(r.expected_uav_capacity, sol.uav_capacity);
        let worst = ControlResponse {
            location: Location3D::new(-1.2345678901234567e5, -9.876543210987654e4, -1.2345678901234567e3),
            direction: Direction::new(6.123456789012345, 3.0123456789012345),
            expected_uav_capacity: 1.2345678901234567e9,
            relaxation: 29.123456789012345,
        };
        assert!(worst.to_wire().len() < 256, "{}", worst.to_wire().len());
        let back: ControlResponse = serde_json::from_str(&worst.to_wire()).unwrap();
        assert_eq!(back, worst);
    }

    #[test]
    fn event_json_shape() {
        let e: TimelineEvent = serde_json::from_str(r#"{"time": 3, "kind": {"type": "load_change", "cell": "a", "load": 2}}"#).unwrap();
        assert_eq!(e, load(3.0, "a", 2.0));
        assert!(serde_json::from_str::<TimelineEvent>(r#"{"time": 3, "kind": {"type": "load_change", "cell": "a", "load": 2, "x": 1}}"#).is_err());
    }
}
