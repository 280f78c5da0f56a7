//! Exhaustive grid search over location and direction, used to cross-check
//! the solver on small instances.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{project_feasible, Direction, Location3D};
use crate::netmodel::{
    evaluate, select_serving_cell, AppRequest, ConstraintReport, Evaluation, NetworkSnapshot, Thresholds,
};
use crate::solver::Solution;

/// Largest grid (in objective evaluations) `grid_search` accepts.
pub const EVALUATION_GUARD: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Points per axis over the region's bounding box.
    pub location_points: usize,
    /// Azimuths `k·2π/n`.
    pub azimuth_steps: usize,
    /// Polar angles spread over `[0, π]`, both ends included.
    pub polar_steps: usize,
    pub relaxation_step: f64,
    pub max_relaxation: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            location_points: 21,
            azimuth_steps: 36,
            polar_steps: 9,
            relaxation_step: 1.0,
            max_relaxation: 30.0,
        }
    }
}

impl GridSpec {
    pub fn with_resolution(location_points: usize) -> Self {
        Self {
            location_points,
            ..Self::default()
        }
    }

    pub fn evaluations(&self) -> u128 {
        (self.location_points as u128).pow(3) * self.azimuth_steps as u128 * self.polar_steps as u128
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grid.location_points", self.location_points),
            ("grid.azimuth_steps", self.azimuth_steps),
            ("grid.polar_steps", self.polar_steps),
        ] {
            if v < 2 {
                return Err(CdcpError::invalid(name, "must be at least 2"));
            }
        }
        if !(self.relaxation_step > 0.0) || !(self.max_relaxation >= self.relaxation_step) {
            return Err(CdcpError::invalid(
                "grid.relaxation_step",
                "must be positive and not exceed max_relaxation",
            ));
        }
        let evaluations = self.evaluations();
        if evaluations > EVALUATION_GUARD {
            return Err(CdcpError::GridTooLarge {
                evaluations,
                guard: EVALUATION_GUARD,
            });
        }
        Ok(())
    }

    fn directions(&self) -> Vec<Direction> {
        let mut out = Vec::with_capacity(self.azimuth_steps * self.polar_steps);
        for a in 0..self.azimuth_steps {
            for p in 0..self.polar_steps {
                out.push(Direction::new(
                    TAU * a as f64 / self.azimuth_steps as f64,
                    PI * p as f64 / (self.polar_steps - 1) as f64,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    location: Location3D,
    direction: Direction,
    objective: f64,
    eval: Evaluation,
    report: ConstraintReport,
}

/// Larger objective wins; equal objectives go to the lower linear index.
fn better(a: &Point, b: &Point) -> bool {
    a.objective > b.objective || (a.objective == b.objective && a.index < b.index)
}

fn fold_best<F>(points: &[Point], admit: F) -> Option<Point>
where
    F: Fn(&Point) -> bool + Sync,
{
    points
        .par_iter()
        .filter(|p| admit(p))
        .copied()
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
}

/// Best grid point. Grid locations are projected onto the feasible region
/// and deduplicated before evaluation. When no point is feasible, the QoS
/// threshold is relaxed on the `relaxation_step` ladder to the smallest level
/// admitting a grid point; if none does, the least-infeasible point is
/// returned with `feasible == false`.
pub fn grid_search(snapshot: &NetworkSnapshot, request: &AppRequest, spec: &GridSpec) -> Result<Solution> {
    let started = Instant::now();
    request.validate()?;
    spec.validate()?;
    let region = request.region();
    let serving = select_serving_cell(snapshot, project_feasible(request.poi, &region));
    let thresholds = Thresholds::new(snapshot, serving, request);

    let n = spec.location_points;
    let (lo, hi) = region.bounding_box();
    let at = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    let mut seen = HashSet::new();
    let mut locations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let l = project_feasible(
                    Location3D::new(at(lo.x, hi.x, i), at(lo.y, hi.y, j), at(lo.z, hi.z, k)),
                    &region,
                );
                if seen.insert([l.x.to_bits(), l.y.to_bits(), l.z.to_bits()]) {
                    locations.push(l);
                }
            }
        }
    }
    let directions = spec.directions();
    let nd = directions.len();

    let points: Vec<Point> = (0..locations.len() * nd)
        .into_par_iter()
        .map(|index| {
            let location = locations[index / nd];
            let direction = directions[index % nd];
            let eval = evaluate(snapshot, serving, location, direction);
            Point {
                index,
                location,
                direction,
                objective: eval.objective,
                eval,
                report: ConstraintReport::from_evaluation(&eval, &thresholds, request, location),
            }
        })
        .collect();

    let (best, relaxation, feasible) = match fold_best(&points, |p| p.report.feasible) {
        Some(p) => (p, 0.0, true),
        None => {
            let needed = points
                .iter()
                .filter_map(|p| p.report.required_relaxation())
                .fold(f64::INFINITY, f64::min);
            let steps = (needed / spec.relaxation_step - 1e-9).ceil().max(1.0);
            let level = (steps * spec.relaxation_step).min(spec.max_relaxation);
            let relaxed = thresholds.relaxed(level);
            let admitted = fold_best(&points, |p| {
                ConstraintReport::from_evaluation(&p.eval, &relaxed, request, p.location).feasible
            });
            if let Some(p) = admitted {
                (p, level, true)
            } else {
                let p = points
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.report.total_violation() < a.report.total_violation() { b } else { a })
                    .expect("grid is non-empty");
                (p, spec.max_relaxation, false)
            }
        }
    };

    let eval = evaluate(snapshot, serving, best.location, best.direction);
    let slacks = ConstraintReport::from_evaluation(&eval, &thresholds.relaxed(relaxation), request, best.location);
    Ok(Solution {
        location: best.location,
        direction: best.direction,
        serving,
        objective: eval.objective,
        uav_capacity: eval.uav_capacity,
        slacks,
        feasible: feasible && slacks.feasible,
        relaxation_applied: relaxation,
        solve_time: started.elapsed().as_secs_f64(),
        seeds_evaluated: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angular_offset, direction_to};
    use crate::netmodel::{evaluate_constraints, BaseStation, CellState};
    use crate::radio::{AntennaPattern, NoiseModel, PathLossParams};

    fn snapshot(cells: &[(&str, f64, f64, f64)]) -> NetworkSnapshot {
        let cells = cells
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
        NetworkSnapshot::new(cells, NoiseModel::default(), 23.0, AntennaPattern::default()).unwrap()
    }

    fn request(poi: Location3D, dis_max: f64) -> AppRequest {
        AppRequest {
            poi,
            dis_max,
            rate_app: 1e6,
            min_altitude: 20.0,
            sinr_min: 5.0,
        }
    }

    #[test]
    fn guard_rejects_huge_grids() {
        let spec = GridSpec::with_resolution(1000);
        assert!(matches!(spec.validate(), Err(CdcpError::GridTooLarge { .. })));
        assert!(GridSpec::with_resolution(1).validate().is_err());
        assert_eq!(GridSpec::default().evaluations(), 21 * 21 * 21 * 36 * 9);
    }

    #[test]
    fn single_station_points_within_a_grid_step() {
        let snap = snapshot(&[("a", 0.0, 0.0, 4.0)]);
        let req = request(Location3D::new(150.0, 60.0, 80.0), 50.0);
        let s = grid_search(&snap, &req, &GridSpec::with_resolution(11)).unwrap();
        assert!(s.feasible);
        let bore = direction_to(s.location, snap.station(0).location).unwrap();
        assert!(angular_offset(s.direction, bore) <= 10f64.to_radians() + 1e-9);
    }

    #[test]
    fn nested_grids_never_lose() {
        let snap = snapshot(&[("s", 0.0, 0.0, 4.0), ("n1", 1200.0, 900.0, 6.0), ("n2", 1000.0, -1300.0, 2.0)]);
        let req = request(Location3D::new(150.0, 40.0, 60.0), 80.0);
        let coarse = GridSpec {
            location_points: 5,
            azimuth_steps: 12,
            polar_steps: 5,
            ..GridSpec::default()
        };
        let fine = GridSpec {
            location_points: 9,
            azimuth_steps: 24,
            polar_steps: 9,
            ..GridSpec::default()
        };
        let a = grid_search(&snap, &req, &coarse).unwrap();
        let b = grid_search(&snap, &req, &fine).unwrap();
        assert!(a.feasible && b.feasible);
        assert!(b.objective >= a.objective);
    }

    #[test]
    fn feasibility_matches_constraint_check() {
        let snap = snapshot(&[("s", 0.0, 0.0, 4.0), ("n", 1500.0, 0.0, 4.0)]);
        let req = request(Location3D::new(100.0, 0.0, 60.0), 50.0);
        let s = grid_search(&snap, &req, &GridSpec::with_resolution(7)).unwrap();
        let report = evaluate_constraints(&snap, s.serving, &req, s.location, s.direction);
        assert_eq!(report.feasible, s.feasible);
        assert_eq!(report, s.slacks);
    }

    #[test]
    fn relaxes_when_nothing_is_feasible() {
        let snap = snapshot(&[("s", 0.0, 0.0, 4.0), ("n", 1500.0, 0.0, 4.0)]);
        let mut req = request(Location3D::new(100.0, 0.0, 60.0), 50.0);
        req.rate_app = 1e9;
        let s = grid_search(&snap, &req, &GridSpec::with_resolution(5)).unwrap();
        assert_eq!(s.relaxation_applied, 30.0);
        assert!(!s.feasible);
        assert!(req.region().contains(s.location));
    }
}
