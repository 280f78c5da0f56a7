//! Global solver for the drone control problem.
//!
//! The capacity objective is negated and minimized. One basin-hopping chain
//! runs from each seed returned by [`seed_set`]; each chain is a sequence of
//! bounded Nelder-Mead descents on a penalized objective. Distance and
//! altitude limits are enforced exactly by projection, the two SINR
//! constraints by an exterior quadratic penalty. Every point the chains
//! evaluate is checked against the exact constraints, and the best exactly
//! feasible point wins. When no feasible point exists the drone QoS
//! threshold is relaxed in steps.

mod nelder_mead;
mod seeds;

use std::f64::consts::PI;
use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{project_feasible, Direction, FeasibleRegion, Location3D};
use crate::netmodel::{
    evaluate, select_serving_cell, AppRequest, ConstraintReport, NetworkSnapshot, Thresholds,
};

pub use nelder_mead::{local_search, LocalSearchResult};
pub use seeds::seed_set;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Iteration cap per Nelder-Mead run.
    pub max_local_iters: usize,
    /// Simplex size (meters / radians) below which a descent stops.
    pub step_tolerance: f64,
    /// Penalty weight in bits/s per dB² of SINR violation.
    pub penalty_weight: f64,
    pub penalty_growth: f64,
    /// Extra descents with a grown penalty for chains that found no feasible point.
    pub penalty_restarts: usize,
    /// QoS relaxation step, dB.
    pub relaxation_step: f64,
    pub max_relaxation: f64,
    pub rng_seed: u64,
    /// Perturb-and-descend hops per chain after the first descent.
    pub hops: usize,
    /// Hop displacement as a fraction of `dis_max`.
    pub hop_location_step: f64,
    /// Hop angle displacement, radians. At π a hop can land anywhere on the
    /// sphere, which reaches the skyward basin the seeds never start in.
    pub hop_angle_step: f64,
    /// Initial simplex edge for location, as a fraction of `dis_max`.
    pub simplex_location_step: f64,
    /// Initial simplex edge for angles, radians.
    pub simplex_angle_step: f64,
    /// Run chains on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_local_iters: 400,
            step_tolerance: 1e-3,
            penalty_weight: 1e9,
            penalty_growth: 10.0,
            penalty_restarts: 2,
            relaxation_step: 1.0,
            max_relaxation: 30.0,
            rng_seed: 0,
            hops: 3,
            hop_location_step: 0.5,
            hop_angle_step: PI,
            simplex_location_step: 0.25,
            simplex_angle_step: 0.4,
            parallel: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.step_tolerance", self.step_tolerance),
            ("solver.penalty_weight", self.penalty_weight),
            ("solver.relaxation_step", self.relaxation_step),
            ("solver.max_relaxation", self.max_relaxation),
            ("solver.simplex_location_step", self.simplex_location_step),
            ("solver.simplex_angle_step", self.simplex_angle_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CdcpError::invalid(name, "must be positive"));
            }
        }
        if self.max_local_iters == 0 {
            return Err(CdcpError::invalid("solver.max_local_iters", "must be positive"));
        }
        if !(self.penalty_growth >= 1.0) {
            return Err(CdcpError::invalid("solver.penalty_growth", "must be at least 1"));
        }
        if self.relaxation_step > self.max_relaxation {
            return Err(CdcpError::invalid(
                "solver.relaxation_step",
                "must not exceed max_relaxation",
            ));
        }
        if !(self.hop_location_step >= 0.0) || !(self.hop_angle_step >= 0.0) {
            return Err(CdcpError::invalid("solver.hop_*", "must be non-negative"));
        }
        Ok(())
    }

    /// Relaxation levels tried after an infeasible first pass, ascending.
    fn relaxation_levels(&self) -> Vec<f64> {
        let steps = (self.max_relaxation / self.relaxation_step + 1e-9).floor() as usize;
        let mut levels: Vec<f64> = (1..=steps).map(|k| k as f64 * self.relaxation_step).collect();
        if levels.last().map_or(true, |&l| l < self.max_relaxation - 1e-9) {
            levels.push(self.max_relaxation);
        }
        levels
    }
}

/// Answer of the control service for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub location: Location3D,
    pub direction: Direction,
    /// Index of the serving station in the snapshot.
    pub serving: usize,
    /// Capacity objective, bits/s.
    pub objective: f64,
    pub uav_capacity: f64,
    /// Slacks against the thresholds in force, i.e. after relaxation.
    pub slacks: ConstraintReport,
    pub feasible: bool,
    /// QoS relaxation applied, dB.
    pub relaxation_applied: f64,
    /// Wall-clock seconds; excluded from equality-sensitive reports.
    pub solve_time: f64,
    pub seeds_evaluated: usize,
}

/// Negated objective plus `weight · Σ violation²` over the two SINR
/// constraints (dB). Geometric limits are not penalized.
pub fn penalized_objective(
    snapshot: &NetworkSnapshot,
    serving: usize,
    request: &AppRequest,
    l: Location3D,
    dir: Direction,
    weight: f64,
    relaxed_sinr_app_db: f64,
) -> f64 {
    let eval = evaluate(snapshot, serving, l, dir);
    let thresholds = Thresholds {
        sinr_min_db: request.sinr_min,
        sinr_app_db: relaxed_sinr_app_db,
    };
    let report = ConstraintReport::from_evaluation(&eval, &thresholds, request, l);
    -eval.objective + weight * report.sinr_violation_sq()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    location: Location3D,
    direction: Direction,
    objective: f64,
    violation: f64,
}

/// Tracks the best exactly-feasible and the least-infeasible point seen by
/// one chain.
#[derive(Debug, Clone, Default)]
struct Tracker {
    best_feasible: Option<Candidate>,
    least_infeasible: Option<Candidate>,
    /// Smallest QoS relaxation that would make some evaluated point feasible.
    min_required: Option<f64>,
    evaluations: usize,
}

impl Tracker {
    fn observe(&mut self, c: Candidate, report: &ConstraintReport) {
        let feasible = report.feasible;
        self.evaluations += 1;
        if let Some(r) = report.required_relaxation() {
            if self.min_required.map_or(true, |m| r < m) {
                self.min_required = Some(r);
            }
        }
        if feasible {
            if self.best_feasible.map_or(true, |b| c.objective > b.objective) {
                self.best_feasible = Some(c);
            }
        } else if self.least_infeasible.map_or(true, |b| {
            c.violation < b.violation || (c.violation == b.violation && c.objective > b.objective)
        }) {
            self.least_infeasible = Some(c);
        }
    }
}

struct Problem<'a> {
    snapshot: &'a NetworkSnapshot,
    request: &'a AppRequest,
    region: FeasibleRegion,
    serving: usize,
    config: &'a SolverConfig,
}

impl Problem<'_> {
    fn penalized(&self, tracker: &mut Tracker, thresholds: &Thresholds, weight: f64, l: Location3D, d: Direction) -> f64 {
        let eval = evaluate(self.snapshot, self.serving, l, d);
        let report = ConstraintReport::from_evaluation(&eval, thresholds, self.request, l);
        tracker.observe(
            Candidate {
                location: l,
                direction: d,
                objective: eval.objective,
                violation: report.total_violation(),
            },
            &report,
        );
        -eval.objective + weight * report.sinr_violation_sq()
    }

    /// One basin-hopping chain from a seed.
    fn run_chain(&self, thresholds: &Thresholds, index: usize, seed: (Location3D, Direction), salt: u64) -> Result<Tracker> {
        let cfg = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.rng_seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.rotate_left(32),
        );
        let mut tracker = Tracker::default();
        let mut weight = cfg.penalty_weight;

        let first = local_search(seed, &self.region, cfg, |l, d| {
            self.penalized(&mut tracker, thresholds, weight, l, d)
        });
        let mut current = match first {
            Ok(r) => r,
            // the seed itself is unusable (e.g. zero drone power); nothing to descend
            Err(CdcpError::NonFiniteStart) => return Ok(tracker),
            Err(e) => return Err(e),
        };
        for _ in 0..cfg.hops {
            let start = self.perturb(&mut rng, &current);
            let trial = local_search(start, &self.region, cfg, |l, d| {
                self.penalized(&mut tracker, thresholds, weight, l, d)
            })?;
            if trial.value < current.value {
                current = trial;
            }
        }
        for _ in 0..cfg.penalty_restarts {
            if tracker.best_feasible.is_some() {
                break;
            }
            weight *= cfg.penalty_growth;
            current = local_search((current.location, current.direction), &self.region, cfg, |l, d| {
                self.penalized(&mut tracker, thresholds, weight, l, d)
            })?;
        }
        Ok(tracker)
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, from: &LocalSearchResult) -> (Location3D, Direction) {
        let cfg = self.config;
        let r = cfg.hop_location_step * self.region.radius;
        let (dx, dy, dz) = loop {
            let v: (f64, f64, f64) = (
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            );
            if v.0 * v.0 + v.1 * v.1 + v.2 * v.2 <= 1.0 {
                break v;
            }
        };
        let l = project_feasible(
            Location3D::new(from.location.x + r * dx, from.location.y + r * dy, from.location.z + r * dz),
            &self.region,
        );
        let a = cfg.hop_angle_step;
        let d = Direction::new(
            from.direction.azimuth + a * rng.random_range(-1.0..=1.0),
            from.direction.polar + a * rng.random_range(-1.0..=1.0),
        );
        (l, d)
    }

    /// Runs every chain at `thresholds`. Returns the best feasible candidate
    /// (ties to the lowest seed index), the least-infeasible one, and the
    /// evaluation count.
    fn run_pass(&self, seeds: &[(Location3D, Direction)], thresholds: &Thresholds, salt: u64) -> Result<PassOutcome> {
        let chains: Vec<Result<Tracker>> = if self.config.parallel {
            seeds
                .par_iter()
                .enumerate()
                .map(|(i, s)| self.run_chain(thresholds, i, *s, salt))
                .collect()
        } else {
            seeds
                .iter()
                .enumerate()
                .map(|(i, s)| self.run_chain(thresholds, i, *s, salt))
                .collect()
        };
        let mut outcome = PassOutcome::default();
        for chain in chains {
            let t = chain?;
            outcome.evaluations += t.evaluations;
            if let Some(r) = t.min_required {
                if outcome.min_required.map_or(true, |m| r < m) {
                    outcome.min_required = Some(r);
                }
            }
            if let Some(c) = t.best_feasible {
                if outcome.best_feasible.map_or(true, |b| c.objective > b.objective) {
                    outcome.best_feasible = Some(c);
                }
            }
            if let Some(c) = t.least_infeasible {
                if outcome.least_infeasible.map_or(true, |b| {
                    c.violation < b.violation || (c.violation == b.violation && c.objective > b.objective)
                }) {
                    outcome.least_infeasible = Some(c);
                }
            }
        }
        Ok(outcome)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PassOutcome {
    best_feasible: Option<Candidate>,
    least_infeasible: Option<Candidate>,
    min_required: Option<f64>,
    evaluations: usize,
}

/// Solves the control problem for `request` on `snapshot`.
///
/// The serving station is the strongest one at the projected POI and stays
/// fixed during the search. If no feasible point is found, the QoS threshold
/// is lowered on the `relaxation_step` ladder up to `max_relaxation`; the
/// smallest level that yields a feasible point is located by bisection over
/// the ladder. If even `max_relaxation` fails, the least-infeasible point is
/// returned with `feasible == false`.
pub fn solve_cdcp(snapshot: &NetworkSnapshot, request: &AppRequest, config: &SolverConfig) -> Result<Solution> {
    let started = Instant::now();
    request.validate()?;
    config.validate()?;
    let region = request.region();
    let serving = select_serving_cell(snapshot, project_feasible(request.poi, &region));
    let problem = Problem {
        snapshot,
        request,
        region,
        serving,
        config,
    };
    let seeds = seed_set(snapshot, serving, request);
    let base = Thresholds::new(snapshot, serving, request);

    let mut passes = 1;
    let first = problem.run_pass(&seeds, &base, 0)?;
    let (candidate, relaxation, feasible) = match first.best_feasible {
        Some(c) => (c, 0.0, true),
        None => {
            let levels = config.relaxation_levels();
            let mut cache: BTreeMap<usize, PassOutcome> = BTreeMap::new();
            let mut solve_level = |k: usize, passes: &mut usize| -> Result<PassOutcome> {
                if let Some(o) = cache.get(&k) {
                    return Ok(*o);
                }
                *passes += 1;
                let o = problem.run_pass(&seeds, &base.relaxed(levels[k]), k as u64 + 1)?;
                cache.insert(k, o);
                Ok(o)
            };
            let top = levels.len() - 1;
            // first probe: the lowest level at which an already evaluated point passes
            let hint = first
                .min_required
                .and_then(|r| levels.iter().position(|&l| l >= r - 1e-12))
                .unwrap_or(top);
            // lo: highest level known infeasible (None = only level 0), hi: lowest known feasible
            let mut lo: Option<usize> = None;
            let mut hi: Option<usize> = None;
            if solve_level(hint, &mut passes)?.best_feasible.is_some() {
                hi = Some(hint);
            } else {
                lo = Some(hint);
                if hint < top && solve_level(top, &mut passes)?.best_feasible.is_some() {
                    hi = Some(top);
                }
            }
            match hi {
                None => {
                    let c = cache
                        .values()
                        .filter_map(|o| o.least_infeasible)
                        .chain(first.least_infeasible)
                        .reduce(|a, b| if b.violation < a.violation { b } else { a })
                        .expect("every pass evaluates at least one point");
                    (c, levels[top], false)
                }
                Some(mut hi) => {
                    // smallest feasible level, assuming feasibility grows with relaxation
                    loop {
                        let low = lo.map_or(0, |l| l + 1);
                        if low >= hi {
                            break;
                        }
                        let mid = low + (hi - low) / 2;
                        if solve_level(mid, &mut passes)?.best_feasible.is_some() {
                            hi = mid;
                        } else {
                            lo = Some(mid);
                        }
                    }
                    let c = solve_level(hi, &mut passes)?.best_feasible.expect("level known feasible");
                    (c, levels[hi], true)
                }
            }
        }
    };

    let thresholds = base.relaxed(relaxation);
    let eval = evaluate(snapshot, serving, candidate.location, candidate.direction);
    let slacks = ConstraintReport::from_evaluation(&eval, &thresholds, request, candidate.location);
    Ok(Solution {
        location: candidate.location,
        direction: candidate.direction,
        serving,
        objective: eval.objective,
        uav_capacity: eval.uav_capacity,
        feasible: feasible && slacks.feasible,
        slacks,
        relaxation_applied: relaxation,
        solve_time: started.elapsed().as_secs_f64(),
        seeds_evaluated: seeds.len() * passes,
    })
}
