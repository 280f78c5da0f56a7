//! The comparison controllers NC, OSA, OSL and OSLA, and the per-request
//! comparison table against the optimizer.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{direction_to, project_feasible, Direction, Location3D};
use crate::netmodel::{
    cell_capacities, evaluate, evaluate_constraints, select_serving_cell, AppRequest,
    ConstraintReport, Evaluation, NetworkSnapshot,
};
use crate::solver::{solve_cdcp, Solution, SolverConfig};

/// Azimuth samples across the half-plane facing the serving station.
pub const AVERAGING_SAMPLES: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BaselineKind {
    /// POI location, uncontrolled direction.
    Nc,
    /// POI location, pointing at the serving station.
    Osa,
    /// Closest legal point to the serving station, uncontrolled direction.
    Osl,
    /// Closest legal point to the serving station, pointing at it.
    Osla,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [Self::Nc, Self::Osa, Self::Osl, Self::Osla];

    pub fn label(self) -> &'static str {
        match self {
            Self::Nc => "NC",
            Self::Osa => "OSA",
            Self::Osl => "OSL",
            Self::Osla => "OSLA",
        }
    }

    fn averaged(self) -> bool {
        matches!(self, Self::Nc | Self::Osl)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BaselineKind {
    type Err = CdcpError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| CdcpError::Parse(format!("unknown baseline `{s}`")))
    }
}

/// Directions the uncontrolled baselines average over: `AVERAGING_SAMPLES`
/// azimuths evenly spread over ±90° around `facing`, at its polar angle.
pub fn averaging_directions(facing: Direction) -> Vec<Direction> {
    let k = AVERAGING_SAMPLES;
    (0..k)
        .map(|i| {
            let t = -FRAC_PI_2 + std::f64::consts::PI * i as f64 / (k - 1) as f64;
            Direction::new(facing.azimuth + t, facing.polar)
        })
        .collect()
}

fn facing(from: Location3D, to: Location3D) -> Direction {
    // at the station itself every direction is boresight; pick the horizon
    direction_to(from, to).unwrap_or(Direction::new(0.0, FRAC_PI_2))
}

/// A baseline's answer together with its per-cell capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub solution: Solution,
    pub cell_capacities: Vec<f64>,
}

pub fn baseline_solution(kind: BaselineKind, snapshot: &NetworkSnapshot, request: &AppRequest) -> Result<Solution> {
    baseline_outcome(kind, snapshot, request).map(|o| o.solution)
}

/// Evaluates one baseline. For NC and OSL the objective and capacities are
/// means over [`averaging_directions`]; slacks are reported at the
/// representative (serving-facing) direction, but the point counts as
/// feasible only if every sampled direction is.
pub fn baseline_outcome(kind: BaselineKind, snapshot: &NetworkSnapshot, request: &AppRequest) -> Result<BaselineOutcome> {
    request.validate()?;
    let region = request.region();
    let serving = select_serving_cell(snapshot, project_feasible(request.poi, &region));
    let bs = snapshot.station(serving).location;
    let location = match kind {
        BaselineKind::Nc | BaselineKind::Osa => project_feasible(request.poi, &region),
        BaselineKind::Osl | BaselineKind::Osla => project_feasible(bs, &region),
    };
    let direction = facing(location, bs);
    let slacks = evaluate_constraints(snapshot, serving, request, location, direction);

    let (eval, capacities, feasible) = if kind.averaged() {
        let dirs = averaging_directions(direction);
        let n = dirs.len() as f64;
        let mut objective = 0.0;
        let mut uav = 0.0;
        let mut caps = vec![0.0; snapshot.len()];
        let mut all_feasible = true;
        for d in &dirs {
            let e = evaluate(snapshot, serving, location, *d);
            objective += e.objective / n;
            uav += e.uav_capacity / n;
            for (c, v) in caps.iter_mut().zip(cell_capacities(snapshot, serving, location, *d)) {
                *c += v / n;
            }
            all_feasible &= evaluate_constraints(snapshot, serving, request, location, *d).feasible;
        }
        let eval = Evaluation {
            objective,
            uav_capacity: uav,
            ..evaluate(snapshot, serving, location, direction)
        };
        (eval, caps, all_feasible)
    } else {
        let eval = evaluate(snapshot, serving, location, direction);
        (eval, cell_capacities(snapshot, serving, location, direction), slacks.feasible)
    };

    Ok(BaselineOutcome {
        solution: Solution {
            location,
            direction,
            serving,
            objective: eval.objective,
            uav_capacity: eval.uav_capacity,
            slacks,
            feasible,
            relaxation_applied: 0.0,
            solve_time: 0.0,
            seeds_evaluated: 0,
        },
        cell_capacities: capacities,
    })
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    /// `Opt` or a baseline label.
    pub method: String,
    pub location: Location3D,
    pub direction: Direction,
    pub objective: f64,
    pub uav_capacity: f64,
    pub cell_capacities: Vec<f64>,
    pub feasible: bool,
    pub relaxation_applied: f64,
    pub slacks: ConstraintReport,
}

impl ComparisonRow {
    fn new(method: &str, s: &Solution, cell_capacities: Vec<f64>) -> Self {
        Self {
            method: method.to_string(),
            location: s.location,
            direction: s.direction,
            objective: s.objective,
            uav_capacity: s.uav_capacity,
            cell_capacities,
            feasible: s.feasible,
            relaxation_applied: s.relaxation_applied,
            slacks: s.slacks,
        }
    }
}

/// Opt first, then NC, OSA, OSL, OSLA.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn opt(&self) -> &ComparisonRow {
        &self.rows[0]
    }

    pub fn baselines(&self) -> &[ComparisonRow] {
        &self.rows[1..]
    }

    /// Strongest baseline: the best feasible one, or the best overall when
    /// none is feasible.
    pub fn best_baseline(&self) -> &ComparisonRow {
        let pick = |feasible_only: bool| {
            self.baselines()
                .iter()
                .filter(|r| !feasible_only || r.feasible)
                .reduce(|a, b| if b.objective > a.objective { b } else { a })
        };
        pick(true).or_else(|| pick(false)).expect("four baselines")
    }

    /// Relative gain of Opt over the strongest baseline, in percent.
    pub fn gain_percent(&self) -> f64 {
        let best = self.best_baseline().objective;
        (self.opt().objective - best) / best * 100.0
    }
}

pub fn compare_all(snapshot: &NetworkSnapshot, request: &AppRequest, config: &SolverConfig) -> Result<ComparisonTable> {
    let opt = solve_cdcp(snapshot, request, config)?;
    let caps = cell_capacities(snapshot, opt.serving, opt.location, opt.direction);
    let mut rows = vec![ComparisonRow::new("Opt", &opt, caps)];
    for kind in BaselineKind::ALL {
        let o = baseline_outcome(kind, snapshot, request)?;
        rows.push(ComparisonRow::new(kind.label(), &o.solution, o.cell_capacities));
    }
    Ok(ComparisonTable { rows })
}
