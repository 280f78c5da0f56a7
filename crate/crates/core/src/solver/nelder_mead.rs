//! Bounded Nelder-Mead over the five decision coordinates
//! `(x, y, z, azimuth, polar)`.
//!
//! Location coordinates of every vertex are projected onto the feasible
//! region. Angles are kept unwrapped inside the simplex and only wrapped when
//! the objective is evaluated, so the simplex never straddles a seam.

use crate::error::{CdcpError, Result};
use crate::geometry::{project_feasible, Direction, FeasibleRegion, Location3D};

use super::SolverConfig;

const DIM: usize = 5;
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const MAX_RESTARTS: usize = 3;

type Point = [f64; DIM];

#[derive(Debug, Clone)]
pub struct LocalSearchResult {
    pub location: Location3D,
    pub direction: Direction,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best value after each iteration; non-increasing.
    pub trace: Vec<f64>,
}

fn split(p: &Point) -> (Location3D, Direction) {
    (Location3D::new(p[0], p[1], p[2]), Direction::new(p[3], p[4]))
}

fn project(mut p: Point, region: &FeasibleRegion) -> Point {
    let q = project_feasible(Location3D::new(p[0], p[1], p[2]), region);
    p[0] = q.x;
    p[1] = q.y;
    p[2] = q.z;
    p
}

fn max_spread(simplex: &[Point]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Derivative-free descent from `start`. Terminates when every simplex edge
/// from the best vertex is shorter than `step_tolerance` or after
/// `max_local_iters` iterations per restart.
pub fn local_search<F>(
    start: (Location3D, Direction),
    region: &FeasibleRegion,
    config: &SolverConfig,
    mut objective: F,
) -> Result<LocalSearchResult>
where
    F: FnMut(Location3D, Direction) -> f64,
{
    let mut evaluations = 0usize;
    let mut eval = |p: &Point| {
        evaluations += 1;
        let (l, d) = split(p);
        objective(l, d)
    };

    let origin = project(
        [start.0.x, start.0.y, start.0.z, start.1.azimuth, start.1.polar],
        region,
    );
    let origin_value = eval(&origin);
    if !origin_value.is_finite() {
        return Err(CdcpError::NonFiniteStart);
    }

    let mut best = (origin, origin_value);
    let mut trace = vec![origin_value];
    let mut iterations = 0;
    let mut loc_step = (config.simplex_location_step * region.radius).max(config.step_tolerance);
    let mut ang_step = config.simplex_angle_step;

    for _ in 0..=MAX_RESTARTS {
        let before = best.1;
        let (point, value, iters) = run_simplex(best, loc_step, ang_step, region, config, &mut eval, &mut trace);
        iterations += iters;
        best = (point, value);
        if !(value < before) {
            break;
        }
        loc_step *= 0.5;
        ang_step *= 0.5;
    }

    let (location, direction) = split(&best.0);
    Ok(LocalSearchResult {
        location,
        direction,
        value: best.1,
        iterations,
        evaluations,
        trace,
    })
}

fn run_simplex<E>(
    start: (Point, f64),
    loc_step: f64,
    ang_step: f64,
    region: &FeasibleRegion,
    config: &SolverConfig,
    eval: &mut E,
    trace: &mut Vec<f64>,
) -> (Point, f64, usize)
where
    E: FnMut(&Point) -> f64,
{
    let mut simplex: Vec<Point> = vec![start.0];
    let mut values: Vec<f64> = vec![start.1];
    for i in 0..DIM {
        let step = if i < 3 { loc_step } else { ang_step };
        let mut v = start.0;
        v[i] += step;
        let mut v = project(v, region);
        if v == start.0 {
            // pinned against the boundary; try the opposite side
            let mut w = start.0;
            w[i] -= step;
            v = project(w, region);
        }
        values.push(eval(&v));
        simplex.push(v);
    }

    let mut iters = 0;
    while iters < config.max_local_iters {
        order(&mut simplex, &mut values);
        if max_spread(&simplex) < config.step_tolerance {
            break;
        }
        iters += 1;

        let worst = DIM;
        let mut centroid = [0.0; DIM];
        for v in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / DIM as f64;
            }
        }
        let along = |t: f64, from: &Point| -> Point {
            let mut p = [0.0; DIM];
            for k in 0..DIM {
                p[k] = centroid[k] + t * (centroid[k] - from[k]);
            }
            project(p, region)
        };

        let reflected = along(REFLECT, &simplex[worst]);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(REFLECT * EXPAND, &simplex[worst]);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[worst - 1] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let (contracted, reference) = if fr < values[worst] {
                (along(REFLECT * CONTRACT, &simplex[worst]), fr)
            } else {
                (along(-CONTRACT, &simplex[worst]), values[worst])
            };
            let fc = eval(&contracted);
            if fc < reference {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                let anchor = simplex[0];
                for i in 1..=DIM {
                    let mut p = [0.0; DIM];
                    for k in 0..DIM {
                        p[k] = anchor[k] + SHRINK * (simplex[i][k] - anchor[k]);
                    }
                    let p = project(p, region);
                    values[i] = eval(&p);
                    simplex[i] = p;
                }
            }
        }
        let current_best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let last = *trace.last().expect("trace starts non-empty");
        trace.push(current_best.min(last));
    }
    order(&mut simplex, &mut values);
    (simplex[0], values[0], iters)
}

/// Sorts vertices by value; NaN sorts last, ties keep their order.
fn order(simplex: &mut [Point], values: &mut [f64]) {
    let mut idx: Vec<usize> = (0..simplex.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let s: Vec<Point> = idx.iter().map(|&i| simplex[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    simplex.copy_from_slice(&s);
    values.copy_from_slice(&v);
}
